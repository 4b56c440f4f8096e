//! Reads a problem file, solves it and prints the canonical form.
//!
//! ```text
//! cargo run --example problem_file -- crates/core/examples/problems/ring3.json
//! ```

use std::path::PathBuf;

use markov_hjb::hjb::solve_finite_horizon;
use markov_hjb::output::values_csv;
use markov_hjb::problem_file::ProblemFile;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args_os().nth(1).map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/problems/asymmetric.json")
    });
    let file = ProblemFile::read(&path)?;
    print!("canonical: {}", file.to_canonical_string());

    let problem = file.to_problem()?;
    let traj = solve_finite_horizon(&problem, file.tolerances()?)?;
    let csv = values_csv(&traj);
    let mut lines = csv.lines();
    println!("{}", lines.next().unwrap());
    println!("{}", lines.next().unwrap());
    println!("... {} more rows", traj.n_points() - 1);
    Ok(())
}
