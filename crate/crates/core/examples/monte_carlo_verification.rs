//! Simulates the chain under the extracted optimal policy and compares the
//! sample mean with the solved value.

use markov_hjb::fixtures::{random_problem, FamilyMix};
use markov_hjb::hjb::{extract_policy, solve_finite_horizon};
use markov_hjb::ode::Tolerances;
use markov_hjb::sim::{estimate_value_gap, simulate, trace_path};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> markov_hjb::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let problem = random_problem(&mut rng, 3, FamilyMix::Mixed, 1.0, 0.2)?;
    let traj = solve_finite_horizon(&problem, Tolerances::default())?;
    let policy = extract_policy(&problem, &traj)?;

    let trace = trace_path(&problem, &policy, 0, 1, 0)?;
    println!("one path: nodes {:?} at {:.3?}, objective {:.4}", trace.nodes, trace.jump_times, trace.objective);

    let reference = traj.initial_values()[0];
    for n in [100, 1_000, 10_000, 100_000] {
        let report = simulate(&problem, &policy, 0, n, 1)?;
        let z = estimate_value_gap(&report, reference)?;
        println!(
            "n = {n:6}  mean {:.5} ± {:.5}  V(1, 0) = {reference:.5}  z = {z:+.2}",
            report.mean_objective, report.std_error
        );
    }
    Ok(())
}
