//! Finite-horizon values for a two-node chain, printed at a few times.

use markov_hjb::cost::{CostModel, EdgeCost};
use markov_hjb::hjb::{solve_finite_horizon, Problem};
use markov_hjb::ode::Tolerances;

fn main() -> markov_hjb::Result<()> {
    let model = CostModel::from_edges(
        2,
        &[
            (0, 1, EdgeCost::entropic(4.0, 0.0)?),
            (1, 0, EdgeCost::entropic(1.0, 0.0)?),
        ],
    )?;
    let problem = Problem::new(model, vec![0.5, -0.25], 2.0, 0.1)?;
    let traj = solve_finite_horizon(&problem, Tolerances::new(1e-10, 1e-12)?)?;

    println!("{} grid points, {} steps, residual {:.2e}", traj.n_points(), traj.step_count, traj.max_residual);
    for k in (0..traj.n_points()).step_by(64) {
        println!("t = {:5.3}  V = {:?}", traj.grid[k], traj.values[k]);
    }
    println!("t = {:5.3}  V = {:?}", problem.horizon(), traj.terminal_values());
    Ok(())
}
