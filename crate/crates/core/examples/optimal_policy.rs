//! Feedback intensities from a solved trajectory. With a very negative
//! payoff at node 2 the quadratic control stops pushing towards it.

use markov_hjb::cost::{CostModel, EdgeCost};
use markov_hjb::hjb::{extract_policy, solve_finite_horizon, Policy, Problem};
use markov_hjb::ode::Tolerances;

fn main() -> markov_hjb::Result<()> {
    let model = CostModel::from_edges(
        2,
        &[
            (0, 1, EdgeCost::quadratic(1.0, 0.5)?),
            (1, 0, EdgeCost::quadratic(2.0, -0.25)?),
        ],
    )?;
    let problem = Problem::new(model, vec![0.0, -5.0], 1.0, 0.0)?;
    let traj = solve_finite_horizon(&problem, Tolerances::default())?;
    let Policy::TimeVarying { grid, tables } = extract_policy(&problem, &traj)? else {
        unreachable!("finite-horizon policies are time-varying");
    };
    println!("     t   lambda(1,2)  lambda(2,1)");
    for k in (0..grid.len()).step_by(51) {
        println!("{:6.3}  {:11.6}  {:11.6}", grid[k], tables[k][0], tables[k][1]);
    }
    Ok(())
}
