//! Long-horizon values approach `γT + ξ + q∞`.

use markov_hjb::ergodic::{discount_sequence, solve_ergodic_with_offset, DEFAULT_R_MIN, DEFAULT_T_MAX};
use markov_hjb::fixtures::{random_problem, FamilyMix};
use markov_hjb::hjb::solve_finite_horizon;
use markov_hjb::ode::Tolerances;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> markov_hjb::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let problem = random_problem(&mut rng, 4, FamilyMix::Entropic, 1.0, 0.0)?;
    let (erg, q) = solve_ergodic_with_offset(
        problem.model(),
        problem.terminal_payoff(),
        &discount_sequence(DEFAULT_R_MIN)?,
        DEFAULT_T_MAX,
    )?;
    let q_inf = q.q_infinity.expect("q settles on entropic instances");
    println!("gamma {:.10}  q_inf {:.10}  xi {:.6?}", erg.gamma, q_inf, erg.xi);

    let tol = Tolerances::new(1e-12, 1e-12)?;
    for t in [1.0, 2.0, 5.0, 10.0, 20.0, 40.0] {
        let traj = solve_finite_horizon(&problem.with_horizon(t)?, tol)?;
        let dev = traj
            .initial_values()
            .iter()
            .zip(&erg.xi)
            .map(|(u, x)| (u - (erg.gamma * t + x + q_inf)).abs())
            .fold(0.0, f64::max);
        println!("T = {t:4}  deviation {dev:.3e}");
    }
    Ok(())
}
