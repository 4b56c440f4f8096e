//! Ergodic constant by both methods on the instance with a closed form:
//! `γ = √(a₁a₂)` and `ξ₂ = ½ ln(a₂/a₁)`.

use markov_hjb::cost::{CostModel, EdgeCost};
use markov_hjb::ergodic::{
    discount_sequence, solve_ergodic_direct, solve_ergodic_vanishing_discount, DEFAULT_R_MIN,
    DEFAULT_T_MAX,
};

fn main() -> markov_hjb::Result<()> {
    let (a1, a2) = (4.0f64, 1.0f64);
    let model = CostModel::from_edges(
        2,
        &[
            (0, 1, EdgeCost::entropic(a1, 0.0)?),
            (1, 0, EdgeCost::entropic(a2, 0.0)?),
        ],
    )?;
    let vd = solve_ergodic_vanishing_discount(&model, &discount_sequence(DEFAULT_R_MIN)?)?;
    let direct = solve_ergodic_direct(&model, DEFAULT_T_MAX)?;

    println!("closed form        gamma {:.12}  xi_2 {:.12}", (a1 * a2).sqrt(), 0.5 * (a2 / a1).ln());
    for s in [&vd, &direct] {
        println!("{:<18} gamma {:.12}  xi_2 {:.12}  residual {:.1e}", s.method, s.gamma, s.xi[1], s.residual);
    }
    println!("\nvanishing discount: r, max|r u - gamma|");
    for (r, d) in vd.diagnostics.iter().step_by(4) {
        println!("  {r:.3e}  {d:.3e}");
    }
    Ok(())
}
