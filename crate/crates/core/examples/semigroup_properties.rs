//! The de-drifted semigroup: nonexpansive in the sup norm, fixes the
//! corrector, and makes ordered data strictly ordered.

use markov_hjb::ergodic::{
    check_strong_max_principle, discount_sequence, semigroup_apply, solve_ergodic_vanishing_discount,
    DEFAULT_R_MIN,
};
use markov_hjb::fixtures::{random_model, FamilyMix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sup(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn main() -> markov_hjb::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let model = random_model(&mut rng, 4, FamilyMix::Entropic)?;
    let erg = solve_ergodic_vanishing_discount(&model, &discount_sequence(DEFAULT_R_MIN)?)?;

    let x: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
    let y: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
    println!("|x - y| = {:.6}", sup(&x, &y));
    for t in [0.1, 1.0, 10.0] {
        let (sx, sy) = (semigroup_apply(&model, erg.gamma, &x, t)?, semigroup_apply(&model, erg.gamma, &y, t)?);
        println!("t = {t:4}  |S x - S y| = {:.6}", sup(&sx, &sy));
    }

    let moved = semigroup_apply(&model, erg.gamma, &erg.xi, 5.0)?;
    println!("|S(5) xi - xi| = {:.2e}", sup(&moved, &erg.xi));

    let mut high = x.clone();
    high[2] += 0.5;
    let order = check_strong_max_principle(&model, erg.gamma, &x, &high, 0.5)?;
    println!("touching data, gap after t = 0.5: {:.4e}", order.min_gap);
    Ok(())
}
