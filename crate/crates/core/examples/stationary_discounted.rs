//! Discounted stationary values on a random graph, and how `r u` flattens
//! out as the discount shrinks.

use markov_hjb::fixtures::{random_model, FamilyMix};
use markov_hjb::stationary::solve_stationary;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> markov_hjb::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let model = random_model(&mut rng, 4, FamilyMix::Mixed)?;
    println!("{} nodes, {} edges", model.n_nodes(), model.graph().n_edges());
    for r in [1.0, 0.1, 0.01, 0.001] {
        let s = solve_stationary(&model, r)?;
        let scaled: Vec<f64> = s.u.iter().map(|u| r * u).collect();
        println!(
            "r = {r:<6} newton {:2}{}  residual {:.1e}  r u = {scaled:.6?}",
            s.iterations,
            if s.used_fallback { " (marched)" } else { "" },
            s.residual
        );
    }
    Ok(())
}
