//! Sampling checks of the cost structure for each family.

use markov_hjb::fixtures::{random_model, FamilyMix};
use markov_hjb::validate::{validate_assumptions, Outcome};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> markov_hjb::Result<()> {
    for mix in [FamilyMix::Entropic, FamilyMix::Quadratic, FamilyMix::Mixed] {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let model = random_model(&mut rng, 4, mix)?;
        let report = validate_assumptions(&model, 500)?;
        println!("{mix:?}: strictly monotone = {}", report.strict_monotone);
        for (property, outcome) in &report.checks {
            match outcome {
                Outcome::Pass => println!("  {property:?}: pass"),
                Outcome::NotAsserted => println!("  {property:?}: not asserted"),
                Outcome::Fail(w) => println!("  {property:?}: FAIL at node {} ({})", w.node + 1, w.detail),
            }
        }
    }
    Ok(())
}
