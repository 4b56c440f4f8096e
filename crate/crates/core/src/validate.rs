//! Sampling checks of the structural properties a cost model must have.
//!
//! Failures are recorded as report entries with a witness, never as errors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cost::{CostFamily, CostModel};
use crate::error::{Error, Result};

const SEED: u64 = 0x00c0_ffee;
const TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Property {
    /// The supremum defining `H` dominates every sampled `λ` and is attained.
    SupremumAttained,
    Convexity,
    Monotonicity,
    StrictMonotonicity,
    BoundedBelow,
    Superlinearity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub node: usize,
    pub point: Vec<f64>,
    pub other: Option<Vec<f64>>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Pass,
    Fail(Witness),
    NotAsserted,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        matches!(self, Outcome::Pass)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub strict_monotone: bool,
    pub samples: usize,
    pub checks: Vec<(Property, Outcome)>,
}

impl ValidationReport {
    pub fn outcome(&self, property: Property) -> &Outcome {
        &self
            .checks
            .iter()
            .find(|(p, _)| *p == property)
            .expect("every property is reported")
            .1
    }

    /// True when every asserted property passed.
    pub fn all_passed(&self) -> bool {
        self.checks
            .iter()
            .all(|(_, o)| !matches!(o, Outcome::Fail(_)))
    }
}

/// Samples `sample_budget` random points per property (spread across nodes).
///
/// Strict monotonicity is probed when every edge shares one family: entropic
/// models are expected to pass, quadratic ones fail with a witness on the
/// flat region `p < −b`. Mixed models report it as not asserted.
pub fn validate_assumptions(model: &CostModel, sample_budget: usize) -> Result<ValidationReport> {
    if sample_budget < 100 {
        return Err(Error::InvalidParameter(format!(
            "sample budget must be at least 100, got {sample_budget}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let n = model.n_nodes();
    let node_of = |k: usize| k % n;
    let random_p = |rng: &mut ChaCha8Rng, i: usize| -> Vec<f64> {
        (0..model.graph().out_degree(i))
            .map(|_| rng.random_range(-3.0..3.0))
            .collect()
    };

    let mut checks = Vec::with_capacity(6);

    // P1
    let mut outcome = Outcome::Pass;
    'sup: for k in 0..sample_budget {
        let i = node_of(k);
        let p = random_p(&mut rng, i);
        let h = model.hamiltonian_raw(i, &p)?;
        let star: Vec<f64> = model
            .edge_costs(i)
            .iter()
            .zip(&p)
            .map(|(c, &pj)| c.optimal_intensity(pj))
            .collect::<Result<_>>()?;
        let attained = dot(&star, &p) - model.cost(i, &star)?;
        if (attained - h).abs() > TOL * (1.0 + h.abs()) {
            outcome = Outcome::Fail(Witness {
                node: i,
                point: p,
                other: Some(star),
                detail: format!("maximizer gives {attained}, H = {h}"),
            });
            break;
        }
        for _ in 0..4 {
            let lambdas: Vec<f64> = star
                .iter()
                .map(|&s| rng.random_range(0.0..(2.0 * s + 1.0)))
                .collect();
            let value = dot(&lambdas, &p) - model.cost(i, &lambdas)?;
            if value > h + TOL * (1.0 + h.abs()) {
                outcome = Outcome::Fail(Witness {
                    node: i,
                    point: p,
                    other: Some(lambdas),
                    detail: format!("objective {value} exceeds H = {h}"),
                });
                break 'sup;
            }
        }
    }
    checks.push((Property::SupremumAttained, outcome));

    // P2, midpoint-style convexity at a random weight
    let mut outcome = Outcome::Pass;
    for k in 0..sample_budget {
        let i = node_of(k);
        let p = random_p(&mut rng, i);
        let q = random_p(&mut rng, i);
        let t: f64 = rng.random();
        let mix: Vec<f64> = p.iter().zip(&q).map(|(a, b)| t * a + (1.0 - t) * b).collect();
        let lhs = model.hamiltonian_raw(i, &mix)?;
        let rhs = t * model.hamiltonian_raw(i, &p)? + (1.0 - t) * model.hamiltonian_raw(i, &q)?;
        if lhs > rhs + TOL * (1.0 + rhs.abs()) {
            outcome = Outcome::Fail(Witness {
                node: i,
                point: p,
                other: Some(q),
                detail: format!("H at weight {t} is {lhs} > chord {rhs}"),
            });
            break;
        }
    }
    checks.push((Property::Convexity, outcome));

    // P3
    let mut outcome = Outcome::Pass;
    for k in 0..sample_budget {
        let i = node_of(k);
        let p = random_p(&mut rng, i);
        let q: Vec<f64> = p.iter().map(|&x| x + rng.random_range(0.0..1.0)).collect();
        let (hp, hq) = (model.hamiltonian_raw(i, &p)?, model.hamiltonian_raw(i, &q)?);
        if hp > hq + TOL * (1.0 + hq.abs()) {
            outcome = Outcome::Fail(Witness {
                node: i,
                point: p,
                other: Some(q),
                detail: format!("H decreased from {hp} to {hq}"),
            });
            break;
        }
    }
    checks.push((Property::Monotonicity, outcome));

    checks.push((Property::StrictMonotonicity, strictness_probe(model, sample_budget, &mut rng)?));

    // A3
    let mut outcome = Outcome::Pass;
    'below: for k in 0..sample_budget {
        let i = node_of(k);
        let bound = model.cost_lower_bound(i);
        let lambdas: Vec<f64> = model
            .edge_costs(i)
            .iter()
            .map(|c| rng.random_range(0.0..(10.0 * c.scale() * c.shift().exp().max(1.0))))
            .collect();
        let value = model.cost(i, &lambdas)?;
        if value < bound - TOL * (1.0 + bound.abs()) {
            outcome = Outcome::Fail(Witness {
                node: i,
                point: lambdas,
                other: None,
                detail: format!("L = {value} below bound {bound}"),
            });
            break 'below;
        }
    }
    checks.push((Property::BoundedBelow, outcome));

    // A4: L(i, s·1)/s must grow without bound along a geometric ray.
    let mut outcome = Outcome::Pass;
    'growth: for i in 0..n {
        let base = model
            .edge_costs(i)
            .iter()
            .map(|c| c.scale() * c.shift().exp().max(1.0))
            .fold(1.0, f64::max);
        let mut previous = f64::NEG_INFINITY;
        let mut first = None;
        for e in 1..=8 {
            let s = base * 10f64.powi(e);
            let lambdas = vec![s; model.graph().out_degree(i)];
            let ratio = model.cost(i, &lambdas)? / s;
            if ratio <= previous {
                outcome = Outcome::Fail(Witness {
                    node: i,
                    point: lambdas,
                    other: None,
                    detail: format!("ratio L/|λ| stalled at {ratio}"),
                });
                break 'growth;
            }
            first.get_or_insert(ratio);
            previous = ratio;
        }
        if previous < first.unwrap() + 10.0 {
            outcome = Outcome::Fail(Witness {
                node: i,
                point: vec![base * 1e8],
                other: None,
                detail: format!("ratio grew only from {} to {previous}", first.unwrap()),
            });
            break;
        }
    }
    checks.push((Property::Superlinearity, outcome));

    Ok(ValidationReport {
        strict_monotone: model.strict_monotone(),
        samples: sample_budget,
        checks,
    })
}

fn strictness_probe(
    model: &CostModel,
    sample_budget: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Outcome> {
    let families: Vec<CostFamily> = model.families().collect();
    if families.iter().any(|&f| f != families[0]) {
        return Ok(Outcome::NotAsserted);
    }
    let n = model.n_nodes();
    for k in 0..=sample_budget {
        let i = k % n;
        let costs = model.edge_costs(i);
        let j = rng.random_range(0..costs.len());
        // first probe is placed deliberately below every kink −b
        let p: Vec<f64> = if k == 0 {
            costs.iter().map(|c| -c.shift() - 1.0).collect()
        } else {
            costs.iter().map(|_| rng.random_range(-3.0..3.0)).collect()
        };
        let mut q = p.clone();
        q[j] += if k == 0 { 0.5 } else { rng.random_range(1e-3..1.0) };
        let (hp, hq) = (model.hamiltonian_raw(i, &p)?, model.hamiltonian_raw(i, &q)?);
        if hq <= hp {
            return Ok(Outcome::Fail(Witness {
                node: i,
                point: p,
                other: Some(q),
                detail: format!("H flat along coordinate {j}: {hp} vs {hq}"),
            }));
        }
    }
    Ok(Outcome::Pass)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::EdgeCost;

    #[test]
    fn entropic_model_passes_everything() {
        let c = EdgeCost::entropic(1.0, 0.0).unwrap();
        let m = CostModel::from_edges(2, &[(0, 1, c), (1, 0, c)]).unwrap();
        let report = validate_assumptions(&m, 1000).unwrap();
        assert!(report.strict_monotone);
        for (property, outcome) in &report.checks {
            assert_eq!(outcome, &Outcome::Pass, "{property:?}");
        }
    }

    #[test]
    fn quadratic_model_fails_strictness_below_kink() {
        let c = EdgeCost::quadratic(1.0, 0.5).unwrap();
        let m = CostModel::from_edges(2, &[(0, 1, c), (1, 0, c)]).unwrap();
        let report = validate_assumptions(&m, 1000).unwrap();
        assert!(!report.strict_monotone);
        assert!(report.outcome(Property::Monotonicity).passed());
        match report.outcome(Property::StrictMonotonicity) {
            Outcome::Fail(w) => assert!(w.point.iter().all(|&p| p < -0.5)),
            other => panic!("expected a strictness witness, got {other:?}"),
        }
        assert!(report.outcome(Property::Convexity).passed());
        assert!(report.outcome(Property::Superlinearity).passed());
    }

    #[test]
    fn mixed_model_does_not_assert_strictness() {
        let e = EdgeCost::entropic(1.0, 0.0).unwrap();
        let q = EdgeCost::quadratic(1.0, 0.0).unwrap();
        let m = CostModel::from_edges(2, &[(0, 1, e), (1, 0, q)]).unwrap();
        let report = validate_assumptions(&m, 500).unwrap();
        assert!(!report.strict_monotone);
        assert_eq!(
            report.outcome(Property::StrictMonotonicity),
            &Outcome::NotAsserted
        );
        assert!(report.all_passed());
    }

    #[test]
    fn budget_floor() {
        let c = EdgeCost::entropic(1.0, 0.0).unwrap();
        let m = CostModel::from_edges(2, &[(0, 1, c), (1, 0, c)]).unwrap();
        assert!(validate_assumptions(&m, 99).is_err());
    }
}
