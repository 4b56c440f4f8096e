//! Random strongly connected test instances.
//!
//! A random Hamiltonian cycle guarantees strong connectivity; every other
//! ordered pair is added with probability 0.3. Scales are drawn from
//! `[0.5, 2]` and shifts from `[−0.5, 0.5]`.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::cost::{CostFamily, CostModel, EdgeCost};
use crate::error::{Error, Result};
use crate::hjb::Problem;

const EXTRA_EDGE_PROBABILITY: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyMix {
    Entropic,
    Quadratic,
    /// Each edge picks its family by a fair coin.
    Mixed,
}

impl std::str::FromStr for FamilyMix {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "entropic" => Ok(FamilyMix::Entropic),
            "quadratic" => Ok(FamilyMix::Quadratic),
            "mixed" => Ok(FamilyMix::Mixed),
            other => Err(Error::InvalidParameter(format!(
                "unknown family mix {other:?}, expected entropic, quadratic or mixed"
            ))),
        }
    }
}

/// Edges `(from, to, cost)` with 0-based nodes.
pub fn random_edges<R: Rng + ?Sized>(
    rng: &mut R,
    n_nodes: usize,
    mix: FamilyMix,
) -> Result<Vec<(usize, usize, EdgeCost)>> {
    if n_nodes < 2 {
        return Err(Error::TooFewNodes(n_nodes));
    }
    let mut order: Vec<usize> = (0..n_nodes).collect();
    order.shuffle(rng);
    let mut pairs: Vec<(usize, usize)> = (0..n_nodes)
        .map(|k| (order[k], order[(k + 1) % n_nodes]))
        .collect();
    for i in 0..n_nodes {
        for j in 0..n_nodes {
            if i != j && !pairs.contains(&(i, j)) && rng.random_bool(EXTRA_EDGE_PROBABILITY) {
                pairs.push((i, j));
            }
        }
    }
    pairs.sort_unstable();
    pairs
        .into_iter()
        .map(|(i, j)| {
            let family = match mix {
                FamilyMix::Entropic => CostFamily::Entropic,
                FamilyMix::Quadratic => CostFamily::Quadratic,
                FamilyMix::Mixed if rng.random_bool(0.5) => CostFamily::Entropic,
                FamilyMix::Mixed => CostFamily::Quadratic,
            };
            let scale = rng.random_range(0.5..=2.0);
            let shift = rng.random_range(-0.5..=0.5);
            Ok((i, j, EdgeCost::new(family, scale, shift)?))
        })
        .collect()
}

pub fn random_model<R: Rng + ?Sized>(rng: &mut R, n_nodes: usize, mix: FamilyMix) -> Result<CostModel> {
    CostModel::from_edges(n_nodes, &random_edges(rng, n_nodes, mix)?)
}

/// A random model with terminal payoff drawn from `[−1, 1]^N`.
pub fn random_problem<R: Rng + ?Sized>(
    rng: &mut R,
    n_nodes: usize,
    mix: FamilyMix,
    horizon: f64,
    discount: f64,
) -> Result<Problem> {
    let model = random_model(rng, n_nodes, mix)?;
    let g = (0..n_nodes).map(|_| rng.random_range(-1.0..=1.0)).collect();
    Problem::new(model, g, horizon, discount)
}
