//! Per-edge cost families and their Hamiltonians.
//!
//! The running cost at node `i` is a sum of independent per-edge costs
//! `L(i, λ) = Σ_j l_ij(λ_ij)`, so the Hamiltonian
//! `H(i, p) = sup_{λ ≥ 0} Σ_j λ_j p_j − L(i, λ)` splits into a sum of
//! one-dimensional conjugates, each available in closed form:
//!
//! | family    | `l(λ)`                          | `h(p)`                 | argmax            |
//! |-----------|---------------------------------|------------------------|-------------------|
//! | entropic  | `λ (ln(λ/a) − 1) − b λ`         | `a e^{p+b}`            | `a e^{p+b}`       |
//! | quadratic | `λ² / (2a) − b λ`               | `a ((p+b)⁺)² / 2`      | `a (p+b)⁺`        |
//!
//! The entropic cost is extended by continuity with `l(0) = 0`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostFamily {
    Entropic,
    Quadratic,
}

impl fmt::Display for CostFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostFamily::Entropic => f.write_str("entropic"),
            CostFamily::Quadratic => f.write_str("quadratic"),
        }
    }
}

/// Cost of controlling the intensity of a single edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeCost {
    family: CostFamily,
    scale: f64,
    shift: f64,
}

impl EdgeCost {
    pub fn new(family: CostFamily, scale: f64, shift: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "edge cost scale must be positive and finite, got {scale}"
            )));
        }
        if !shift.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "edge cost shift must be finite, got {shift}"
            )));
        }
        Ok(Self {
            family,
            scale,
            shift,
        })
    }

    pub fn entropic(scale: f64, shift: f64) -> Result<Self> {
        Self::new(CostFamily::Entropic, scale, shift)
    }

    pub fn quadratic(scale: f64, shift: f64) -> Result<Self> {
        Self::new(CostFamily::Quadratic, scale, shift)
    }

    pub fn family(&self) -> CostFamily {
        self.family
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// `l(λ)` for `λ ≥ 0`. The caller guarantees non-negativity.
    pub fn cost(&self, lambda: f64) -> f64 {
        let (a, b) = (self.scale, self.shift);
        match self.family {
            CostFamily::Entropic => {
                if lambda == 0.0 {
                    0.0
                } else {
                    lambda * ((lambda / a).ln() - 1.0) - b * lambda
                }
            }
            CostFamily::Quadratic => lambda * lambda / (2.0 * a) - b * lambda,
        }
    }

    /// Conjugate `h(p) = sup_{λ ≥ 0} λ p − l(λ)`.
    pub fn hamiltonian(&self, p: f64) -> Result<f64> {
        let (a, b) = (self.scale, self.shift);
        let value = match self.family {
            CostFamily::Entropic => a * (p + b).exp(),
            CostFamily::Quadratic => {
                let x = (p + b).max(0.0);
                0.5 * a * x * x
            }
        };
        finite(value, p)
    }

    /// The unique maximizer of `λ p − l(λ)` over `λ ≥ 0`; also `h'(p)`.
    pub fn optimal_intensity(&self, p: f64) -> Result<f64> {
        let (a, b) = (self.scale, self.shift);
        let value = match self.family {
            CostFamily::Entropic => a * (p + b).exp(),
            CostFamily::Quadratic => a * (p + b).max(0.0),
        };
        finite(value, p)
    }

    /// `min_{λ ≥ 0} l(λ)`, which equals `−h(0)`.
    pub fn lower_bound(&self) -> f64 {
        let (a, b) = (self.scale, self.shift);
        match self.family {
            CostFamily::Entropic => -a * b.exp(),
            CostFamily::Quadratic => {
                let x = b.max(0.0);
                -0.5 * a * x * x
            }
        }
    }
}

fn finite(value: f64, p: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NumericOverflow(format!(
            "edge Hamiltonian not representable at p = {p}"
        )))
    }
}

/// Payoff differences `p_j`, one per out-neighbor of a node.
#[derive(Debug, Clone, PartialEq)]
pub struct PVector {
    node: usize,
    values: Vec<f64>,
}

impl PVector {
    pub fn new(graph: &Graph, node: usize, values: Vec<f64>) -> Result<Self> {
        if node >= graph.n_nodes() {
            return Err(Error::InvalidParameter(format!("node {node} out of range")));
        }
        let expected = graph.out_degree(node);
        if values.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: values.len(),
            });
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "payoff difference must be finite, got {v}"
            )));
        }
        Ok(Self { node, values })
    }

    /// Differences `(u_j − u_i)_{j ∈ V(i)}` of a value vector.
    pub fn from_values(graph: &Graph, node: usize, u: &[f64]) -> Result<Self> {
        if u.len() != graph.n_nodes() {
            return Err(Error::DimensionMismatch {
                expected: graph.n_nodes(),
                got: u.len(),
            });
        }
        let values = graph.neighbors(node).iter().map(|&j| u[j] - u[node]).collect();
        Self::new(graph, node, values)
    }

    pub fn node(&self) -> usize {
        self.node
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// A graph together with one [`EdgeCost`] per edge.
#[derive(Debug, Clone, PartialEq)]
pub struct CostModel {
    graph: Graph,
    // CSR order, aligned with `graph.edge_range`.
    edges: Vec<EdgeCost>,
    strict_monotone: bool,
}

impl CostModel {
    /// `costs` is given in the order of the edge list used to build `graph`.
    pub fn new(graph: Graph, costs: &[EdgeCost]) -> Result<Self> {
        if costs.len() != graph.n_edges() {
            return Err(Error::DimensionMismatch {
                expected: graph.n_edges(),
                got: costs.len(),
            });
        }
        let edges: Vec<EdgeCost> = (0..graph.n_edges())
            .map(|e| costs[graph.input_index(e)])
            .collect();
        let strict_monotone = edges.iter().all(|c| c.family == CostFamily::Entropic);
        Ok(Self {
            graph,
            edges,
            strict_monotone,
        })
    }

    /// Builds graph and model from `(from, to, cost)` triples.
    pub fn from_edges(n_nodes: usize, edges: &[(usize, usize, EdgeCost)]) -> Result<Self> {
        let pairs: Vec<(usize, usize)> = edges.iter().map(|&(i, j, _)| (i, j)).collect();
        let costs: Vec<EdgeCost> = edges.iter().map(|&(_, _, c)| c).collect();
        Self::new(Graph::new(n_nodes, &pairs)?, &costs)
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn n_nodes(&self) -> usize {
        self.graph.n_nodes()
    }

    /// True iff every edge is entropic, in which case every `H(i, ·)` is
    /// strictly increasing in each coordinate.
    pub fn strict_monotone(&self) -> bool {
        self.strict_monotone
    }

    /// Costs of the edges leaving node `i`, aligned with `graph.neighbors(i)`.
    pub fn edge_costs(&self, i: usize) -> &[EdgeCost] {
        &self.edges[self.graph.edge_range(i)]
    }

    /// Cost of CSR edge `e`.
    pub fn edge_cost(&self, e: usize) -> &EdgeCost {
        &self.edges[e]
    }

    pub fn families(&self) -> impl Iterator<Item = CostFamily> + '_ {
        self.edges.iter().map(|c| c.family)
    }

    fn check_len(&self, i: usize, len: usize) -> Result<()> {
        if i >= self.n_nodes() {
            return Err(Error::InvalidParameter(format!("node {i} out of range")));
        }
        let expected = self.graph.out_degree(i);
        if len != expected {
            return Err(Error::DimensionMismatch { expected, got: len });
        }
        Ok(())
    }

    /// `L(i, λ)` for a non-negative intensity vector over `V(i)`.
    pub fn cost(&self, i: usize, lambdas: &[f64]) -> Result<f64> {
        self.check_len(i, lambdas.len())?;
        let mut total = 0.0;
        for (edge, (&lambda, c)) in lambdas.iter().zip(self.edge_costs(i)).enumerate() {
            if !lambda.is_finite() || lambda < 0.0 {
                return Err(Error::NegativeIntensity {
                    node: i,
                    edge,
                    value: lambda,
                });
            }
            total += c.cost(lambda);
        }
        Ok(total)
    }

    /// `H(i, p)`.
    pub fn hamiltonian(&self, p: &PVector) -> Result<f64> {
        self.check_len(p.node, p.values.len())?;
        self.hamiltonian_raw(p.node, &p.values)
    }

    /// `λ*(i, p)`, the maximizer attaining `H(i, p)`.
    pub fn optimal_intensities(&self, p: &PVector) -> Result<Vec<f64>> {
        self.check_len(p.node, p.values.len())?;
        self.edge_costs(p.node)
            .iter()
            .zip(&p.values)
            .map(|(c, &pj)| c.optimal_intensity(pj))
            .collect()
    }

    /// `Σ_j C̲_j`, the analytic lower bound of `L(i, ·)` on the orthant.
    pub fn cost_lower_bound(&self, i: usize) -> f64 {
        self.edge_costs(i).iter().map(EdgeCost::lower_bound).sum()
    }

    pub(crate) fn hamiltonian_raw(&self, i: usize, p: &[f64]) -> Result<f64> {
        let mut total = 0.0;
        for (c, &pj) in self.edge_costs(i).iter().zip(p) {
            total += c.hamiltonian(pj)?;
        }
        Ok(total)
    }

    /// `H(i, (u_j − u_i)_j)` evaluated directly from a value vector.
    pub fn hamiltonian_at(&self, i: usize, u: &[f64]) -> Result<f64> {
        let ui = u[i];
        let mut total = 0.0;
        for (c, &j) in self.edge_costs(i).iter().zip(self.graph.neighbors(i)) {
            total += c.hamiltonian(u[j] - ui)?;
        }
        Ok(total)
    }

    /// Writes `λ*(i, (u_j − u_i)_j)` into `out` (length `|V(i)|`).
    pub fn intensities_at(&self, i: usize, u: &[f64], out: &mut [f64]) -> Result<()> {
        let ui = u[i];
        for ((c, &j), slot) in self
            .edge_costs(i)
            .iter()
            .zip(self.graph.neighbors(i))
            .zip(out.iter_mut())
        {
            *slot = c.optimal_intensity(u[j] - ui)?;
        }
        Ok(())
    }

    /// Optimal intensities for every CSR edge given a value vector.
    pub fn all_intensities_at(&self, u: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.graph.n_edges()];
        for i in 0..self.n_nodes() {
            let range = self.graph.edge_range(i);
            self.intensities_at(i, u, &mut out[range])?;
        }
        Ok(out)
    }

    /// Writes `H(i, Δu)` for every node into `out`.
    pub fn hamiltonians_at(&self, u: &[f64], out: &mut [f64]) -> Result<()> {
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = self.hamiltonian_at(i, u)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(c: EdgeCost) -> CostModel {
        CostModel::from_edges(2, &[(0, 1, c), (1, 0, c)]).unwrap()
    }

    #[test]
    fn cost_examples() {
        let m = single(EdgeCost::entropic(1.0, 0.0).unwrap());
        assert_eq!(m.cost(0, &[1.0]).unwrap(), -1.0);
        let m = single(EdgeCost::quadratic(2.0, 0.0).unwrap());
        assert_eq!(m.cost(0, &[4.0]).unwrap(), 4.0);
        // 2 (ln(2/2) − 1) − 1·2
        let m = single(EdgeCost::entropic(2.0, 1.0).unwrap());
        let oracle = 2.0 * ((2.0f64 / 2.0).ln() - 1.0) - 1.0 * 2.0;
        assert_eq!(m.cost(0, &[2.0]).unwrap(), oracle);
        assert_eq!(oracle, -4.0);
    }

    #[test]
    fn entropic_cost_vanishes_at_zero() {
        let c = EdgeCost::entropic(3.0, 0.7).unwrap();
        assert_eq!(c.cost(0.0), 0.0);
        assert!(c.cost(1e-300).abs() < 1e-290);
    }

    #[test]
    fn negative_intensity_rejected() {
        let m = single(EdgeCost::entropic(1.0, 0.0).unwrap());
        assert!(matches!(
            m.cost(0, &[-0.5]),
            Err(Error::NegativeIntensity { node: 0, edge: 0, .. })
        ));
        assert!(matches!(
            m.cost(0, &[1.0, 2.0]),
            Err(Error::DimensionMismatch { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn hamiltonian_examples() {
        let g = Graph::new(2, &[(0, 1), (1, 0)]).unwrap();
        let m = single(EdgeCost::entropic(1.0, 0.0).unwrap());
        let p = PVector::new(&g, 0, vec![0.0]).unwrap();
        assert_eq!(m.hamiltonian(&p).unwrap(), 1.0);
        assert_eq!(m.optimal_intensities(&p).unwrap(), vec![1.0]);

        let m = single(EdgeCost::quadratic(1.0, 0.0).unwrap());
        let p = PVector::new(&g, 0, vec![-5.0]).unwrap();
        assert_eq!(m.hamiltonian(&p).unwrap(), 0.0);
        assert_eq!(m.optimal_intensities(&p).unwrap(), vec![0.0]);
    }

    #[test]
    fn overflow_reported() {
        let g = Graph::new(2, &[(0, 1), (1, 0)]).unwrap();
        let m = single(EdgeCost::entropic(1.0, 0.0).unwrap());
        let p = PVector::new(&g, 0, vec![800.0]).unwrap();
        assert!(matches!(m.hamiltonian(&p), Err(Error::NumericOverflow(_))));
        assert!(matches!(
            m.optimal_intensities(&p),
            Err(Error::NumericOverflow(_))
        ));
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(EdgeCost::entropic(0.0, 0.0).is_err());
        assert!(EdgeCost::quadratic(-1.0, 0.0).is_err());
        assert!(EdgeCost::quadratic(1.0, f64::NAN).is_err());
        let g = Graph::new(2, &[(0, 1), (1, 0)]).unwrap();
        assert!(PVector::new(&g, 0, vec![f64::INFINITY]).is_err());
        assert!(PVector::new(&g, 0, vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn strict_flag_follows_families() {
        let e = EdgeCost::entropic(1.0, 0.0).unwrap();
        let q = EdgeCost::quadratic(1.0, 0.0).unwrap();
        assert!(single(e).strict_monotone());
        assert!(!single(q).strict_monotone());
        let mixed = CostModel::from_edges(2, &[(0, 1, e), (1, 0, q)]).unwrap();
        assert!(!mixed.strict_monotone());
    }

    #[test]
    fn costs_follow_input_order() {
        let a = EdgeCost::entropic(1.0, 0.0).unwrap();
        let b = EdgeCost::entropic(2.0, 0.0).unwrap();
        let c = EdgeCost::entropic(3.0, 0.0).unwrap();
        let m = CostModel::from_edges(3, &[(1, 0, a), (0, 2, b), (0, 1, c), (2, 0, a)]).unwrap();
        assert_eq!(m.graph().neighbors(0), &[2, 1]);
        assert_eq!(m.edge_costs(0)[0].scale(), 2.0);
        assert_eq!(m.edge_costs(0)[1].scale(), 3.0);
    }

    #[test]
    fn lower_bound_is_attained() {
        for c in [
            EdgeCost::entropic(2.0, 0.3).unwrap(),
            EdgeCost::quadratic(1.5, 0.8).unwrap(),
            EdgeCost::quadratic(1.5, -0.8).unwrap(),
        ] {
            let at = c.optimal_intensity(0.0).unwrap();
            assert!((c.cost(at) - c.lower_bound()).abs() < 1e-12);
        }
    }
}
