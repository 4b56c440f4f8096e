//! Test-side oracles. They re-derive the Hamiltonian from the cost formulas
//! and use fixed-step schemes, sharing nothing with the library's solvers.

#![allow(dead_code)]

use markov_hjb::cost::{CostFamily, CostModel, EdgeCost};

/// Closed-form running cost written out from the definitions.
pub fn oracle_cost(c: &EdgeCost, lambda: f64) -> f64 {
    let (a, b) = (c.scale(), c.shift());
    match c.family() {
        CostFamily::Entropic if lambda == 0.0 => 0.0,
        CostFamily::Entropic => lambda * ((lambda / a).ln() - 1.0) - b * lambda,
        CostFamily::Quadratic => lambda * lambda / (2.0 * a) - b * lambda,
    }
}

/// Closed-form conjugate.
pub fn oracle_h(c: &EdgeCost, p: f64) -> f64 {
    let (a, b) = (c.scale(), c.shift());
    match c.family() {
        CostFamily::Entropic => a * (p + b).exp(),
        CostFamily::Quadratic => 0.5 * a * (p + b).max(0.0).powi(2),
    }
}

/// `sup_λ λp − L(λ)` by brute force over `λ ∈ [0, λ_max]`, refined twice
/// around the best grid point. Returns `(sup, argmax)`.
pub fn grid_max(c: &EdgeCost, p: f64, lambda_max: f64) -> (f64, f64) {
    let mut lo = 0.0;
    let mut hi = lambda_max;
    let mut best = (f64::NEG_INFINITY, 0.0);
    for _ in 0..3 {
        let m = 20_000;
        for k in 0..=m {
            let l = lo + (hi - lo) * k as f64 / m as f64;
            let v = l * p - oracle_cost(c, l);
            if v > best.0 {
                best = (v, l);
            }
        }
        let width = (hi - lo) / m as f64;
        lo = (best.1 - 2.0 * width).max(0.0);
        hi = best.1 + 2.0 * width;
    }
    best
}

fn oracle_rhs(model: &CostModel, r: f64, v: &[f64], out: &mut [f64]) {
    let graph = model.graph();
    for i in 0..v.len() {
        let h: f64 = model
            .edge_costs(i)
            .iter()
            .zip(graph.neighbors(i))
            .map(|(c, &j)| oracle_h(c, v[j] - v[i]))
            .sum();
        out[i] = h - r * v[i];
    }
}

/// Explicit Euler dynamic programming backward from `V(T) = g`.
pub fn euler_dp(model: &CostModel, g: &[f64], horizon: f64, r: f64, steps: usize) -> Vec<f64> {
    let dt = horizon / steps as f64;
    let mut v = g.to_vec();
    let mut d = vec![0.0; v.len()];
    for _ in 0..steps {
        oracle_rhs(model, r, &v, &mut d);
        for (x, dx) in v.iter_mut().zip(&d) {
            *x += dt * dx;
        }
    }
    v
}

/// Classical RK4 on `W' = H(ΔW) − rW` over `[0, span]`.
pub fn rk4_march(model: &CostModel, w0: &[f64], r: f64, span: f64, steps: usize) -> Vec<f64> {
    let n = w0.len();
    let dt = span / steps as f64;
    let mut w = w0.to_vec();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    for _ in 0..steps {
        oracle_rhs(model, r, &w, &mut k1);
        for i in 0..n {
            tmp[i] = w[i] + 0.5 * dt * k1[i];
        }
        oracle_rhs(model, r, &tmp, &mut k2);
        for i in 0..n {
            tmp[i] = w[i] + 0.5 * dt * k2[i];
        }
        oracle_rhs(model, r, &tmp, &mut k3);
        for i in 0..n {
            tmp[i] = w[i] + dt * k3[i];
        }
        oracle_rhs(model, r, &tmp, &mut k4);
        for i in 0..n {
            w[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    w
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn two_node_entropic(a1: f64, a2: f64) -> CostModel {
    CostModel::from_edges(
        2,
        &[
            (0, 1, EdgeCost::entropic(a1, 0.0).unwrap()),
            (1, 0, EdgeCost::entropic(a2, 0.0).unwrap()),
        ],
    )
    .unwrap()
}
