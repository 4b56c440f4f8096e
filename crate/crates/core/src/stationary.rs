//! Discounted stationary Bellman equation
//!
//! ```text
//! −r u_i + H(i, (u_j − u_i)_{j ∈ V(i)}) = 0
//! ```
//!
//! solved by damped Newton. The Jacobian comes from the envelope theorem:
//! row `i` has `λ*_ij` off the diagonal and `−r − Σ_j λ*_ij` on it. When
//! Newton stalls, the time-dependent equation is marched forward towards its
//! steady state and Newton restarts from there.

use nalgebra::{DMatrix, DVector};

use crate::cost::CostModel;
use crate::error::{Error, Result};
use crate::ode::{self, Tolerances};

const MAX_NEWTON: usize = 100;
const MAX_HALVINGS: usize = 40;
const MAX_MARCH_CHUNKS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct StationaryValue {
    pub discount: f64,
    pub u: Vec<f64>,
    /// `max_i |−r u_i + H(i, Δu)|`.
    pub residual: f64,
    pub iterations: usize,
    /// True when Newton needed the time-marching restart.
    pub used_fallback: bool,
}

/// Acceptance threshold for a stationary solution: `1e−10 (1 + max|u|)`.
pub fn stationary_tolerance(u: &[f64]) -> f64 {
    1e-10 * (1.0 + u.iter().fold(0.0f64, |m, x| m.max(x.abs())))
}

/// Solves the discounted equation from `u = 0`.
pub fn solve_stationary(model: &CostModel, r: f64) -> Result<StationaryValue> {
    solve_stationary_from(model, r, &vec![0.0; model.n_nodes()])
}

/// Solves the discounted equation from a caller-supplied initial guess.
pub fn solve_stationary_from(model: &CostModel, r: f64, guess: &[f64]) -> Result<StationaryValue> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "discount must be positive, got {r}"
        )));
    }
    if guess.len() != model.n_nodes() {
        return Err(Error::DimensionMismatch {
            expected: model.n_nodes(),
            got: guess.len(),
        });
    }

    let mut u = guess.to_vec();
    let mut iterations = 0;
    let mut used_fallback = false;
    loop {
        match newton(model, r, &mut u, &mut iterations) {
            Ok(residual) => {
                return Ok(StationaryValue {
                    discount: r,
                    u,
                    residual,
                    iterations,
                    used_fallback,
                })
            }
            Err(stalled_at) if !used_fallback => {
                used_fallback = true;
                // march from whichever of the stalled iterate and the origin
                // is closer to balance
                let origin = vec![0.0; u.len()];
                let mut scratch = vec![0.0; u.len()];
                let at_origin = bellman_residual(model, r, &origin, &mut scratch)
                    .unwrap_or(f64::INFINITY);
                let start = if stalled_at <= at_origin { u.clone() } else { origin };
                u = march_to_steady_state(model, r, &start)?;
            }
            Err(residual) => {
                return Err(Error::NoConvergence(format!(
                    "stationary solve at r = {r} stalled with residual {residual:e}"
                )))
            }
        }
    }
}

/// `F_i(u) = −r u_i + H(i, Δu)`; `None` when `H` overflows.
fn bellman_residual(model: &CostModel, r: f64, u: &[f64], out: &mut [f64]) -> Option<f64> {
    let mut worst: f64 = 0.0;
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = model.hamiltonian_at(i, u).ok()? - r * u[i];
        worst = worst.max(slot.abs());
    }
    Some(worst)
}

// Ok(residual) once converged; Err(residual) when stalled.
fn newton(
    model: &CostModel,
    r: f64,
    u: &mut [f64],
    iterations: &mut usize,
) -> std::result::Result<f64, f64> {
    let n = u.len();
    let graph = model.graph();
    let mut f = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut f_trial = vec![0.0; n];
    let mut lambdas = vec![0.0; graph.n_edges()];

    let Some(mut res) = bellman_residual(model, r, u, &mut f) else {
        return Err(f64::INFINITY);
    };
    let mut polish = 0;
    for _ in 0..MAX_NEWTON {
        let converged = res <= stationary_tolerance(u);
        if converged && (res == 0.0 || polish >= 3) {
            return Ok(res);
        }
        *iterations += 1;

        let mut jac = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            let range = graph.edge_range(i);
            if model.intensities_at(i, u, &mut lambdas[range.clone()]).is_err() {
                return Err(res);
            }
            jac[(i, i)] = -r;
            for (e, &j) in range.zip(graph.neighbors(i)) {
                jac[(i, j)] += lambdas[e];
                jac[(i, i)] -= lambdas[e];
            }
        }
        let Some(step) = jac.lu().solve(&DVector::from_iterator(n, f.iter().map(|x| -x))) else {
            return if converged { Ok(res) } else { Err(res) };
        };

        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            for i in 0..n {
                trial[i] = u[i] + alpha * step[i];
            }
            if let Some(tr) = bellman_residual(model, r, &trial, &mut f_trial) {
                if tr < res {
                    accepted = Some(tr);
                    break;
                }
            }
            alpha *= 0.5;
        }
        match accepted {
            Some(tr) => {
                if converged && tr > 0.5 * res {
                    // rounding floor reached
                    u.copy_from_slice(&trial);
                    return Ok(tr);
                }
                u.copy_from_slice(&trial);
                f.copy_from_slice(&f_trial);
                res = tr;
                if converged {
                    polish += 1;
                }
            }
            None if converged => return Ok(res),
            None => return Err(res),
        }
    }
    if res <= stationary_tolerance(u) {
        Ok(res)
    } else {
        Err(res)
    }
}

/// Integrates `dU/ds = −r U + H(i, ΔU)` until `‖dU/ds‖∞` drops below the
/// stationary tolerance.
fn march_to_steady_state(model: &CostModel, r: f64, start: &[f64]) -> Result<Vec<f64>> {
    let tol = Tolerances::new(1e-10, 1e-12)?;
    let chunk = (5.0 / r).max(1.0);
    let mut u = start.to_vec();
    let mut f = vec![0.0; u.len()];
    for _ in 0..MAX_MARCH_CHUNKS {
        let (next, _) = ode::integrate_to(
            |_, w, dw| {
                for i in 0..w.len() {
                    dw[i] = model.hamiltonian_at(i, w)? - r * w[i];
                }
                Ok(())
            },
            &u,
            chunk,
            tol,
        )?;
        u = next;
        let speed = bellman_residual(model, r, &u, &mut f)
            .ok_or_else(|| Error::NumericOverflow("Hamiltonian overflow while marching".into()))?;
        if speed < stationary_tolerance(&u) {
            return Ok(u);
        }
        if speed < 1e-6 * (1.0 + u.iter().fold(0.0f64, |m, x| m.max(x.abs()))) {
            // close enough for Newton's basin
            return Ok(u);
        }
    }
    Err(Error::NoConvergence(format!(
        "time marching at r = {r} did not reach a steady state"
    )))
}
