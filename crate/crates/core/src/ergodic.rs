//! Ergodic constant and corrector
//!
//! ```text
//! −γ + H(i, (ξ_j − ξ_i)_{j ∈ V(i)}) = 0,   ξ_1 = 0
//! ```
//!
//! Two routes are offered: the vanishing-discount limit of `r uʳ` and the
//! late-time slope of the undiscounted flow `U' = H(ΔU)`. The second also
//! gives the de-drifted profile `v̂(t) = U(t) − γt` and the offset `q∞`.
//! The remaining functions are diagnostics on the de-drifted flow.

use nalgebra::{DMatrix, DVector};

use crate::cost::CostModel;
use crate::error::{Error, Result};
use crate::hjb::ValueTrajectory;
use crate::ode::{self, Tolerances};
use crate::stationary::{solve_stationary_from, StationaryValue};

/// Residual bound every returned solution satisfies.
pub const ERGODIC_TOLERANCE: f64 = 1e-8;
/// Smallest discount the vanishing-discount solver will try.
pub const DISCOUNT_FLOOR: f64 = 1.0 / (1u64 << 30) as f64;
pub const DEFAULT_R_MIN: f64 = 1.0 / (1u64 << 20) as f64;
pub const DEFAULT_T_MAX: f64 = 200.0;

const Q_MONOTONE_SLACK: f64 = 1e-9;
const Q_SETTLED: f64 = 1e-6;
const DRIFT_SETTLED: f64 = 1e-9;
const MAX_HORIZON_FACTOR: f64 = 1024.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErgodicMethod {
    VanishingDiscount,
    DirectLongTime,
}

impl std::fmt::Display for ErgodicMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ErgodicMethod::VanishingDiscount => "vanishing_discount",
            ErgodicMethod::DirectLongTime => "direct_long_time",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErgodicSolution {
    pub gamma: f64,
    /// Corrector with `xi[0] == 0.0`.
    pub xi: Vec<f64>,
    /// Only the direct method reports an offset, and only once it settled.
    pub q_infinity: Option<f64>,
    pub method: ErgodicMethod,
    /// `(r, max_i |r uʳ_i − γ|)` for the vanishing-discount method,
    /// `(t, q(t))` for the direct one.
    pub diagnostics: Vec<(f64, f64)>,
    /// Set for models that are not strictly monotone: `ξ` need not be
    /// unique up to constants there.
    pub non_unique_corrector: bool,
    /// `max_i |−γ + H(i, Δξ)|`.
    pub residual: f64,
}

/// Default discount sequence `2^−3, 2^−4, …` down to `r_min`.
pub fn discount_sequence(r_min: f64) -> Result<Vec<f64>> {
    if !(r_min.is_finite() && r_min > 0.0 && r_min <= 0.125) {
        return Err(Error::InvalidParameter(format!(
            "r_min must lie in (0, 1/8], got {r_min}"
        )));
    }
    let mut rs = vec![];
    let mut r = 0.125;
    while r >= r_min * (1.0 - 1e-12) {
        rs.push(r);
        r *= 0.5;
    }
    Ok(rs)
}

/// `max_i |−γ + H(i, Δξ)|`.
pub fn ergodic_residual(model: &CostModel, gamma: f64, xi: &[f64]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for i in 0..model.n_nodes() {
        worst = worst.max((model.hamiltonian_at(i, xi)? - gamma).abs());
    }
    Ok(worst)
}

/// Vanishing-discount limit over `r_sequence`, each solve warm-started from
/// the previous one.
///
/// Convergence is declared once the last two diagnostics differ by less than
/// `1e−7` and the last is below `1e−6`. Since the diagnostics shrink like
/// `O(r)`, the sequence keeps halving past its end until that holds or
/// [`DISCOUNT_FLOOR`] is reached. The raw estimate is then refined by Newton
/// on the ergodic equation itself.
pub fn solve_ergodic_vanishing_discount(
    model: &CostModel,
    r_sequence: &[f64],
) -> Result<ErgodicSolution> {
    solve_ergodic_vanishing_discount_from(model, r_sequence, &vec![0.0; model.n_nodes()])
}

/// As [`solve_ergodic_vanishing_discount`], with the first Newton solve
/// started at `guess`.
pub fn solve_ergodic_vanishing_discount_from(
    model: &CostModel,
    r_sequence: &[f64],
    guess: &[f64],
) -> Result<ErgodicSolution> {
    if r_sequence.is_empty() {
        return Err(Error::InvalidParameter("empty discount sequence".into()));
    }
    if r_sequence.iter().any(|r| !(r.is_finite() && *r > 0.0))
        || r_sequence.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(Error::InvalidParameter(
            "discount sequence must be positive and strictly decreasing".into(),
        ));
    }

    let mut solves: Vec<StationaryValue> = Vec::with_capacity(r_sequence.len());
    let mut u = guess.to_vec();
    for &r in r_sequence {
        let s = solve_stationary_from(model, r, &u)?;
        u.clone_from(&s.u);
        solves.push(s);
    }
    let (gamma, mut diagnostics) = loop {
        let last = solves.last().unwrap();
        let gamma = last.discount * mean(&last.u);
        let diagnostics: Vec<(f64, f64)> = solves
            .iter()
            .map(|s| {
                let d = s
                    .u
                    .iter()
                    .fold(0.0f64, |m, x| m.max((s.discount * x - gamma).abs()));
                (s.discount, d)
            })
            .collect();
        if settled(&diagnostics) {
            break (gamma, diagnostics);
        }
        let next = 0.5 * last.discount;
        if next < DISCOUNT_FLOOR {
            let (_, d) = diagnostics.last().unwrap();
            return Err(Error::NoConvergence(format!(
                "vanishing discount did not settle by r = {}: last diagnostic {d:e}",
                last.discount
            )));
        }
        let s = solve_stationary_from(model, next, &last.u)?;
        solves.push(s);
    };

    let last = solves.last().unwrap();
    let raw_xi: Vec<f64> = last.u.iter().map(|x| x - last.u[0]).collect();
    let (gamma, xi, residual) = polish(model, gamma, &raw_xi, true)?;
    // diagnostics are reported against the refined constant
    for (k, s) in solves.iter().enumerate() {
        diagnostics[k].1 = s
            .u
            .iter()
            .fold(0.0f64, |m, x| m.max((s.discount * x - gamma).abs()));
    }
    Ok(ErgodicSolution {
        gamma,
        xi,
        q_infinity: None,
        method: ErgodicMethod::VanishingDiscount,
        diagnostics,
        non_unique_corrector: !model.strict_monotone(),
        residual,
    })
}

fn settled(diagnostics: &[(f64, f64)]) -> bool {
    match diagnostics {
        [.., (_, a), (_, b)] => (a - b).abs() < 1e-7 && *b < 1e-6,
        _ => false,
    }
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Newton on `(γ, ξ_2, …, ξ_N) ↦ (−γ + H(i, Δξ))_i` with `ξ_1 = 0` pinned.
/// Steps are least-squares solutions, so flat regions of quadratic costs
/// (rows with every intensity zero) do not stop the iteration. With
/// `free_gamma` off, `γ` stays fixed and only `ξ` moves.
fn polish(model: &CostModel, gamma: f64, xi: &[f64], free_gamma: bool) -> Result<(f64, Vec<f64>, f64)> {
    let n = xi.len();
    let graph = model.graph();
    let mut gamma = gamma;
    let mut xi = xi.to_vec();
    let mut res = ergodic_residual(model, gamma, &xi)?;
    let mut lambdas = vec![0.0; graph.n_edges()];
    for _ in 0..100 {
        if res == 0.0 {
            break;
        }
        let mut f = DVector::zeros(n);
        let mut jac = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            f[i] = model.hamiltonian_at(i, &xi)? - gamma;
            let range = graph.edge_range(i);
            model.intensities_at(i, &xi, &mut lambdas[range.clone()])?;
            // column 0 carries γ, columns 1.. carry ξ_2..ξ_N
            if free_gamma {
                jac[(i, 0)] = -1.0;
            }
            for (e, &j) in range.zip(graph.neighbors(i)) {
                if j != 0 {
                    jac[(i, j)] += lambdas[e];
                }
                if i != 0 {
                    jac[(i, i)] -= lambdas[e];
                }
            }
        }
        let svd = jac.svd(true, true);
        let cutoff = 1e-13 * svd.singular_values.max();
        let Ok(step) = svd.solve(&(-f), cutoff) else {
            break;
        };
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let g = gamma + alpha * step[0];
            let trial: Vec<f64> = (0..n)
                .map(|i| if i == 0 { 0.0 } else { xi[i] + alpha * step[i] })
                .collect();
            if let Ok(tr) = ergodic_residual(model, g, &trial) {
                if tr < res {
                    accepted = Some((g, trial, tr));
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some((g, trial, tr)) = accepted else {
            break;
        };
        let stalled = tr > 0.9 * res && res <= 1e-3 * ERGODIC_TOLERANCE;
        gamma = g;
        xi = trial;
        res = tr;
        if stalled {
            break;
        }
    }
    if res > ERGODIC_TOLERANCE {
        return Err(Error::NoConvergence(format!(
            "ergodic equation residual stuck at {res:e}"
        )));
    }
    Ok((gamma, xi, res))
}

/// De-drifted samples `v̂_i(t_k) = U_i(t_k) − γ t_k` in forward time.
#[derive(Debug, Clone, PartialEq)]
pub struct DedriftedSeries {
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

/// Reverses a finite-horizon trajectory to `U(t) = V(T − t)` and removes the
/// drift `γt`.
pub fn dedrift(trajectory: &ValueTrajectory, gamma: f64) -> DedriftedSeries {
    let horizon = *trajectory.grid.last().expect("non-empty trajectory");
    let times: Vec<f64> = trajectory.grid.iter().rev().map(|&t| horizon - t).collect();
    let values = trajectory.values.iter().rev().cloned().collect();
    dedrift_samples(times, values, gamma)
}

/// De-drifts forward-time samples `U(t_k)`.
pub fn dedrift_samples(times: Vec<f64>, mut values: Vec<Vec<f64>>, gamma: f64) -> DedriftedSeries {
    for (t, row) in times.iter().zip(values.iter_mut()) {
        for v in row.iter_mut() {
            *v -= gamma * t;
        }
    }
    DedriftedSeries { times, values }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QSeries {
    pub times: Vec<f64>,
    pub q: Vec<f64>,
    /// `q(t_M)` once `|q(t_M) − q(t_M/2)| < 1e−6`.
    pub q_infinity: Option<f64>,
}

/// `q(t) = max_i (v̂_i(t) − ξ_i)`, which must not increase by more than
/// `1e−9` between samples.
pub fn q_diagnostic(series: &DedriftedSeries, xi: &[f64]) -> Result<QSeries> {
    if xi.first() != Some(&0.0) {
        return Err(Error::InvalidParameter("corrector must satisfy xi[0] = 0".into()));
    }
    let q: Vec<f64> = series
        .values
        .iter()
        .map(|row| {
            if row.len() != xi.len() {
                return Err(Error::DimensionMismatch {
                    expected: xi.len(),
                    got: row.len(),
                });
            }
            Ok(row
                .iter()
                .zip(xi)
                .map(|(v, x)| v - x)
                .fold(f64::NEG_INFINITY, f64::max))
        })
        .collect::<Result<_>>()?;
    for k in 1..q.len() {
        let increase = q[k] - q[k - 1];
        if increase > Q_MONOTONE_SLACK {
            return Err(Error::MonotonicityViolation {
                t: series.times[k],
                increase,
            });
        }
    }
    let q_infinity = match (q.last(), series.times.last()) {
        (Some(&last), Some(&t_end)) => {
            let half = series
                .times
                .iter()
                .position(|&t| t >= 0.5 * t_end)
                .unwrap_or(0);
            ((last - q[half]).abs() < Q_SETTLED).then_some(last)
        }
        _ => None,
    };
    Ok(QSeries {
        times: series.times.clone(),
        q,
        q_infinity,
    })
}

/// Long-time slope of `U' = H(ΔU)` from `U(0) = 0`.
pub fn solve_ergodic_direct(model: &CostModel, t_max: f64) -> Result<ErgodicSolution> {
    solve_ergodic_direct_from(model, &vec![0.0; model.n_nodes()], t_max)
}

/// Long-time slope of `U' = H(ΔU)` from `U(0) = g`.
///
/// `γ` is the slope of `U_1` over `[t_max/2, t_max]`; it must agree with the
/// slope over `[t_max/4, t_max/2]` within `1e−9`; otherwise the horizon is
/// doubled, up to `1024 t_max`. `ξ` is read off `U` at the final horizon
/// and refined by Newton with `γ` held fixed. The diagnostics are the
/// `q` series of the de-drifted flow.
pub fn solve_ergodic_direct_from(
    model: &CostModel,
    g: &[f64],
    t_max: f64,
) -> Result<ErgodicSolution> {
    if !(t_max.is_finite() && t_max >= 10.0) {
        return Err(Error::InvalidParameter(format!(
            "t_max must be at least 10, got {t_max}"
        )));
    }
    if g.len() != model.n_nodes() {
        return Err(Error::DimensionMismatch {
            expected: model.n_nodes(),
            got: g.len(),
        });
    }
    let mut horizon = t_max;
    let (times, u, gamma) = loop {
        let flow = undiscounted_flow(model, g, horizon)?;
        let m = horizon.ceil() as usize;
        let (times, u) = (flow.times, flow.values);
        let (quarter, half, last) = (m, 2 * m, 4 * m);
        let gamma = (u[last][0] - u[half][0]) / (times[last] - times[half]);
        let early = (u[half][0] - u[quarter][0]) / (times[half] - times[quarter]);
        if (gamma - early).abs() <= DRIFT_SETTLED {
            break (times, u, gamma);
        }
        if horizon >= MAX_HORIZON_FACTOR * t_max {
            return Err(Error::NoConvergence(format!(
                "drift estimate not stabilized by t = {horizon}: {early} on [t/4, t/2] vs {gamma} on [t/2, t]"
            )));
        }
        horizon *= 2.0;
    };
    let end = u.last().unwrap();
    let raw_xi: Vec<f64> = end.iter().map(|x| x - end[0]).collect();
    let (_, xi, residual) = polish(model, gamma, &raw_xi, false)?;

    let series = dedrift_samples(times, u, gamma);
    let q = q_diagnostic(&series, &xi)?;
    Ok(ErgodicSolution {
        gamma,
        xi,
        q_infinity: q.q_infinity,
        method: ErgodicMethod::DirectLongTime,
        diagnostics: q.times.into_iter().zip(q.q).collect(),
        non_unique_corrector: !model.strict_monotone(),
        residual,
    })
}

/// Samples of `U(t)` for `U' = H(ΔU)`, `U(0) = g`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardFlow {
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

/// Integrates the undiscounted flow on `[0, t_max]`, sampled every quarter
/// time unit (`4⌈t_max⌉` intervals).
pub fn undiscounted_flow(model: &CostModel, g: &[f64], t_max: f64) -> Result<ForwardFlow> {
    if !(t_max.is_finite() && t_max > 0.0) {
        return Err(Error::InvalidParameter(format!("t_max must be positive, got {t_max}")));
    }
    if g.len() != model.n_nodes() {
        return Err(Error::DimensionMismatch {
            expected: model.n_nodes(),
            got: g.len(),
        });
    }
    // 4·m intervals so that t_max/4 and t_max/2 are sample points
    let m = t_max.ceil() as usize;
    let intervals = 4 * m;
    let times: Vec<f64> = (0..=intervals)
        .map(|k| {
            if k == intervals {
                t_max
            } else {
                k as f64 * t_max / intervals as f64
            }
        })
        .collect();
    // H only sees differences, so each segment starts re-centered at U_1 = 0
    // and the removed offset is carried separately; the integrator then never
    // handles values of size γ·t_max.
    let mut u: Vec<Vec<f64>> = Vec::with_capacity(times.len());
    u.push(g.to_vec());
    let mut offset = 0.0;
    let mut local = g.to_vec();
    for k in 1..times.len() {
        let shift = local[0];
        offset += shift;
        for x in local.iter_mut() {
            *x -= shift;
        }
        let (next, _) = ode::integrate_to(
            |_, v, dv| {
                for (i, slot) in dv.iter_mut().enumerate() {
                    *slot = model.hamiltonian_at(i, v)?;
                }
                Ok(())
            },
            &local,
            times[k] - times[k - 1],
            flow_tolerances(),
        )?;
        local = next;
        u.push(local.iter().map(|x| x + offset).collect());
    }
    Ok(ForwardFlow { times, values: u })
}

/// Vanishing-discount `γ, ξ` together with the offset `q∞` of the flow
/// started at `g`, read off the `q` diagnostic at `t_max`.
pub fn solve_ergodic_with_offset(
    model: &CostModel,
    g: &[f64],
    r_sequence: &[f64],
    t_max: f64,
) -> Result<(ErgodicSolution, QSeries)> {
    let mut sol = solve_ergodic_vanishing_discount(model, r_sequence)?;
    let flow = undiscounted_flow(model, g, t_max)?;
    let q = q_diagnostic(&dedrift_samples(flow.times, flow.values, sol.gamma), &sol.xi)?;
    sol.q_infinity = q.q_infinity;
    Ok((sol, q))
}

fn flow_tolerances() -> Tolerances {
    Tolerances::new(1e-11, 1e-13).expect("valid constants")
}

// H is only C¹ at the quadratic kink, where the embedded error estimate is
// optimistic; the semigroup law is checked at 1e−8, hence the margin.
fn semigroup_tolerances() -> Tolerances {
    Tolerances::new(1e-13, 1e-14).expect("valid constants")
}

/// `S(t)y`: the de-drifted flow `ŷ' = −γ + H(i, Δŷ)` started at `y`.
pub fn semigroup_apply(model: &CostModel, gamma: f64, y: &[f64], t: f64) -> Result<Vec<f64>> {
    if y.len() != model.n_nodes() {
        return Err(Error::DimensionMismatch {
            expected: model.n_nodes(),
            got: y.len(),
        });
    }
    if y.iter().any(|v| !v.is_finite()) || !gamma.is_finite() {
        return Err(Error::InvalidParameter("semigroup input must be finite".into()));
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidParameter(format!("time must be non-negative, got {t}")));
    }
    if t == 0.0 {
        return Ok(y.to_vec());
    }
    let (out, _) = ode::integrate_to(
        |_, v, dv| {
            for (i, slot) in dv.iter_mut().enumerate() {
                *slot = model.hamiltonian_at(i, v)? - gamma;
            }
            Ok(())
        },
        y,
        t,
        semigroup_tolerances(),
    )?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrictOrdering {
    /// `min_i (S(t)y_high − S(t)y_low)_i`, positive on success.
    pub min_gap: f64,
    pub low: Vec<f64>,
    pub high: Vec<f64>,
}

/// Checks `S(t)y_low < S(t)y_high` at every node for ordered, distinct
/// initial data on a strictly monotone model.
pub fn check_strong_max_principle(
    model: &CostModel,
    gamma: f64,
    y_low: &[f64],
    y_high: &[f64],
    t: f64,
) -> Result<StrictOrdering> {
    if !model.strict_monotone() {
        return Err(Error::PreconditionUnmet(
            "strong maximum principle needs a strictly monotone model".into(),
        ));
    }
    if y_low.len() != y_high.len() {
        return Err(Error::DimensionMismatch {
            expected: y_low.len(),
            got: y_high.len(),
        });
    }
    if y_low.iter().zip(y_high).any(|(a, b)| a > b) {
        return Err(Error::PreconditionUnmet("y_low must not exceed y_high".into()));
    }
    if y_low == y_high {
        return Err(Error::PreconditionUnmet(
            "y_low and y_high coincide, nothing to separate".into(),
        ));
    }
    if t.is_nan() || t <= 0.0 {
        return Err(Error::PreconditionUnmet(format!("time must be positive, got {t}")));
    }
    let low = semigroup_apply(model, gamma, y_low, t)?;
    let high = semigroup_apply(model, gamma, y_high, t)?;
    let (node, min_gap) = low
        .iter()
        .zip(&high)
        .map(|(l, h)| h - l)
        .enumerate()
        .fold((0, f64::INFINITY), |best, (i, g)| if g < best.1 { (i, g) } else { best });
    if min_gap <= 0.0 {
        return Err(Error::StrictnessViolation { node, gap: min_gap });
    }
    Ok(StrictOrdering { min_gap, low, high })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationaryComparison {
    /// `min_i (w_i − v_i)`; the conclusion holds when this is `≥ −1e−8`.
    pub margin: f64,
    /// Smallest slack of the hypothesis over the nodes.
    pub hypothesis_slack: f64,
}

impl StationaryComparison {
    pub fn holds(&self) -> bool {
        self.margin >= -1e-8
    }
}

/// Given `−ε v_i + H(i, Δv) ≥ −ε w_i + H(i, Δw)` at every node, checks
/// `v ≤ w`. The hypothesis is tested first, with slack `1e−10` scaled by the
/// size of the terms.
pub fn verify_stationary_comparison(
    model: &CostModel,
    eps: f64,
    v: &[f64],
    w: &[f64],
) -> Result<StationaryComparison> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    for x in [v, w] {
        if x.len() != model.n_nodes() {
            return Err(Error::DimensionMismatch {
                expected: model.n_nodes(),
                got: x.len(),
            });
        }
    }
    let mut hypothesis_slack = f64::INFINITY;
    for i in 0..model.n_nodes() {
        let lhs = -eps * v[i] + model.hamiltonian_at(i, v)?;
        let rhs = -eps * w[i] + model.hamiltonian_at(i, w)?;
        let slack = lhs - rhs;
        let scale = 1.0 + lhs.abs().max(rhs.abs());
        if slack < -1e-10 * scale {
            return Err(Error::HypothesisUnmet { node: i, slack });
        }
        hypothesis_slack = hypothesis_slack.min(slack);
    }
    let margin = v
        .iter()
        .zip(w)
        .map(|(a, b)| b - a)
        .fold(f64::INFINITY, f64::min);
    Ok(StationaryComparison {
        margin,
        hypothesis_slack,
    })
}
