//! Exact simulation of the controlled chain and Monte Carlo estimates of the
//! objective
//!
//! ```text
//! E[ −∫₀ᵀ e^{−rt} L(X_t, λ_t(X_t, ·)) dt + e^{−rT} g(X_T) ]
//! ```
//!
//! Intensities are piecewise constant in time, so holding times are drawn
//! exactly from competing exponential clocks and the running cost is
//! integrated in closed form between events.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;

use crate::cost::CostModel;
use crate::error::{Error, Result};
use crate::hjb::{Policy, Problem};

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationReport {
    pub n_paths: usize,
    pub mean_objective: f64,
    /// Sample standard deviation over `√n_paths`; zero for a single path.
    pub std_error: f64,
    /// Per-path objectives in path order, when requested.
    pub path_objectives: Option<Vec<f64>>,
    pub seed: u64,
    pub start_node: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SimulationOptions {
    pub retain_paths: bool,
}

/// One simulated path: the visited nodes, the times they were entered and
/// the realized objective.
#[derive(Debug, Clone, PartialEq)]
pub struct PathTrace {
    pub jump_times: Vec<f64>,
    pub nodes: Vec<usize>,
    pub objective: f64,
}

/// Runs `n_paths` independent paths from `start_node` (0-based).
///
/// Path `k` draws from a ChaCha8 stream keyed by `(seed, k)`, so the report
/// does not depend on how paths are spread over threads.
pub fn simulate(
    problem: &Problem,
    policy: &Policy,
    start_node: usize,
    n_paths: usize,
    seed: u64,
) -> Result<SimulationReport> {
    simulate_with(problem, policy, start_node, n_paths, seed, SimulationOptions::default())
}

pub fn simulate_with(
    problem: &Problem,
    policy: &Policy,
    start_node: usize,
    n_paths: usize,
    seed: u64,
    options: SimulationOptions,
) -> Result<SimulationReport> {
    if n_paths == 0 {
        return Err(Error::InvalidParameter("n_paths must be at least 1".into()));
    }
    let plan = Plan::new(problem, policy, start_node)?;
    let objectives: Vec<f64> = (0..n_paths as u64)
        .into_par_iter()
        .map(|k| plan.run(&mut path_rng(seed, k), None))
        .collect();
    let (mean, std_error) = mean_and_std_error(&objectives);
    Ok(SimulationReport {
        n_paths,
        mean_objective: mean,
        std_error,
        path_objectives: options.retain_paths.then_some(objectives),
        seed,
        start_node,
    })
}

/// Replays path `path_index` of [`simulate`] and records its jumps.
pub fn trace_path(
    problem: &Problem,
    policy: &Policy,
    start_node: usize,
    seed: u64,
    path_index: u64,
) -> Result<PathTrace> {
    let plan = Plan::new(problem, policy, start_node)?;
    let mut trace = PathTrace {
        jump_times: vec![0.0],
        nodes: vec![start_node],
        objective: 0.0,
    };
    trace.objective = plan.run(&mut path_rng(seed, path_index), Some(&mut trace));
    Ok(trace)
}

fn path_rng(seed: u64, path_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path_index);
    rng
}

struct Plan<'a> {
    problem: &'a Problem,
    /// `(start, end, table, running cost per node)` for each interval.
    intervals: Vec<(f64, f64, &'a [f64], Vec<f64>)>,
    start_node: usize,
}

impl<'a> Plan<'a> {
    fn new(problem: &'a Problem, policy: &'a Policy, start_node: usize) -> Result<Self> {
        let model = problem.model();
        let n = model.n_nodes();
        if start_node >= n {
            return Err(Error::InvalidParameter(format!(
                "start node {} outside 1..={n}",
                start_node + 1
            )));
        }
        let horizon = problem.horizon();
        let n_edges = model.graph().n_edges();
        let mut pieces: Vec<(f64, f64, &[f64])> = vec![];
        match policy {
            Policy::Stationary(table) => pieces.push((0.0, horizon, table)),
            Policy::TimeVarying { grid, tables } => {
                let end = *grid.last().unwrap_or(&f64::NAN);
                let slack = 1e-12 * horizon.max(1.0);
                if grid.first() != Some(&0.0) || (end - horizon).abs() > slack {
                    return Err(Error::PolicyGridMismatch(format!(
                        "policy grid spans [{}, {end}], horizon is {horizon}",
                        grid.first().copied().unwrap_or(f64::NAN)
                    )));
                }
                for k in 0..grid.len() - 1 {
                    let stop = if k + 2 == grid.len() { horizon } else { grid[k + 1] };
                    pieces.push((grid[k], stop, &tables[k]));
                }
            }
        }
        let mut intervals = Vec::with_capacity(pieces.len());
        for (a, b, table) in pieces {
            if table.len() != n_edges {
                return Err(Error::PolicyGridMismatch(format!(
                    "intensity table has {} entries for {n_edges} edges",
                    table.len()
                )));
            }
            let costs = (0..n)
                .map(|i| model.cost(i, &table[model.graph().edge_range(i)]))
                .collect::<Result<Vec<_>>>()?;
            intervals.push((a, b, table, costs));
        }
        Ok(Plan {
            problem,
            intervals,
            start_node,
        })
    }

    fn run(&self, rng: &mut ChaCha8Rng, mut trace: Option<&mut PathTrace>) -> f64 {
        let graph = self.problem.model().graph();
        let r = self.problem.discount();
        let mut node = self.start_node;
        let mut total = 0.0;
        for (a, b, table, costs) in &self.intervals {
            let mut t = *a;
            loop {
                let rates = &table[graph.edge_range(node)];
                let rate: f64 = rates.iter().sum();
                let hold = if rate > 0.0 {
                    Exp::new(rate).expect("positive rate").sample(rng)
                } else {
                    f64::INFINITY
                };
                let stop = t + hold;
                if stop >= *b {
                    total -= costs[node] * discounted_length(r, t, *b);
                    break;
                }
                total -= costs[node] * discounted_length(r, t, stop);
                t = stop;
                node = graph.neighbors(node)[pick(rates, rate, rng)];
                if let Some(trace) = trace.as_deref_mut() {
                    trace.jump_times.push(t);
                    trace.nodes.push(node);
                }
            }
        }
        let horizon = self.problem.horizon();
        total + (-r * horizon).exp() * self.problem.terminal_payoff()[node]
    }
}

/// `∫_a^b e^{−rs} ds`.
fn discounted_length(r: f64, a: f64, b: f64) -> f64 {
    if r == 0.0 {
        b - a
    } else {
        (-r * a).exp() * -(-r * (b - a)).exp_m1() / r
    }
}

fn pick(rates: &[f64], total: f64, rng: &mut ChaCha8Rng) -> usize {
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (k, &w) in rates.iter().enumerate() {
        acc += w;
        if target < acc {
            return k;
        }
    }
    // rounding at the top end: last edge with positive rate
    rates.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

fn pairwise_sum(x: &[f64]) -> f64 {
    if x.len() <= 16 {
        x.iter().sum()
    } else {
        let (l, r) = x.split_at(x.len() / 2);
        pairwise_sum(l) + pairwise_sum(r)
    }
}

/// Mean and standard error with sums taken pairwise around the first value,
/// so identical samples give that value and zero spread exactly.
pub fn mean_and_std_error(x: &[f64]) -> (f64, f64) {
    let n = x.len();
    let shift = x[0];
    let centered: Vec<f64> = x.iter().map(|v| v - shift).collect();
    let offset = pairwise_sum(&centered) / n as f64;
    let mean = shift + offset;
    if n == 1 {
        return (mean, 0.0);
    }
    let squares: Vec<f64> = centered.iter().map(|c| (c - offset).powi(2)).collect();
    let variance = pairwise_sum(&squares) / (n - 1) as f64;
    (mean, (variance / n as f64).sqrt())
}

/// Discounted value of a fixed stationary policy from the linear system
/// `r u_i = −L(i, λ(i,·)) + Σ_j λ(i,j)(u_j − u_i)`.
pub fn evaluate_stationary_policy(model: &CostModel, policy: &Policy, r: f64) -> Result<Vec<f64>> {
    let Policy::Stationary(table) = policy else {
        return Err(Error::InvalidParameter(
            "only stationary policies have a discounted linear-system value".into(),
        ));
    };
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::InvalidParameter(format!("discount must be positive, got {r}")));
    }
    let graph = model.graph();
    if table.len() != graph.n_edges() {
        return Err(Error::PolicyGridMismatch(format!(
            "intensity table has {} entries for {} edges",
            table.len(),
            graph.n_edges()
        )));
    }
    let n = model.n_nodes();
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut rhs = DVector::<f64>::zeros(n);
    for i in 0..n {
        let range = graph.edge_range(i);
        rhs[i] = -model.cost(i, &table[range.clone()])?;
        a[(i, i)] = r;
        for (e, &j) in range.zip(graph.neighbors(i)) {
            a[(i, i)] += table[e];
            a[(i, j)] -= table[e];
        }
    }
    let u = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::SingularSystem("policy evaluation matrix is singular".into()))?;
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem("policy evaluation produced non-finite values".into()));
    }
    Ok(u.iter().copied().collect())
}

/// `(mean − reference) / std_error`.
pub fn estimate_value_gap(report: &SimulationReport, reference: f64) -> Result<f64> {
    let gap = report.mean_objective - reference;
    if report.std_error == 0.0 {
        return if gap == 0.0 {
            Ok(0.0)
        } else {
            Err(Error::ZeroVariance {
                mean: report.mean_objective,
                reference,
            })
        };
    }
    Ok(gap / report.std_error)
}

/// z-score against a reference that is itself only known to within `tol`.
///
/// A gap and a standard error both within `tol` count as agreement (z = 0);
/// otherwise the standard error is widened to `hypot(std_error, tol)`.
pub fn estimate_value_gap_with_tolerance(
    report: &SimulationReport,
    reference: f64,
    tol: f64,
) -> Result<f64> {
    if tol.is_nan() || tol < 0.0 {
        return Err(Error::InvalidParameter(format!("tolerance must be non-negative, got {tol}")));
    }
    let gap = report.mean_objective - reference;
    if gap.abs() <= tol && report.std_error <= tol {
        return Ok(0.0);
    }
    let widened = report.std_error.hypot(tol);
    if widened == 0.0 {
        return estimate_value_gap(report, reference);
    }
    Ok(gap / widened)
}
