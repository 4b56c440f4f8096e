//! Finite-horizon Hamilton-Jacobi system
//!
//! ```text
//! dV_i/dt − r V_i + H(i, (V_j − V_i)_{j ∈ V(i)}) = 0,   V_i(T) = g_i
//! ```
//!
//! solved backward in time by integrating the reversed system
//! `W(s) = V(T − s)` forward with the Dormand-Prince pair.

use crate::cost::CostModel;
use crate::error::{Error, Result};
use crate::ode::{self, Tolerances};

/// A finite-horizon control problem on a graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    model: CostModel,
    terminal_payoff: Vec<f64>,
    horizon: f64,
    discount: f64,
}

impl Problem {
    pub fn new(
        model: CostModel,
        terminal_payoff: Vec<f64>,
        horizon: f64,
        discount: f64,
    ) -> Result<Self> {
        if terminal_payoff.len() != model.n_nodes() {
            return Err(Error::DimensionMismatch {
                expected: model.n_nodes(),
                got: terminal_payoff.len(),
            });
        }
        if terminal_payoff.iter().any(|g| !g.is_finite()) {
            return Err(Error::InvalidParameter("terminal payoff must be finite".into()));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        if !(discount.is_finite() && discount >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "discount must be non-negative, got {discount}"
            )));
        }
        Ok(Self {
            model,
            terminal_payoff,
            horizon,
            discount,
        })
    }

    pub fn model(&self) -> &CostModel {
        &self.model
    }

    pub fn terminal_payoff(&self) -> &[f64] {
        &self.terminal_payoff
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn n_nodes(&self) -> usize {
        self.model.n_nodes()
    }

    pub fn with_terminal_payoff(&self, g: Vec<f64>) -> Result<Self> {
        Self::new(self.model.clone(), g, self.horizon, self.discount)
    }

    pub fn with_horizon(&self, horizon: f64) -> Result<Self> {
        Self::new(self.model.clone(), self.terminal_payoff.clone(), horizon, self.discount)
    }

    pub fn with_discount(&self, discount: f64) -> Result<Self> {
        Self::new(self.model.clone(), self.terminal_payoff.clone(), self.horizon, discount)
    }
}

/// Solution of the finite-horizon system sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTrajectory {
    pub grid: Vec<f64>,
    /// `values[k][i] = V_i(grid[k])`.
    pub values: Vec<Vec<f64>>,
    pub max_residual: f64,
    pub step_count: usize,
    pub rejected_steps: usize,
    /// Accumulated embedded error estimate of the integrator.
    pub error_estimate: f64,
}

impl ValueTrajectory {
    pub fn n_points(&self) -> usize {
        self.grid.len()
    }

    /// `V(0)`.
    pub fn initial_values(&self) -> &[f64] {
        &self.values[0]
    }

    pub fn terminal_values(&self) -> &[f64] {
        self.values.last().expect("non-empty trajectory")
    }
}

/// Number of output grid points for horizon `t`: `max(256, ⌈64 t⌉)`.
pub fn grid_points(horizon: f64) -> usize {
    256usize.max((64.0 * horizon).ceil() as usize)
}

pub(crate) fn uniform_grid(horizon: f64, points: usize) -> Vec<f64> {
    let m = (points - 1) as f64;
    (0..points)
        .map(|k| if k + 1 == points { horizon } else { k as f64 * horizon / m })
        .collect()
}

/// Integrates the system backward from `t = T` and samples it on a uniform
/// grid of [`grid_points`] points. `values(T)` is the terminal payoff
/// bit for bit.
pub fn solve_finite_horizon(problem: &Problem, tol: Tolerances) -> Result<ValueTrajectory> {
    let points = grid_points(problem.horizon);
    let grid = uniform_grid(problem.horizon, points);
    // s = T − t, visited in increasing order
    let reversed: Vec<f64> = grid.iter().rev().map(|&t| problem.horizon - t).collect();
    let model = &problem.model;
    let r = problem.discount;
    // integrate W − c, c the midrange of g
    let g = &problem.terminal_payoff;
    let (lo, hi) = g.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let c = 0.5 * (lo + hi);
    let start: Vec<f64> = g.iter().map(|x| x - c).collect();
    let run = ode::integrate(
        |_, w, dw| {
            for i in 0..w.len() {
                dw[i] = model.hamiltonian_at(i, w)? - r * (w[i] + c);
            }
            Ok(())
        },
        &start,
        problem.horizon,
        &reversed,
        tol,
    )?;
    let mut values = run.samples;
    for row in &mut values {
        for x in row.iter_mut() {
            *x += c;
        }
    }
    values.reverse();
    *values.last_mut().unwrap() = problem.terminal_payoff.clone();

    let mut trajectory = ValueTrajectory {
        grid,
        values,
        max_residual: 0.0,
        step_count: run.stats.accepted,
        rejected_steps: run.stats.rejected,
        error_estimate: run.stats.error_estimate,
    };
    trajectory.max_residual = residual(problem, &trajectory)?;
    Ok(trajectory)
}

/// Largest violation of the equation over interior grid points, with time
/// derivatives from five-point stencils (centered in the interior, shifted
/// next to the ends). Grids of 3 or 4 points fall back to the three-point
/// centered difference.
pub fn residual(problem: &Problem, trajectory: &ValueTrajectory) -> Result<f64> {
    let m = trajectory.n_points();
    if m < 3 {
        return Err(Error::InvalidParameter(
            "residual needs at least 3 grid points".into(),
        ));
    }
    let n = problem.n_nodes();
    let v = &trajectory.values;
    let grid = &trajectory.grid;
    let r = problem.discount;
    let mut worst: f64 = 0.0;
    for k in 1..m - 1 {
        let h = (grid[k + 1] - grid[k - 1]) / 2.0;
        for i in 0..n {
            let dv = if m < 5 {
                (v[k + 1][i] - v[k - 1][i]) / (2.0 * h)
            } else if k == 1 {
                (-3.0 * v[0][i] - 10.0 * v[1][i] + 18.0 * v[2][i] - 6.0 * v[3][i] + v[4][i])
                    / (12.0 * h)
            } else if k == m - 2 {
                (3.0 * v[k + 1][i] + 10.0 * v[k][i] - 18.0 * v[k - 1][i] + 6.0 * v[k - 2][i]
                    - v[k - 3][i])
                    / (12.0 * h)
            } else {
                (-v[k + 2][i] + 8.0 * v[k + 1][i] - 8.0 * v[k - 1][i] + v[k - 2][i]) / (12.0 * h)
            };
            let res = dv - r * v[k][i] + problem.model.hamiltonian_at(i, &v[k])?;
            worst = worst.max(res.abs());
        }
    }
    Ok(worst)
}

/// Feedback intensities, indexed by CSR edge of the model's graph.
#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    /// One table per grid point; consumers hold `tables[k]` on
    /// `[grid[k], grid[k+1])`.
    TimeVarying {
        grid: Vec<f64>,
        tables: Vec<Vec<f64>>,
    },
    Stationary(Vec<f64>),
}

impl Policy {
    pub fn stationary(model: &CostModel, intensities: Vec<f64>) -> Result<Self> {
        check_table(model, &intensities)?;
        Ok(Policy::Stationary(intensities))
    }

    pub fn time_varying(model: &CostModel, grid: Vec<f64>, tables: Vec<Vec<f64>>) -> Result<Self> {
        if grid.len() != tables.len() || grid.len() < 2 {
            return Err(Error::PolicyGridMismatch(format!(
                "{} grid points for {} tables",
                grid.len(),
                tables.len()
            )));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::PolicyGridMismatch(
                "grid must be strictly increasing".into(),
            ));
        }
        for table in &tables {
            check_table(model, table)?;
        }
        Ok(Policy::TimeVarying { grid, tables })
    }

    pub fn is_stationary(&self) -> bool {
        matches!(self, Policy::Stationary(_))
    }
}

fn check_table(model: &CostModel, table: &[f64]) -> Result<()> {
    if table.len() != model.graph().n_edges() {
        return Err(Error::PolicyGridMismatch(format!(
            "intensity table has {} entries for {} edges",
            table.len(),
            model.graph().n_edges()
        )));
    }
    if let Some(v) = table.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "intensities must be finite and non-negative, got {v}"
        )));
    }
    Ok(())
}

/// Optimal feedback `λ*(i, ΔV(t_k))` at every grid point.
pub fn extract_policy(problem: &Problem, trajectory: &ValueTrajectory) -> Result<Policy> {
    let tables = trajectory
        .values
        .iter()
        .map(|v| problem.model.all_intensities_at(v))
        .collect::<Result<Vec<_>>>()?;
    Policy::time_varying(&problem.model, trajectory.grid.clone(), tables)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    /// `max(0, max_{k,i} V_low − V_high)`.
    pub max_violation: f64,
    pub low: ValueTrajectory,
    pub high: ValueTrajectory,
}

impl ComparisonReport {
    pub fn holds(&self) -> bool {
        self.max_violation <= 1e-8
    }
}

/// Solves the problem for two ordered terminal payoffs on horizon `horizon`
/// and measures how far the ordering is violated anywhere on the grid.
pub fn verify_comparison(
    problem: &Problem,
    g_low: &[f64],
    g_high: &[f64],
    horizon: f64,
    tol: Tolerances,
) -> Result<ComparisonReport> {
    if g_low.len() != g_high.len() {
        return Err(Error::DimensionMismatch {
            expected: g_low.len(),
            got: g_high.len(),
        });
    }
    if g_low.iter().zip(g_high).any(|(l, h)| l > h) {
        return Err(Error::PreconditionUnmet(
            "terminal payoffs are not ordered".into(),
        ));
    }
    let base = problem.with_horizon(horizon)?;
    let low = solve_finite_horizon(&base.with_terminal_payoff(g_low.to_vec())?, tol)?;
    let high = solve_finite_horizon(&base.with_terminal_payoff(g_high.to_vec())?, tol)?;
    let max_violation = low
        .values
        .iter()
        .zip(&high.values)
        .flat_map(|(l, h)| l.iter().zip(h).map(|(a, b)| a - b))
        .fold(0.0, f64::max);
    Ok(ComparisonReport {
        max_violation,
        low,
        high,
    })
}
