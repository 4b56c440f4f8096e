//! Command-line front end.
//!
//! Exit codes: 0 success, 2 input error, 3 solver failure, 4 method
//! disagreement, 5 statistical mismatch, 6 asymptotics violation.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::ergodic::{
    discount_sequence, solve_ergodic_direct_from, solve_ergodic_vanishing_discount,
    solve_ergodic_with_offset, ErgodicSolution,
};
use crate::error::Error;
use crate::fixtures::{random_problem, FamilyMix};
use crate::hjb::{extract_policy, solve_finite_horizon};
use crate::ode::Tolerances;
use crate::output::{pairs_csv, policy_csv, values_csv};
use crate::problem_file::{to_canonical_json, FileError, ProblemFile, SolverSettings};
use crate::sim::{estimate_value_gap_with_tolerance, simulate};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_DISAGREEMENT: i32 = 4;
pub const EXIT_STATISTICAL: i32 = 5;
pub const EXIT_ASYMPTOTICS: i32 = 6;

/// Largest accepted gap between the two ergodic constants.
pub const METHOD_AGREEMENT: f64 = 1e-5;
/// Slack allowed when checking that asymptotic deviations do not grow.
pub const DEVIATION_SLACK: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(name = "markov-hjb", version, about = "Optimal control of Markov chains on graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the finite-horizon system and write `t,V_1,…,V_N`.
    Solve {
        problem: PathBuf,
        #[command(flatten)]
        solver: SolverFlags,
        #[arg(short, long)]
        output: PathBuf,
        /// Also write the JSON summary here (it always goes to stdout).
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Write the optimal feedback intensities `t,lambda_i_j,…`.
    Policy {
        problem: PathBuf,
        #[command(flatten)]
        solver: SolverFlags,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Ergodic constant and corrector.
    Ergodic {
        problem: PathBuf,
        #[command(flatten)]
        solver: SolverFlags,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Both)]
        method: Method,
    },
    /// Monte Carlo check of the optimal policy from node 1.
    Simulate {
        problem: PathBuf,
        #[command(flatten)]
        solver: SolverFlags,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        paths: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Finite-horizon values against `γT + ξ + q∞` for several horizons.
    Asymptotics {
        problem: PathBuf,
        #[command(flatten)]
        solver: SolverFlags,
        #[arg(long, default_value = "10,20,40")]
        horizons: String,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Write a random strongly connected problem file (test fixtures).
    Random {
        #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(2..))]
        nodes: u64,
        #[arg(long, default_value = "mixed")]
        family: FamilyMix,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        horizon: f64,
        #[arg(long, default_value_t = 0.0)]
        discount: f64,
        #[arg(short, long)]
        output: PathBuf,
    },
}

/// Overrides for the file's `solver` settings.
#[derive(Debug, Clone, Copy, Default, clap::Args)]
pub struct SolverFlags {
    /// Relative tolerance of the ODE integrator.
    #[arg(long)]
    pub rtol: Option<f64>,
    /// Absolute tolerance of the ODE integrator.
    #[arg(long)]
    pub atol: Option<f64>,
    /// Horizon of the long-time flow in the direct ergodic method.
    #[arg(long)]
    pub t_max: Option<f64>,
    /// Smallest discount of the vanishing-discount sequence.
    #[arg(long)]
    pub r_min: Option<f64>,
}

impl SolverFlags {
    fn load(&self, path: &Path) -> Result<ProblemFile, Failure> {
        let mut file = ProblemFile::read(path)?;
        let mut s = file.solver.unwrap_or_default();
        s.rtol = self.rtol.or(s.rtol);
        s.atol = self.atol.or(s.atol);
        s.t_max = self.t_max.or(s.t_max);
        s.r_min = self.r_min.or(s.r_min);
        if s != SolverSettings::default() {
            file.solver = Some(s);
        }
        Ok(file)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Both,
    Vanishing,
    Direct,
}

/// A failed command: exit code and message for stderr.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

impl From<FileError> for Failure {
    fn from(e: FileError) -> Self {
        Failure::new(EXIT_INPUT, e.to_string())
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidParameter(_) | Error::DimensionMismatch { .. } => EXIT_INPUT,
            _ => EXIT_SOLVER,
        };
        Failure::new(code, e.to_string())
    }
}

type Outcome = Result<(), Failure>;

/// Parses `args` (program name first), runs the command and returns the
/// exit code. Messages go to stderr, JSON summaries to stdout.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match run(cli.command) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

pub fn run(command: Command) -> Outcome {
    match command {
        Command::Solve {
            problem,
            solver,
            output,
            summary,
        } => cmd_solve(&solver.load(&problem)?, &output, summary.as_deref()),
        Command::Policy {
            problem,
            solver,
            output,
        } => cmd_policy(&solver.load(&problem)?, &output),
        Command::Ergodic {
            problem,
            solver,
            output,
            method,
        } => cmd_ergodic(&solver.load(&problem)?, &output, method),
        Command::Simulate {
            problem,
            solver,
            paths,
            seed,
            output,
        } => cmd_simulate(&solver.load(&problem)?, paths as usize, seed, &output),
        Command::Asymptotics {
            problem,
            solver,
            horizons,
            output,
        } => {
            let horizons = parse_horizons(&horizons)?;
            cmd_asymptotics(&solver.load(&problem)?, &horizons, &output)
        }
        Command::Random {
            nodes,
            family,
            seed,
            horizon,
            discount,
            output,
        } => cmd_random(nodes as usize, family, seed, horizon, discount, &output),
    }
}

fn write(path: &Path, contents: &str) -> Outcome {
    std::fs::write(path, contents)
        .map_err(|e| Failure::new(EXIT_INPUT, format!("{}: {e}", path.display())))
}

#[derive(Serialize)]
struct SolveSummary {
    value_at_0: Vec<f64>,
    max_residual: f64,
    steps: usize,
}

pub fn cmd_solve(file: &ProblemFile, output: &Path, summary_path: Option<&Path>) -> Outcome {
    let problem = file.to_problem()?;
    let trajectory = solve_finite_horizon(&problem, file.tolerances()?)?;
    write(output, &values_csv(&trajectory))?;
    let summary = to_canonical_json(&SolveSummary {
        value_at_0: trajectory.initial_values().to_vec(),
        max_residual: trajectory.max_residual,
        steps: trajectory.step_count,
    });
    print!("{summary}");
    if let Some(path) = summary_path {
        write(path, &summary)?;
    }
    Ok(())
}

pub fn cmd_policy(file: &ProblemFile, output: &Path) -> Outcome {
    let problem = file.to_problem()?;
    let trajectory = solve_finite_horizon(&problem, file.tolerances()?)?;
    let policy = extract_policy(&problem, &trajectory)?;
    write(output, &policy_csv(problem.model(), &policy)?)
}

#[derive(Serialize)]
struct ErgodicJson {
    gamma: f64,
    xi: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    q_infinity: Option<f64>,
    method: String,
    diagnostics: Vec<[f64; 2]>,
    non_unique_corrector: bool,
    residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    direct: Option<Box<ErgodicJson>>,
}

impl From<&ErgodicSolution> for ErgodicJson {
    fn from(s: &ErgodicSolution) -> Self {
        ErgodicJson {
            gamma: s.gamma,
            xi: s.xi.clone(),
            q_infinity: s.q_infinity,
            method: s.method.to_string(),
            diagnostics: s.diagnostics.iter().map(|&(a, b)| [a, b]).collect(),
            non_unique_corrector: s.non_unique_corrector,
            residual: s.residual,
            direct: None,
        }
    }
}

/// The direct method starts from the file's terminal payoff, so its
/// `q_infinity` is the offset for that payoff.
pub fn cmd_ergodic(file: &ProblemFile, output: &Path, method: Method) -> Outcome {
    let problem = file.to_problem()?;
    let model = problem.model();
    let g = problem.terminal_payoff();
    let json = match method {
        Method::Vanishing => {
            ErgodicJson::from(&solve_ergodic_vanishing_discount(model, &discount_sequence(file.r_min())?)?)
        }
        Method::Direct => ErgodicJson::from(&solve_ergodic_direct_from(model, g, file.t_max())?),
        Method::Both => {
            let seq = discount_sequence(file.r_min())?;
            let (vanishing, direct) = rayon::join(
                || solve_ergodic_vanishing_discount(model, &seq),
                || solve_ergodic_direct_from(model, g, file.t_max()),
            );
            let (vanishing, direct) = (vanishing?, direct?);
            let gap = (vanishing.gamma - direct.gamma).abs();
            let mut json = ErgodicJson::from(&vanishing);
            json.method = "both".into();
            json.q_infinity = direct.q_infinity;
            json.direct = Some(Box::new(ErgodicJson::from(&direct)));
            write(output, &to_canonical_json(&json))?;
            if gap > METHOD_AGREEMENT {
                return Err(Failure::new(
                    EXIT_DISAGREEMENT,
                    format!(
                        "ergodic constants disagree: {} (vanishing discount) vs {} (direct), gap {gap:e}",
                        vanishing.gamma, direct.gamma
                    ),
                ));
            }
            return Ok(());
        }
    };
    write(output, &to_canonical_json(&json))
}

#[derive(Serialize)]
struct SimulateJson {
    mean: f64,
    std_error: f64,
    reference_value: f64,
    z_score: f64,
    n_paths: usize,
    seed: u64,
    start_node: usize,
}

/// Reference values carry solver error, so gaps below
/// `1e−7 (1 + |V|)` are not attributed to sampling.
pub fn cmd_simulate(file: &ProblemFile, paths: usize, seed: u64, output: &Path) -> Outcome {
    if paths == 0 {
        return Err(Failure::new(EXIT_INPUT, "--paths must be at least 1"));
    }
    let problem = file.to_problem()?;
    let trajectory = solve_finite_horizon(&problem, file.tolerances()?)?;
    let policy = extract_policy(&problem, &trajectory)?;
    let report = simulate(&problem, &policy, 0, paths, seed)?;
    let reference = trajectory.initial_values()[0];
    let z = estimate_value_gap_with_tolerance(&report, reference, 1e-7 * (1.0 + reference.abs()))?;
    write(
        output,
        &to_canonical_json(&SimulateJson {
            mean: report.mean_objective,
            std_error: report.std_error,
            reference_value: reference,
            z_score: z,
            n_paths: report.n_paths,
            seed,
            start_node: 1,
        }),
    )?;
    if z.abs() > 3.0 {
        return Err(Failure::new(
            EXIT_STATISTICAL,
            format!("Monte Carlo mean {} is {z:.2} standard errors from {reference}", report.mean_objective),
        ));
    }
    Ok(())
}

pub fn parse_horizons(text: &str) -> Result<Vec<f64>, Failure> {
    let horizons = text
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|h| h.is_finite() && *h > 0.0)
                .ok_or_else(|| Failure::new(EXIT_INPUT, format!("bad horizon {s:?}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if horizons.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Failure::new(EXIT_INPUT, "horizons must be strictly increasing"));
    }
    Ok(horizons)
}

/// Runs with `r = 0` whatever the file says, and with tolerances of at most
/// `1e−12`.
pub fn cmd_asymptotics(file: &ProblemFile, horizons: &[f64], output: &Path) -> Outcome {
    let problem = file.to_problem()?.with_discount(0.0)?;
    let model = problem.model();
    let (ergodic, _) = solve_ergodic_with_offset(
        model,
        problem.terminal_payoff(),
        &discount_sequence(file.r_min())?,
        file.t_max(),
    )?;
    let q_inf = ergodic.q_infinity.ok_or_else(|| {
        Failure::new(EXIT_SOLVER, "q(t) did not settle; raise --t-max")
    })?;
    let t = file.tolerances()?;
    let tol = Tolerances::new(t.rtol.min(1e-12), t.atol.min(1e-12))?;
    let rows = horizons
        .par_iter()
        .map(|&t| {
            let trajectory = solve_finite_horizon(&problem.with_horizon(t)?, tol)?;
            let deviation = trajectory
                .initial_values()
                .iter()
                .zip(&ergodic.xi)
                .map(|(u, x)| (u - (ergodic.gamma * t + x + q_inf)).abs())
                .fold(0.0, f64::max);
            Ok((t, deviation))
        })
        .collect::<Result<Vec<_>, Error>>()?;
    write(output, &pairs_csv(("T", "deviation"), &rows))?;
    if let Some(w) = rows.windows(2).find(|w| w[1].1 > w[0].1 + DEVIATION_SLACK) {
        return Err(Failure::new(
            EXIT_ASYMPTOTICS,
            format!(
                "deviation grew from {:e} at T = {} to {:e} at T = {}",
                w[0].1, w[0].0, w[1].1, w[1].0
            ),
        ));
    }
    Ok(())
}

/// Terminal payoff drawn from `[−1, 1]^N`.
pub fn cmd_random(
    nodes: usize,
    family: FamilyMix,
    seed: u64,
    horizon: f64,
    discount: f64,
    output: &Path,
) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let problem = random_problem(&mut rng, nodes, family, horizon, discount)?;
    write(output, &ProblemFile::from_problem(&problem, None).to_canonical_string())
}
