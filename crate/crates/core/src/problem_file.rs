//! JSON problem files and the canonical number format shared by every
//! output.
//!
//! ```json
//! {"nodes":2,
//!  "edges":[{"from":1,"to":2,"family":"entropic","scale":4,"shift":0},
//!           {"from":2,"to":1,"family":"entropic","scale":1,"shift":0}],
//!  "terminal_payoff":[0,0],"horizon":10,"discount":0,
//!  "solver":{"rtol":1e-8,"atol":1e-10,"t_max":200,"r_min":9.5367431640625e-07}}
//! ```
//!
//! Nodes are numbered from 1 in files. Unknown keys are rejected.

use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::{CostFamily, CostModel, EdgeCost};
use crate::ergodic::{DEFAULT_R_MIN, DEFAULT_T_MAX};
use crate::error::Error as ModelError;
use crate::graph::Graph;
use crate::hjb::Problem;
use crate::ode::Tolerances;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub nodes: usize,
    pub edges: Vec<EdgeSpec>,
    pub terminal_payoff: Vec<f64>,
    pub horizon: f64,
    pub discount: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverSettings>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSpec {
    pub from: usize,
    pub to: usize,
    pub family: CostFamily,
    pub scale: f64,
    pub shift: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSettings {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rtol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_min: Option<f64>,
}

#[derive(Debug, Error)]
pub enum FileError {
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("edge {index} ({from} -> {to}): {reason}")]
    Edge {
        /// 1-based position in the `edges` list.
        index: usize,
        from: usize,
        to: usize,
        reason: String,
    },
    #[error("{0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self, FileError> {
        serde_json::from_str(text).map_err(|e| FileError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn read(path: &std::path::Path) -> Result<Self, FileError> {
        let text = std::fs::read_to_string(path).map_err(|source| FileError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Canonical text: compact JSON, numbers with 17 significant digits,
    /// trailing newline.
    pub fn to_canonical_string(&self) -> String {
        to_canonical_json(self)
    }

    /// Validates the file and builds the problem it describes.
    pub fn to_problem(&self) -> Result<Problem, FileError> {
        let n = self.nodes;
        if n < 2 {
            return Err(FileError::Invalid(format!("nodes must be at least 2, got {n}")));
        }
        let mut seen = std::collections::HashSet::new();
        let mut pairs = Vec::with_capacity(self.edges.len());
        let mut costs = Vec::with_capacity(self.edges.len());
        for (k, e) in self.edges.iter().enumerate() {
            let fail = |reason: String| FileError::Edge {
                index: k + 1,
                from: e.from,
                to: e.to,
                reason,
            };
            if e.from == 0 || e.from > n || e.to == 0 || e.to > n {
                return Err(fail(format!("endpoints must lie in 1..={n}")));
            }
            if e.from == e.to {
                return Err(fail("self-loop".into()));
            }
            if !seen.insert((e.from, e.to)) {
                return Err(fail("duplicate edge".into()));
            }
            let cost = EdgeCost::new(e.family, e.scale, e.shift).map_err(|err| fail(err.to_string()))?;
            pairs.push((e.from - 1, e.to - 1));
            costs.push(cost);
        }
        let graph = Graph::new(n, &pairs).map_err(|e| FileError::Invalid(one_based(&e)))?;
        let model = CostModel::new(graph, &costs).map_err(|e| FileError::Invalid(e.to_string()))?;
        Problem::new(model, self.terminal_payoff.clone(), self.horizon, self.discount)
            .map_err(|e| FileError::Invalid(e.to_string()))
    }

    /// File describing `problem`, edges in the graph's stored order.
    pub fn from_problem(problem: &Problem, solver: Option<SolverSettings>) -> Self {
        let model = problem.model();
        let edges = model
            .graph()
            .edges()
            .enumerate()
            .map(|(e, (i, j))| {
                let c = model.edge_cost(e);
                EdgeSpec {
                    from: i + 1,
                    to: j + 1,
                    family: c.family(),
                    scale: c.scale(),
                    shift: c.shift(),
                }
            })
            .collect();
        ProblemFile {
            nodes: model.n_nodes(),
            edges,
            terminal_payoff: problem.terminal_payoff().to_vec(),
            horizon: problem.horizon(),
            discount: problem.discount(),
            solver,
        }
    }

    pub fn tolerances(&self) -> Result<Tolerances, FileError> {
        let s = self.solver.unwrap_or_default();
        let d = Tolerances::default();
        Tolerances::new(s.rtol.unwrap_or(d.rtol), s.atol.unwrap_or(d.atol))
            .map_err(|e| FileError::Invalid(e.to_string()))
    }

    pub fn t_max(&self) -> f64 {
        self.solver.and_then(|s| s.t_max).unwrap_or(DEFAULT_T_MAX)
    }

    pub fn r_min(&self) -> f64 {
        self.solver.and_then(|s| s.r_min).unwrap_or(DEFAULT_R_MIN)
    }
}

/// Graph errors with node numbers shifted to the file's 1-based convention.
fn one_based(e: &ModelError) -> String {
    match *e {
        ModelError::IsolatedNode { node } => format!("node {} has no incident edge", node + 1),
        ModelError::NotStronglyConnected { from, to } => format!(
            "graph is not strongly connected: node {} is unreachable from node {}",
            to + 1,
            from + 1
        ),
        ref other => other.to_string(),
    }
}

/// `%.17g`: 17 significant digits, trailing zeros dropped, exponent form
/// outside `1e−5 ≤ |x| < 1e17`.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

struct Canonical;

impl serde_json::ser::Formatter for Canonical {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_number(value).as_bytes())
    }
}

/// Compact JSON with numbers in [`format_number`] form and a trailing
/// newline.
pub fn to_canonical_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Canonical);
    value.serialize(&mut ser).expect("in-memory serialization");
    out.push(b'\n');
    String::from_utf8(out).expect("JSON is UTF-8")
}
