use thiserror::Error;

/// Errors produced by graph construction, the solvers and the simulator.
///
/// Node indices carried by variants are 0-based.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("a graph needs at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("edge ({from}, {to}) refers to a node outside 0..{n_nodes}")]
    NodeOutOfRange {
        from: usize,
        to: usize,
        n_nodes: usize,
    },
    #[error("self-loop on node {node}")]
    SelfLoop { node: usize },
    #[error("duplicate edge ({from}, {to})")]
    DuplicateEdge { from: usize, to: usize },
    #[error("node {node} has no incident edge")]
    IsolatedNode { node: usize },
    #[error("graph is not strongly connected: node {to} is unreachable from node {from}")]
    NotStronglyConnected { from: usize, to: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("expected {expected} values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("negative intensity {value} on edge {edge} of node {node}")]
    NegativeIntensity { node: usize, edge: usize, value: f64 },
    #[error("numeric overflow: {0}")]
    NumericOverflow(String),

    #[error("step size {step:e} fell below the minimum at t = {t}")]
    StepSizeUnderflow { t: f64, step: f64 },
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("singular linear system: {0}")]
    SingularSystem(String),

    #[error("q increased by {increase:e} at t = {t}")]
    MonotonicityViolation { t: f64, increase: f64 },
    #[error("trajectories not strictly ordered at node {node} (gap {gap:e})")]
    StrictnessViolation { node: usize, gap: f64 },
    #[error("precondition unmet: {0}")]
    PreconditionUnmet(String),
    #[error("comparison hypothesis fails at node {node} (slack {slack:e})")]
    HypothesisUnmet { node: usize, slack: f64 },

    #[error("policy does not match the problem: {0}")]
    PolicyGridMismatch(String),
    #[error("zero standard error but mean {mean} differs from reference {reference}")]
    ZeroVariance { mean: f64, reference: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
