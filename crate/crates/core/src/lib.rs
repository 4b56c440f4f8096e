//! Optimal control of continuous-time Markov chains on finite, strongly
//! connected directed graphs.
//!
//! - [`graph`] and [`cost`]: the graph, edge costs and Hamiltonians
//! - [`validate`]: sampling checks of the structural assumptions
//! - [`hjb`]: finite-horizon Hamilton-Jacobi system, policies, comparison
//! - [`stationary`]: discounted Bellman equation
//! - [`ergodic`]: ergodic constant, corrector and long-time diagnostics
//! - [`sim`]: exact simulation and Monte Carlo estimates
//! - [`problem_file`], [`output`], [`commands`]: files and the command line

pub mod commands;
pub mod cost;
pub mod ergodic;
pub mod error;
pub mod fixtures;
pub mod graph;
pub mod hjb;
pub mod ode;
pub mod output;
pub mod problem_file;
pub mod sim;
pub mod stationary;
pub mod validate;

pub use error::{Error, Result};
