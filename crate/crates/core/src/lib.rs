//! Resource-rational strategy discovery for multi-expert project selection.
//!
//! A decision maker picks one of several projects scored on weighted criteria.
//! Criterion scores are unknown; experts of differing reliability and fee can
//! be asked for a 1–5 rating of one criterion of one project, at most a fixed
//! number of times. The crate models this as a meta-level MDP over Gaussian
//! beliefs ([`env`]) and provides
//!
//! - [`mgps`]: the myopic value-of-computation greedy policy and its cost-weight tuner,
//! - [`pouct`]: a PO-UCT Monte Carlo tree search baseline,
//! - [`benchmark`]: seeded policy comparisons with normalized RR-scores,
//! - [`tutor`]: a session-based tutor (with an HTTP API) that teaches the greedy strategy,
//! - [`analysis`]: click agreement, strategy adherence and effect sizes from tutor logs.
//!
//! See the `examples/` directory of the crate for one runnable program per capability.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod benchmark;
pub mod env;
pub mod error;
pub mod mgps;
pub mod pouct;
pub mod stats;
pub mod tutor;

pub use error::{Error, Result};
