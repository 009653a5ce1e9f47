//! Simulation and verification lab for the stochastic gradient bandit algorithm.
//!
//! The crate is organised bottom-up:
//!
//! - [`env`]: bandit instances and reward distributions.
//! - [`policy`]: the softmax map, its gradient, Hessian and the related norm bounds.
//! - [`learner`]: the gradient bandit update loop (with and without an
//!   average-reward baseline) and a deliberately misconfigured Boltzmann rule.
//! - [`probes`]: exact-enumeration and fuzzing checks of the inequalities that
//!   drive the convergence analysis, plus a uniform-in-time martingale bound.
//! - [`experiments`]: desk-scale convergence, plateau, regret and simplex runs.
//!
//! Inner loops over trials and seeds run on rayon when the `parallel` feature
//! is enabled (the default) and sequentially otherwise; see [`par`].

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod env;
pub mod error;
pub mod experiments;
pub mod learner;
pub mod linalg;
pub mod par;
pub mod policy;
pub mod probes;
pub mod rng;

pub use error::{Error, Result};
