//! Congestion control as a reinforcement-learning problem.
//!
//! The crate bundles everything needed to train and evaluate a rate-based
//! congestion controller end to end:
//!
//! - [`netsim`]: a deterministic packet-level simulator of senders pushing
//!   traffic through FIFO-queue links, reporting per-monitor-interval
//!   measurements.
//! - [`features`]: the statistics vector, observation history, reward and
//!   rate-update rule, plus the randomized training environment.
//! - [`policy`]: a small tanh MLP with a Gaussian action head, hand-written
//!   backpropagation and a versioned text parameter format.
//! - [`ppo`]: a from-scratch PPO trainer (GAE, clipped surrogate, Adam).
//! - [`baselines`]: a loss-halving `tcp-like` AIMD sender and a capacity oracle.
//! - [`harness`]: scenario catalog, evaluation runs, sweeps and comparisons
//!   emitting CSV.
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod baselines;
pub mod error;
pub mod features;
pub mod harness;
pub mod netsim;
pub mod policy;
pub mod ppo;
pub mod units;

pub use error::{Error, LoadError, Result};
