//! Deterministic toolkit for multi-armed bandits whose arms *improve with use*:
//! each arm i has a nondecreasing, concave reward curve f_i over its own pull
//! count, and a total budget of T pulls is split across k arms.
//!
//! The crate provides:
//!
//! - reward-curve kinds with validation, lower-envelope checks, and the
//!   curvature index used by the threshold algorithms ([`curves`]);
//! - instance construction, hard families, and commit-budget reports
//!   ([`instances`]);
//! - the algorithms themselves: power-threshold round robin, two
//!   envelope/threshold hybrids with a stage-1 commit certificate, a greedy
//!   envelope baseline, and a horizon-doubling wrapper ([`algorithms`]);
//! - exact (all k! permutations) and Monte Carlo evaluation with loss
//!   functions and CSV/JSON reports ([`engine`]);
//! - closed-form performance bounds and the numeric inequalities backing them
//!   ([`theory`]);
//! - piecewise-constant loss profiles over the threshold exponent and ERM
//!   hyperparameter selection over sampled instances ([`tuning`]).
//!
//! Everything is deterministic: randomness enters only through explicit 64-bit
//! seeds expanded by the documented generator in [`shuffle`], and parallel
//! reductions run in a fixed order, so identical inputs produce byte-identical
//! artifacts.

pub mod algorithms;
pub mod curves;
pub mod engine;
pub mod error;
pub mod instances;
pub mod jsonio;
pub mod shuffle;
pub mod theory;
pub mod tuning;

pub use error::Error;

/// Largest arm count for which exact permutation enumeration is offered.
/// Beyond this, use the Monte Carlo evaluator.
pub const K_MAX_EXACT: usize = 8;

/// Absolute tolerance for the floating-point comparisons in curve validation
/// and lower-envelope checks.
pub const VALIDATE_TOL: f64 = 1e-12;

/// Result alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;
