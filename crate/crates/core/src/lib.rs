//! Stochastic linear bandits under Nash regret.
//!
//! The crate is `no_std` (it needs `alloc`) and carries every numerical piece of
//! the LinNash family: D-optimal design by Frank-Wolfe, minimum-volume enclosing
//! ellipsoids and Carathéodory reduction for the exploration distribution, the
//! phased-elimination algorithms with estimate-dependent confidence widths, a
//! linear Thompson Sampling baseline, Nash/average regret aggregation and the
//! sub-Poisson concentration checkers.
//!
//! File formats, the CLI and replica orchestration live in the `linnash` crate.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod arms;
pub mod baselines;
pub mod concentration;
pub mod design;
pub mod env;
mod error;
pub mod geometry;
pub mod linalg;
pub mod linnash;
pub mod metrics;

pub use arms::ArmSet;
pub use error::{Error, Result};
