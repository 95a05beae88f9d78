//! Bayesian models for longitudinal magnitude outcomes.
//!
//! The crate covers the folded normal mixed-effects outcome model, a
//! shared-parameter discrete-time competing-risk dropout model, an adaptive
//! Metropolis-within-Gibbs sampler with convergence diagnostics, and the
//! data-generating mechanisms and aggregation used by Monte Carlo
//! simulation studies.
//!
//! Everything here is pure computation over explicit RNG handles. The crate
//! is `no_std` and needs only `alloc`; file formats, the CLI and parallel
//! execution live in the `magfold` companion crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod data;
pub mod diagnostics;
pub mod distributions;
pub mod dropout;
mod error;
mod math;
pub mod model;
pub mod outcome;
pub mod rng;
pub mod sampler;
pub mod simulation;

pub use error::{Error, Result};
