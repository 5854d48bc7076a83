//! Surrogate-based demographic parity training, diagnostics, and bound
//! verification for linear classifiers.
//!
//! The crate is organized around classifier margins d = w'x + b:
//!
//! - [`surrogates`] defines the surrogate functions phi used to relax the
//!   indicator 1[d > 0];
//! - [`metrics`] computes demographic parity estimates, covariance proxies,
//!   confusion tables, and large-margin diagnostics from margins;
//! - [`dataset`] loads CSV tables, encodes them into numeric design
//!   matrices, and handles splitting and group resampling;
//! - [`trainer`] fits logistic-loss linear models with a surrogate fairness
//!   penalty by full-batch gradient descent;
//! - [`balanced`] wraps the trainer in the group-split reweighting loop
//!   that retunes the group-b multiplier between fits;
//! - [`verify`] runs randomized checks of the identities and bounds the
//!   penalty design relies on;
//! - [`report`] aggregates per-seed experiment results into summary tables;
//! - [`synth`] generates the seeded synthetic benchmark tables.

pub mod balanced;
pub mod dataset;
pub mod error;
pub mod metrics;
pub mod report;
pub mod surrogates;
pub mod synth;
pub mod trainer;
pub mod verify;

pub use error::{Error, Result};
pub use surrogates::Surrogate;
