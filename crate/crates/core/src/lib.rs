//! Construction and evaluation of locally most powerful sequential tests of
//! `H0: theta = theta0` against one-sided alternatives, for independent and
//! possibly non-identically distributed observations.
//!
//! The pipeline: an [`model::ObservationModel`] supplies per-stage scores and
//! their null law; [`recursion`] runs the backward induction for the value
//! functions (truncated or to the untruncated limit); [`boundary`] solves the
//! continuation-interval equation `c + r_n(z) = g(z)`; [`engine`] executes the
//! resulting test and computes its operating characteristics exactly (discrete
//! models) or by seeded Monte Carlo; [`oracle`] certifies optimality by exact
//! brute force on tiny discrete models; [`checks`] evaluates the standalone
//! identities and inequalities relating the characteristics.

pub mod boundary;
pub mod checks;
pub mod config;
pub mod engine;
pub mod error;
pub mod fixtures;
pub mod grid;
pub mod model;
pub mod oracle;
pub mod recursion;
pub mod report;

pub use error::{Error, Result};

/// Artifact version embedded in every report header.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
