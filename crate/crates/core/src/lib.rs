//! Replication-success analysis with replication, skeptical and
//! skeptical-mixture Bayes factors.
//!
//! All inputs are normal summary statistics of an original and a
//! replication study (z-values, variance ratio, relative effect).

pub mod asymptotics;
pub mod bayes_factors;
pub mod cli;
pub mod conflict;
pub mod error;
pub mod ingest;
pub mod skeptic_solver;
pub mod stats_kernel;

pub use error::{Error, Result};
