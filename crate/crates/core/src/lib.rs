//! Anomaly detection and root-cause analysis for categorical event logs.
//!
//! Daily log volumes are scored under conjugate Bayesian predictive
//! posteriors, and each anomaly is explained by per-feature impacts: the
//! log-likelihood deficit relative to the mode splits into a sum of
//! per-category (Dirichlet-Multinomial) or per-word (Bernoulli Naive Bayes)
//! terms.

pub mod bernoulli_nb;
pub mod cli;
pub mod detector;
pub mod dirichlet;
pub mod error;
pub mod ingest;
pub mod numerics;
pub mod pipeline;
pub mod synth;
pub mod tan;

pub use error::{Error, Result};
