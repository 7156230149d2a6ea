//! Bivariate Weibull competing-risks model with one fatal (termination)
//! event: model functions, the termination-scheme likelihood, maximum
//! likelihood fitting, moments, simulation and data ingestion.
//!
//! X is the time to the non-fatal event A (transplant), Y the time to the
//! fatal event B (death). Once B occurs, A can no longer be observed.

// `!(x > 0.0)` is used on purpose so that NaN is rejected; the Lanczos and
// Kronrod tables keep the digits they are published with.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod data;
pub mod error;
pub mod estimation;
pub mod likelihood;
pub mod model;
pub mod moments;
pub mod numerics;
pub mod simulation;

pub use error::{Error, Result};
pub use estimation::{fit, standard_errors, FitConfig, FitResult};
pub use likelihood::{loglik_lawless, loglik_termination, Category, CategoryCounts, Dataset, SubjectRecord};
pub use model::{ModelParams, Param};
pub use moments::{MarginalMoments, MomentsReport};
pub use numerics::QuadratureSpec;

/// Path of the bundled Stanford heart transplant transcription.
pub const STANFORD_CSV: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data/stanford_heart.csv");
