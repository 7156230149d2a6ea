//! JSON report written by every command.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use termrisk::data::CleaningReport;
use termrisk::simulation::McEstimate;
use termrisk::{CategoryCounts, FitResult, ModelParams, MomentsReport};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    /// Arguments the command was invoked with.
    pub command: Vec<String>,
    pub version: String,
    /// SHA-256 of the input: the data file for `fit`, the canonical JSON of
    /// the parameters and options otherwise.
    pub input_digest: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<ModelParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cleaning: Option<CleaningReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<CategoryCounts>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moments: Option<MomentsReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifyReport>,
    pub elapsed_seconds: f64,
}

impl RunReport {
    pub fn new(command: Vec<String>, input_digest: String) -> Self {
        Self {
            command,
            version: VERSION.to_string(),
            input_digest,
            params: None,
            cleaning: None,
            counts: None,
            fit: None,
            moments: None,
            verify: None,
            elapsed_seconds: 0.0,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Three-way check of the censored-tail probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub t: f64,
    pub quadrature: f64,
    pub double_quadrature: f64,
    pub monte_carlo: McEstimate,
    pub quadrature_gap: f64,
    pub z_score: f64,
    pub quadrature_pass: bool,
    pub monte_carlo_pass: bool,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
