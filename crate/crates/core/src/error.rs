use thiserror::Error;

use crate::norms::Norm;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("covariance is degenerate or not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    DegenerateCovariance { min_eigenvalue: f64 },

    #[error("covariance is not symmetric")]
    AsymmetricCovariance,

    #[error("Gaussian noise has no continuity moduli; use the Gaussian certificate path")]
    UseGaussianPath,

    #[error("invalid probability vector: {0}")]
    InvalidDistribution(String),

    #[error("Rényi order must be >= 1, got {0}")]
    InvalidOrder(f64),

    #[error("sensitivity norm pair ({input}, {output}) has no exact operator norm here; use the BruteForce method")]
    UseBruteForce { input: Norm, output: Norm },

    #[error("noise family requires sensitivity measured in {expected} but got {got}")]
    NormMismatch { expected: Norm, got: Norm },

    #[error("certificate conversion: {0}")]
    Conversion(String),

    #[error("certificate requires a noise model")]
    NoNoiseModel,

    #[error("network invariant violated: {0}")]
    NetworkInvariant(String),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("value {value} at row {row}, column {column} is outside the [-1, 1] domain")]
    OutOfDomain { row: usize, column: usize, value: f64 },

    #[error("label `{value}` at row {row} is not a non-negative integer")]
    BadLabel { row: usize, value: String },

    #[error("labels are not contiguous from 0: missing class {missing}")]
    NonContiguousLabels { missing: usize },

    #[error("malformed CSV: {0}")]
    Csv(String),

    #[error("parse error at byte offset {offset} (line {line}, column {column}): {message}")]
    Parse {
        offset: usize,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unsupported model file version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("attack configuration: {0}")]
    AttackConfig(String),

    #[error("alpha grid must be sorted in non-decreasing order")]
    UnsortedGrid,

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures caused by bad input or configuration, as opposed to
    /// numerical breakdown during a run.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Numeric(_) | Error::Io(_))
    }
}
