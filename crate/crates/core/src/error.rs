use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Failures reported by a completion / scoring backend.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum BackendError {
    #[error("backend returned status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("malformed backend response: {0}")]
    Malformed(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("stale index: built with embedder {index}, queried with {params}")]
    StaleIndex { index: String, params: String },
    #[error("no interior optimum: {0}")]
    NoInteriorOptimum(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("backend unavailable after {completed} of {requested} samples: {source}")]
    BackendUnavailable {
        completed: usize,
        requested: usize,
        source: BackendError,
    },
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("cluster unusable: {0}")]
    ClusterUnusable(String),
}

/// Non-fatal warnings collected while building corpora or datasets.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Diagnostics {
    warnings: Vec<String>,
}

impl Diagnostics {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn warn(&mut self, message: impl Into<String>) {
        self.warnings.push(message.into());
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn is_empty(&self) -> bool {
        self.warnings.is_empty()
    }

    pub fn len(&self) -> usize {
        self.warnings.len()
    }

    pub fn extend(&mut self, other: Diagnostics) {
        self.warnings.extend(other.warnings);
    }
}
