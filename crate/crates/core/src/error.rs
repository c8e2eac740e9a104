use thiserror::Error;

use crate::reduction::ReductionLedger;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Details attached to a [`Error::DepthExhausted`] failure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Exhaustion {
    /// Reduction stage (1-based) that failed; `None` outside the pipeline,
    /// `Some(n)` with `n` past the last reduction for the base case.
    pub stage: Option<usize>,
    /// Index node of the output tree being built when the search ran dry.
    pub sigma: Option<String>,
    pub reason: String,
    /// Choices made before the failure.
    pub ledger: Option<ReductionLedger>,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("depth exhausted{}: {}", stage_suffix(.0.stage), .0.reason)]
    DepthExhausted(Box<Exhaustion>),

    #[error("search space of {candidates} candidates exceeds cap {cap}")]
    CapExceeded { candidates: u128, cap: u128 },

    #[error("arity mismatch: expected {expected}, found {found}")]
    ArityMismatch { expected: usize, found: usize },

    #[error("node of length {len} lies outside depth bound {depth}")]
    DepthMismatch { len: usize, depth: usize },

    #[error("coloring table has no entry for chain {0}")]
    MissingEntry(String),

    #[error("{0} is not a proper extension of the last ancestor")]
    NotExtension(String),

    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    #[error("invalid chain: {0}")]
    InvalidChain(String),

    #[error("invalid embedding: {0}")]
    InvalidEmbedding(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("result failed verification: {0}")]
    Unverified(String),
}

fn stage_suffix(stage: Option<usize>) -> String {
    match stage {
        Some(s) => format!(" at stage {s}"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn exhausted(reason: impl Into<String>) -> Self {
        Error::DepthExhausted(Box::new(Exhaustion {
            stage: None,
            sigma: None,
            reason: reason.into(),
            ledger: None,
        }))
    }

    pub fn is_depth_exhausted(&self) -> bool {
        matches!(self, Error::DepthExhausted(_))
    }

    pub fn exhaustion(&self) -> Option<&Exhaustion> {
        match self {
            Error::DepthExhausted(e) => Some(e),
            _ => None,
        }
    }

    pub(crate) fn with_stage(mut self, stage: usize) -> Self {
        if let Error::DepthExhausted(e) = &mut self {
            e.stage.get_or_insert(stage);
        }
        self
    }
}
