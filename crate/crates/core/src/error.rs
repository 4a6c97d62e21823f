use thiserror::Error;

/// Errors produced anywhere in the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    /// A model or configuration field violates one of its invariants.
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: String, reason: String },

    #[error("state index {index} out of range for a model with {states} states")]
    StateOutOfRange { index: usize, states: usize },

    /// A lump-sum payoff that has zero probability under the current belief.
    #[error("jump of size {size} has zero probability under the current belief")]
    InvalidObservation { size: f64 },

    #[error("{0}")]
    Domain(String),

    /// Simulation produced a non-finite belief component.
    #[error("non-finite belief on path with seed {path_seed:#018x} at step {step}")]
    NonFiniteBelief { path_seed: u64, step: usize },

    #[error("ensemble/model mismatch: {0}")]
    Mismatch(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad input rather than by a failed computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Invalid { .. }
                | Error::StateOutOfRange { .. }
                | Error::InvalidObservation { .. }
                | Error::Domain(_)
                | Error::Mismatch(_)
                | Error::Json(_)
                | Error::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
