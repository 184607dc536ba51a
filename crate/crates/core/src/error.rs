use thiserror::Error;

/// Errors raised by the decision procedures.
///
/// Verdicts (a witness that fails, an instrument that is not complete) are
/// reported as values, not errors. Errors signal inputs that a procedure
/// cannot meaningfully be applied to.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Shapes, dimensions or labels that do not fit together.
    #[error("structure error: {0}")]
    Structure(String),

    #[error("instrument is not repeatable")]
    NotRepeatable,

    #[error("outcome `{label}` is not atomic (Choi rank {rank})")]
    NotAtomic { label: String, rank: usize },

    #[error("outcome `{label}` is the zero operation and admits no verifier")]
    NoVerifier { label: String },

    /// Extracted projectors failed orthogonality or completeness; the
    /// input passed the preconditions, so this points at numerical trouble.
    #[error("projector extraction failed: {0}")]
    Extraction(String),

    #[error("invalid projection-valued measure: {0}")]
    InvalidPvm(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),

    #[error("seed state is annihilated by the operation (probability {probability:e})")]
    DegenerateSeed { probability: f64 },

    #[error("invalid tolerances: {0}")]
    InvalidTolerances(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn structure<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Structure(msg.into()))
}
