//! Error type shared across the crate.

/// Failure categories; the CLI maps them onto exit codes.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Input data cannot be processed (zero extent, empty cloud, bad dims).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// A non-finite value surfaced during optimization or evaluation.
    /// `term` names the loss term or stage that produced it.
    #[error("numerical failure in {term}: {detail}")]
    NumericalFailure { term: &'static str, detail: String },

    /// An analytic jet was requested at a point where the field is not
    /// twice differentiable (cut locus, region seams).
    #[error("field not twice differentiable at queried point: {0}")]
    NonDifferentiable(String),

    /// An operation completed but produced nothing (empty contour, no faces).
    #[error("empty result: {0}")]
    EmptyResult(String),

    /// Configuration rejected before any work was done.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// A file existed but its contents were not understood.
    #[error("parse error in {path}: {detail}")]
    Parse { path: String, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
