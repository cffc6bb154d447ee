use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the domain where the operation is defined.
    #[error("domain violation: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("stirling number s({n}, {j}) exceeds the exact 64-bit range (n <= {max})")]
    StirlingOverflow { n: usize, j: usize, max: usize },

    /// A right-hand side evaluation produced a non-finite value.
    #[error("stage {stage} produced a non-finite right-hand side at x = {x}")]
    StageFailure { stage: usize, x: f64 },

    #[error("step {step} failed: stage {stage} non-finite at x = {x}")]
    StepFailure { step: usize, stage: usize, x: f64 },

    #[error("tableau rejected: {0}")]
    Tableau(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown problem `{0}`")]
    UnknownProblem(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization: {0}")]
    Serialization(#[from] serde_json::Error),
}
