use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("log is not uniformly sampled at row {row}: expected dt {expected}, found {found}")]
    NonUniformSampling { row: usize, expected: f64, found: f64 },

    #[error("regression problem has no usable rows: {0}")]
    EmptyProblem(String),

    #[error("design matrix is rank deficient: column `{column}` is collinear with {dependent_on:?}")]
    RankDeficient {
        column: String,
        dependent_on: Vec<String>,
    },

    #[error("insufficient excitation: {0}")]
    InsufficientExcitation(String),

    #[error("loss requires a nonempty batch")]
    EmptyBatch,

    #[error("training diverged at iteration {iteration}: loss = {loss}")]
    TrainingDiverged { iteration: usize, loss: f64 },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("no steady turn: total heading change {heading_change_deg:.1} deg < 540 deg")]
    NoSteadyTurn { heading_change_deg: f64 },

    #[error("degenerate circle fit: {0}")]
    DegenerateFit(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}, line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("bundle config hash {bundle} does not match config hash {config} (use --force to override)")]
    HashMismatch { bundle: String, config: String },

    #[error("missing artifact: {0}")]
    MissingArtifact(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
