use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid tensor: {0}")]
    InvalidTensor(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("mode {mode} out of range for order-{order} tensor")]
    ModeOutOfRange { mode: usize, order: usize },

    #[error("non-finite value in input")]
    NonFinite,

    #[error("target tensor has zero norm")]
    ZeroNorm,

    #[error("core conformance error: {0}")]
    Conformance(String),

    #[error("invalid structure: {0}")]
    InvalidStructure(String),

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("empty candidate range: center {center}, radius {radius}, bounds [{lo}, {hi}]")]
    EmptyRange {
        center: usize,
        radius: usize,
        lo: usize,
        hi: usize,
    },

    #[error("solver diverged at iteration {iteration}")]
    Divergence { iteration: usize },

    #[error("evaluation of structure {structure} failed: {source}")]
    Evaluation {
        structure: String,
        #[source]
        source: Box<Error>,
    },

    #[error("evaluation budget of {0} explicit evaluations exhausted")]
    BudgetExhausted(usize),

    #[error("grid of {size} points exceeds cap {cap}")]
    GridTooLarge { size: u128, cap: u128 },

    #[error("non-positive objective {0} in landscape")]
    NonPositiveObjective(f64),

    #[error("unsupported template: {0}")]
    UnsupportedTemplate(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
