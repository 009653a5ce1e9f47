use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("mean rewards of arms {first} and {second} tie within 1e-12")]
    Tie { first: usize, second: usize },

    #[error("value out of range: {0}")]
    Range(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("arm {arm} has a reward distribution without finite support")]
    UnsupportedDist { arm: usize },

    #[error("matrix is not symmetric: |m[{row}][{col}] - m[{col}][{row}]| = {gap:e}")]
    Asymmetry { row: usize, col: usize, gap: f64 },

    #[error("instance has unbounded rewards; a finite reward range is required")]
    UnboundedInstance,

    #[error("learning rate {eta} outside the admissible interval (0, {upper})")]
    StepSize { eta: f64, upper: f64 },

    #[error("series value {value} at t={t} is not positive")]
    NonPositiveValue { t: f64, value: f64 },

    #[error("could not draw a tie-free instance after {tries} tries")]
    Generation { tries: usize },

    #[error("invalid config at {pointer}: {message}")]
    Schema { pointer: String, message: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
