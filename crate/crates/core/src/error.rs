use thiserror::Error;

/// Errors raised by the search engine, the problem models and the campaign runner.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid search space: {0}")]
    InvalidSpace(String),
    #[error("invalid search configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("point {0:?} lies outside the search space")]
    OutOfBounds(Vec<f64>),
    #[error("best list is empty")]
    EmptyBestList,
    #[error("objective evaluation failed: {0}")]
    Objective(String),
    #[error("link lengths must be positive, got {0:?}")]
    NonPositiveLength([f64; 4]),
    #[error("mechanism does not assemble at crank angle {theta2_deg:.3} deg")]
    Assembly { theta2_deg: f64 },
    #[error("mechanism is not a crank-rocker ({0})")]
    NotCrankRocker(crate::fourbar::GrashofClass),
    #[error("precision path needs at least 3 points, got {0}")]
    ShortPath(usize),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("simulation diverged at t = {t:.4} s")]
    Diverged { t: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
