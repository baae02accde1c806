use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate geometry: UAV is {separation_m:.4} m from the antenna")]
    DegenerateGeometry { separation_m: f64 },

    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("schema error: missing required column(s) {missing:?}")]
    Schema { missing: Vec<String> },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("design matrix is rank deficient (condition number {condition:.3e})")]
    RankDeficient { condition: f64 },

    #[error("pooled covariance is singular even after ridge regularization")]
    SingularCovariance,

    #[error("training diverged: loss became non-finite at epoch {epoch}")]
    NonFinite { epoch: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("unknown KPI `{0}`")]
    UnknownKpi(String),

    #[error("log has no values for column `{0}`")]
    MissingColumn(String),

    #[error("altitude logs do not overlap: only {pairs} aligned pairs")]
    NoOverlap { pairs: usize },

    #[error("bad trajectory spec: {0}")]
    BadSpec(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Whether the error stems from bad user input rather than an internal failure.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io(_) | Error::NonFinite { .. })
    }
}
