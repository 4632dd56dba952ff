//! Error type shared by every module in the crate.

use thiserror::Error;

/// Errors surfaced by graph construction, spectral routines, training and IO.
#[derive(Error, Debug)]
pub enum Error {
    #[error("empty graph")]
    EmptyGraph,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("labels required")]
    LabelsRequired,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("eigensolver did not converge: off-diagonal residual {residual:e} after {sweeps} sweeps")]
    EigenNoConvergence { residual: f64, sweeps: usize },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("unknown framelet operator index (r={r}, l={l})")]
    UnknownOperator { r: usize, l: usize },

    #[error("report requires exact operators")]
    ExactModeRequired,

    #[error("operation requires chebyshev operators")]
    ChebyshevModeRequired,

    #[error("spectrum outside fit domain: bound {bound} exceeds interval end {end}")]
    SpectrumOutsideDomain { bound: f64, end: f64 },

    #[error("non-finite sample while fitting filter at xi = {0}")]
    NonFiniteSample(f64),

    #[error("theorem preconditions unmet: {0}")]
    PreconditionsUnmet(String),

    #[error("bound violated: {0}")]
    BoundViolated(String),

    #[error("step size underflow at t = {t}: required step below h_min = {h_min}")]
    StepUnderflow { t: f64, h_min: f64 },

    #[error("maximum step count {0} exceeded")]
    MaxStepsExceeded(usize),

    #[error("non-finite gradient in parameter {0}")]
    NonFiniteGradient(String),

    #[error("training diverged: loss is not finite at epoch {0}")]
    Diverged(usize),

    #[error("parse error at {file}:{line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },

    #[error("checkpoint mismatch: {0}")]
    CheckpointMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
