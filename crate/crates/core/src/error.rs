use thiserror::Error;

use crate::solver::PicardDiagnostics;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("array of length {found} does not match grid size {expected}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("{op} requires a mean-zero field (|zero mode| = {zero_mode:e})")]
    NotMeanZero { op: &'static str, zero_mode: f64 },

    #[error("{name} = {value} outside admissible range {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("phase budget exceeded: |t|·max|ξ|³ = {0:e} > 1e15")]
    PhaseOverflow(f64),

    #[error("quadrature did not converge at x = {x}: error estimate {estimate:e} exceeds {tolerance:e}")]
    Quadrature { x: f64, estimate: f64, tolerance: f64 },

    #[error("Picard iteration failed: {reason}")]
    Picard {
        reason: String,
        diagnostics: Box<PicardDiagnostics>,
    },

    #[error("reference integrator unstable at t = {t}: L² norm grew to {norm:e}")]
    NormExplosion { t: f64, norm: f64 },

    #[error("invalid time grid: {0}")]
    TimeGrid(String),

    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("checkpoint format error: {0}")]
    Format(String),

    #[error("unsupported input: {0}")]
    Unsupported(&'static str),

    #[error("degenerate calibration corpus: {0}")]
    DegenerateCorpus(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    /// Process exit status for a run that stopped with this error: 1 for
    /// invalid input, 2 for solver or I/O failure, 3 for quadrature that did
    /// not converge.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidGrid(_)
            | Error::NotMeanZero { .. }
            | Error::OutOfRange { .. }
            | Error::TimeGrid(_)
            | Error::Config { .. }
            | Error::Unsupported(_)
            | Error::DegenerateCorpus(_) => 1,
            Error::Quadrature { .. } => 3,
            Error::SizeMismatch { .. }
            | Error::GridMismatch
            | Error::PhaseOverflow(_)
            | Error::Picard { .. }
            | Error::NormExplosion { .. }
            | Error::Format(_)
            | Error::Io(_) => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
