use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("wave number k = 0 is excluded (mean mode)")]
    ZeroWaveNumber,

    #[error("resonant forcing at mode {k} with frequency {frequency}: amplitude is unbounded")]
    Resonance { k: i64, frequency: f64 },

    #[error("vacuum at cell {cell}, t = {time}: rho = {rho}")]
    Vacuum { cell: usize, time: f64, rho: f64 },

    #[error("non-finite value in cell {cell} at t = {time}")]
    NonFinite { cell: usize, time: f64 },

    #[error("time step {dt} exceeds stability limit {limit}")]
    CflViolation { dt: f64, limit: f64 },

    #[error("kernels target {kernels} observations but observer observes {observer}")]
    KernelMismatch { kernels: String, observer: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("non-positive sample {value} at t = {time}")]
    NonPositive { time: f64, value: f64 },

    #[error("non-stationary tail: amplitude drifts by {drift:.3e} (relative)")]
    NonStationary { drift: f64 },

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, err: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            message: err.to_string(),
        }
    }

    /// Short stable identifier, used for machine-parsable diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "invalid-parameter",
            Error::ZeroWaveNumber => "zero-wave-number",
            Error::Resonance { .. } => "resonance",
            Error::Vacuum { .. } => "vacuum",
            Error::NonFinite { .. } => "non-finite",
            Error::CflViolation { .. } => "cfl-violation",
            Error::KernelMismatch { .. } => "kernel-mismatch",
            Error::InsufficientData(_) => "insufficient-data",
            Error::NonPositive { .. } => "non-positive",
            Error::NonStationary { .. } => "non-stationary",
            Error::UnknownScenario(_) => "unknown-scenario",
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
        }
    }
}
