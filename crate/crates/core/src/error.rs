use thiserror::Error;

/// Errors produced by the simulation core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("mode index {index} out of range for {n_modes}-mode state")]
    InvalidMode { index: usize, n_modes: usize },

    #[error("covariance matrix is not symmetric (max asymmetry {max_asymmetry:e})")]
    NotSymmetric { max_asymmetry: f64 },

    #[error("unphysical covariance: smallest symplectic eigenvalue {min_eigenvalue} < 1")]
    Unphysical { min_eigenvalue: f64 },

    #[error("pump power {pump_mw} mW is not below the oscillation threshold {threshold_mw} mW")]
    AboveThreshold { pump_mw: f64, threshold_mw: f64 },

    #[error("target {target_db} dB is deeper than the lossless bound {bound_db} dB")]
    UnachievableTarget { target_db: f64, bound_db: f64 },

    #[error("cross-spectral matrix is not positive semidefinite at {freq_hz} Hz")]
    NonPsdSpectrum { freq_hz: f64 },

    #[error("trace of {len} samples is too short for a {needed}-sample analysis segment")]
    TraceTooShort { len: usize, needed: usize },

    #[error("tone at {freq_hz} Hz is at or above the Nyquist frequency {nyquist_hz} Hz")]
    ToneAboveNyquist { freq_hz: f64, nyquist_hz: f64 },

    #[error("frequency {freq_hz} Hz lies outside the analysed band")]
    FrequencyOutOfBand { freq_hz: f64 },

    #[error("traces do not match: {0}")]
    MismatchedTraces(String),

    #[error("measured level {measured_db} dB is not above the electronics floor {floor_db} dB")]
    NotCorrectable { measured_db: f64, floor_db: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
