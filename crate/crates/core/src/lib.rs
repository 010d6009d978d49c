//! Gaussian-state simulation of continuous-variable dense coding with bright
//! EPR beams from a non-degenerate optical parametric amplifier.
//!
//! Quadratures are ordered `(X1, Y1, X2, Y2, ...)` and the vacuum has unit
//! variance in each.

pub mod error;
pub mod gaussian;
pub mod metrics;
pub mod nopa;
pub mod protocol;
pub mod signal;

pub use error::{Error, Result};
pub use gaussian::{GaussianState, LossChannel, ParametricMode, SymplecticTransform};
pub use metrics::{
    channel_information, snr_improvement, teleport_fidelity, variance_product, ChannelComparison,
    VariancePair,
};
pub use nopa::{
    calibrate_efficiency, correlation_spectra, epr_covariance_at, pump_for_squeezing,
    CorrelationSpectra, EfficiencyPair, NopaParams,
};
pub use protocol::{
    bell_measure_state, bell_measure_trace, encode_state, encode_trace, intercept_single_beam,
    intercept_state, snl_reference_state, snl_reference_trace, split_beam, tap_attack,
    AnalyticBellOutputs, AnalyticOutput, ClassicalSignal, DetectorConfig, RunNoise, TapOutcome,
};
pub use signal::{
    electronics_correct, estimate_psd, synthesize_traces, tone_snr, AnalyzerSettings, EprSpectrum,
    FlatSpectrum, PowerSpectrum, SnlReference, SpectrumEstimate, SynthesisParams, TimeTrace,
};
