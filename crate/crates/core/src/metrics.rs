//! Figures of merit for a decoded link.

use crate::error::{invalid, Result};

/// Amplitude and phase noise variances, relative to the SNL.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariancePair {
    pub x: f64,
    pub y: f64,
}

impl VariancePair {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        for (name, v) in [("x", x), ("y", y)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(
                    name,
                    format!("variance must be finite and > 0, got {v}"),
                ));
            }
        }
        Ok(Self { x, y })
    }

    pub fn from_db(x_db: f64, y_db: f64) -> Result<Self> {
        Self::new(10f64.powf(x_db / 10.0), 10f64.powf(y_db / 10.0))
    }
}

/// SNR gain of the squeezed link over the coherent one, in dB, given both
/// SNRs in dB.
pub fn snr_improvement(snr_squeezed_db: f64, snr_coherent_db: f64) -> f64 {
    snr_squeezed_db - snr_coherent_db
}

/// Product of the two correlation variances `Var(X1+X2)·Var(Y1-Y2)` with
/// the SNL of each combination at 2. Separable states satisfy `>= 4`.
pub fn variance_product(v: &VariancePair) -> f64 {
    (2.0 * v.x) * (2.0 * v.y)
}

/// Coherent-state teleportation fidelity supported by the measured
/// correlations: `1/√((1+vx)(1+vy))`.
pub fn teleport_fidelity(v: &VariancePair) -> f64 {
    1.0 / ((1.0 + v.x) * (1.0 + v.y)).sqrt()
}

/// Gaussian channel capacity of a link carrying independent signals on both
/// quadratures, in bits per use: `½log2(1+SNRx) + ½log2(1+SNRy)`.
pub fn channel_information(snr_x: f64, snr_y: f64) -> Result<f64> {
    for (name, v) in [("snr_x", snr_x), ("snr_y", snr_y)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(invalid(name, format!("must be finite and >= 0, got {v}")));
        }
    }
    Ok(0.5 * (1.0 + snr_x).log2() + 0.5 * (1.0 + snr_y).log2())
}

/// Dense-coded versus coherent single-quadrature transmission at the same
/// total signal power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelComparison {
    pub dense_bits: f64,
    pub coherent_bits: f64,
}

impl ChannelComparison {
    /// `signal_power` is the tone power per quadrature (SNL units), `v` the
    /// decoded noise variances of the squeezed link. The coherent benchmark
    /// places twice that power on one quadrature over SNL noise.
    pub fn new(signal_power: f64, v: &VariancePair) -> Result<Self> {
        if !(signal_power.is_finite() && signal_power >= 0.0) {
            return Err(invalid("signal_power", "must be finite and >= 0"));
        }
        Ok(Self {
            dense_bits: channel_information(signal_power / v.x, signal_power / v.y)?,
            coherent_bits: 0.5 * (1.0 + 2.0 * signal_power).log2(),
        })
    }

    pub fn advantage_bits(&self) -> f64 {
        self.dense_bits - self.coherent_bits
    }
}
