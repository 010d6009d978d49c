//! Below-threshold NOPA sideband model.
//!
//! With `σ = √(P/P_th)` and the normalised sideband frequency `w = f/(Δν/2)`
//! (Δν the cavity FWHM), the squeezed and antisqueezed correlation spectra
//! relative to the shot-noise limit are
//!
//! ```text
//! S_sq(f)   = 1 - η·4σ / ((1+σ)² + w²)
//! S_anti(f) = 1 + η·4σ / ((1-σ)² + w²)
//! ```
//!
//! `η` lumps escape, propagation and detection efficiency. The amplitude
//! (`X`) and phase (`Y`) combinations may carry different efficiencies.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::gaussian::{GaussianState, ParametricMode};

/// Lumped efficiencies for the amplitude and phase correlations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EfficiencyPair {
    pub x: f64,
    pub y: f64,
}

impl EfficiencyPair {
    pub fn symmetric(eta: f64) -> Self {
        Self { x: eta, y: eta }
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [("efficiency_x", self.x), ("efficiency_y", self.y)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(invalid(name, format!("must lie in [0, 1], got {v}")));
            }
        }
        Ok(())
    }
}

/// Physical description of the parametric source.
#[derive(Debug, Clone, PartialEq)]
pub struct NopaParams {
    pub pump_mw: f64,
    pub threshold_mw: f64,
    /// Cavity full width at half maximum.
    pub linewidth_mhz: f64,
    pub finesse: f64,
    pub fsr_ghz: f64,
    pub efficiency: EfficiencyPair,
    pub mode: ParametricMode,
}

impl NopaParams {
    /// The source as operated for the correlation and dense-coding runs:
    /// 150 mW pump, 175 mW threshold, 26 MHz linewidth, finesse 110 and a
    /// 2.8 GHz free spectral range, deamplifying. Efficiency starts at 1.
    pub fn experiment() -> Self {
        Self {
            pump_mw: 150.0,
            threshold_mw: 175.0,
            linewidth_mhz: 26.0,
            finesse: 110.0,
            fsr_ghz: 2.8,
            efficiency: EfficiencyPair::symmetric(1.0),
            mode: ParametricMode::Deamplify,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("pump_mw", self.pump_mw),
            ("threshold_mw", self.threshold_mw),
            ("linewidth_mhz", self.linewidth_mhz),
            ("finesse", self.finesse),
            ("fsr_ghz", self.fsr_ghz),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(name, format!("must be finite and > 0, got {v}")));
            }
        }
        if self.pump_mw >= self.threshold_mw {
            return Err(Error::AboveThreshold {
                pump_mw: self.pump_mw,
                threshold_mw: self.threshold_mw,
            });
        }
        self.efficiency.validate()
    }

    /// A note when the finesse disagrees with FSR/linewidth by more than 20%.
    pub fn consistency_warning(&self) -> Option<String> {
        let implied = self.fsr_ghz * 1e3 / self.linewidth_mhz;
        let rel = (self.finesse - implied).abs() / implied;
        (rel > 0.2).then(|| {
            format!(
                "finesse {} differs from FSR/linewidth = {implied:.1} by {:.0}%",
                self.finesse,
                rel * 100.0
            )
        })
    }

    /// Pump parameter `σ = √(P/P_th)`.
    pub fn sigma(&self) -> f64 {
        (self.pump_mw / self.threshold_mw).sqrt()
    }

    fn normalized_freq(&self, freq_hz: f64) -> f64 {
        freq_hz / (self.linewidth_mhz * 1e6 / 2.0)
    }

    /// `4σ/((1+σ)²+w²)`: squeezing depth per unit efficiency.
    fn squeeze_gain(&self, freq_hz: f64) -> f64 {
        let s = self.sigma();
        let w = self.normalized_freq(freq_hz);
        4.0 * s / ((1.0 + s).powi(2) + w * w)
    }

    /// `4σ/((1-σ)²+w²)`: antisqueezing excess per unit efficiency.
    fn antisqueeze_gain(&self, freq_hz: f64) -> f64 {
        let s = self.sigma();
        let w = self.normalized_freq(freq_hz);
        4.0 * s / ((1.0 - s).powi(2) + w * w)
    }

    /// Spectra at a single sideband frequency.
    pub fn spectra_at(&self, freq_hz: f64) -> SidebandSpectra {
        let g = self.squeeze_gain(freq_hz);
        let h = self.antisqueeze_gain(freq_hz);
        let e = self.efficiency;
        SidebandSpectra {
            squeezed_x: 1.0 - e.x * g,
            antisqueezed_x: 1.0 + e.x * h,
            squeezed_y: 1.0 - e.y * g,
            antisqueezed_y: 1.0 + e.y * h,
        }
    }

    pub fn with_efficiency(mut self, efficiency: EfficiencyPair) -> Self {
        self.efficiency = efficiency;
        self
    }
}

/// Correlation spectra (re SNL) at one sideband frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SidebandSpectra {
    pub squeezed_x: f64,
    pub antisqueezed_x: f64,
    pub squeezed_y: f64,
    pub antisqueezed_y: f64,
}

/// Squeezed and antisqueezed spectra on a frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSpectra {
    pub freq_hz: Vec<f64>,
    pub amplitude: QuadratureSpectra,
    pub phase: QuadratureSpectra,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct QuadratureSpectra {
    pub squeezed: Vec<f64>,
    pub antisqueezed: Vec<f64>,
}

pub fn correlation_spectra(params: &NopaParams, freq_grid: &[f64]) -> Result<CorrelationSpectra> {
    params.validate()?;
    if let Some(&f) = freq_grid.iter().find(|f| !(f.is_finite() && **f >= 0.0)) {
        return Err(invalid(
            "freq_grid",
            format!("frequencies must be >= 0, got {f}"),
        ));
    }
    let mut amplitude = QuadratureSpectra::default();
    let mut phase = QuadratureSpectra::default();
    for &f in freq_grid {
        let s = params.spectra_at(f);
        amplitude.squeezed.push(s.squeezed_x);
        amplitude.antisqueezed.push(s.antisqueezed_x);
        phase.squeezed.push(s.squeezed_y);
        phase.antisqueezed.push(s.antisqueezed_y);
    }
    Ok(CorrelationSpectra {
        freq_hz: freq_grid.to_vec(),
        amplitude,
        phase,
    })
}

/// Lumped efficiency that puts the squeezed spectrum at `target_db` (re SNL)
/// at `freq_hz`. The efficiency stored in `params` is ignored.
pub fn calibrate_efficiency(params: &NopaParams, freq_hz: f64, target_db: f64) -> Result<f64> {
    params.validate()?;
    if !target_db.is_finite() || target_db > 0.0 {
        return Err(invalid(
            "target_db",
            format!("squeezing target must be finite and <= 0 dB, got {target_db}"),
        ));
    }
    let gain = params.squeeze_gain(freq_hz);
    let eta = (1.0 - 10f64.powf(target_db / 10.0)) / gain;
    if eta > 1.0 {
        return Err(Error::UnachievableTarget {
            target_db,
            bound_db: 10.0 * (1.0 - gain).log10(),
        });
    }
    Ok(eta)
}

/// Pump power placing the squeezed spectrum at `target_db` at `freq_hz` for
/// the efficiency `eta`; the smaller (below-threshold) root of the model.
pub fn pump_for_squeezing(
    params: &NopaParams,
    eta: f64,
    freq_hz: f64,
    target_db: f64,
) -> Result<f64> {
    params.validate()?;
    if !(target_db.is_finite() && target_db < 0.0) {
        return Err(invalid("target_db", "must be finite and < 0 dB"));
    }
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(invalid("eta", format!("must lie in (0, 1], got {eta}")));
    }
    let s = 10f64.powf(target_db / 10.0);
    let w = params.normalized_freq(freq_hz);
    // σ² + (2 - 4η/(1-s))σ + (1 + w²) = 0
    let b = 2.0 - 4.0 * eta / (1.0 - s);
    let c = 1.0 + w * w;
    let disc = b * b - 4.0 * c;
    let bound = || {
        let g = {
            // deepest squeezing over σ < 1 is reached as σ → 1
            4.0 / (4.0 + w * w)
        };
        10.0 * (1.0 - eta * g).log10()
    };
    if disc < 0.0 {
        return Err(Error::UnachievableTarget {
            target_db,
            bound_db: bound(),
        });
    }
    let sigma = (-b - disc.sqrt()) / 2.0;
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::UnachievableTarget {
            target_db,
            bound_db: bound(),
        });
    }
    Ok(sigma * sigma * params.threshold_mw)
}

/// Zero-mean two-mode state whose correlation variances at sideband `freq_hz`
/// equal the model spectra: `Var(X1±X2)/2` and `Var(Y1∓Y2)/2`.
pub fn epr_covariance_at(params: &NopaParams, freq_hz: f64) -> Result<GaussianState> {
    params.validate()?;
    GaussianState::new(DVector::zeros(4), epr_covariance_matrix(params, freq_hz))
}

/// The covariance matrix behind [`epr_covariance_at`], without the
/// physicality check.
pub fn epr_covariance_matrix(params: &NopaParams, freq_hz: f64) -> DMatrix<f64> {
    let s = params.spectra_at(freq_hz);
    let (ax, bx) = (
        (s.squeezed_x + s.antisqueezed_x) / 2.0,
        (s.antisqueezed_x - s.squeezed_x) / 2.0,
    );
    let (ay, by) = (
        (s.squeezed_y + s.antisqueezed_y) / 2.0,
        (s.antisqueezed_y - s.squeezed_y) / 2.0,
    );
    // Deamplification anticorrelates X and correlates Y.
    let (cx, cy) = match params.mode {
        ParametricMode::Deamplify => (-bx, by),
        ParametricMode::Amplify => (bx, -by),
    };
    #[rustfmt::skip]
    let cov = DMatrix::from_row_slice(4, 4, &[
        ax, 0.0, cx, 0.0,
        0.0, ay, 0.0, cy,
        cx, 0.0, ax, 0.0,
        0.0, cy, 0.0, ay,
    ]);
    cov
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{DIFF_X, DIFF_Y, SUM_X, SUM_Y};
    use approx::assert_abs_diff_eq;

    fn db(x: f64) -> f64 {
        10.0 * x.log10()
    }

    fn nominal() -> NopaParams {
        NopaParams::experiment()
    }

    #[test]
    fn zero_efficiency_is_flat() {
        let p = nominal().with_efficiency(EfficiencyPair::symmetric(0.0));
        let sp = correlation_spectra(&p, &[0.0, 1e6, 2e6, 1e8]).unwrap();
        assert!(sp.amplitude.squeezed.iter().all(|&v| v == 1.0));
        assert!(sp.amplitude.antisqueezed.iter().all(|&v| v == 1.0));
        let st = epr_covariance_at(&p, 2e6).unwrap();
        assert_eq!(st, GaussianState::vacuum(2));
    }

    #[test]
    fn high_frequency_limit() {
        let p = nominal();
        let s = p.spectra_at(1e13);
        assert!((s.squeezed_x - 1.0).abs() < 1e-9);
        assert!((s.antisqueezed_x - 1.0).abs() < 1e-9);
    }

    #[test]
    fn above_threshold_rejected() {
        let mut p = nominal();
        p.pump_mw = 175.0;
        assert!(matches!(
            correlation_spectra(&p, &[2e6]),
            Err(Error::AboveThreshold { .. })
        ));
    }

    #[test]
    fn calibration_round_trip_at_nominal_point() {
        let eta = calibrate_efficiency(&nominal(), 2e6, -5.4).unwrap();
        // closed-form oracle written out by hand
        let sigma = (150.0f64 / 175.0).sqrt();
        let w = 2.0 / 13.0;
        let g = 4.0 * sigma / ((1.0 + sigma).powi(2) + w * w);
        assert_abs_diff_eq!(eta, (1.0 - 10f64.powf(-0.54)) / g, epsilon = 1e-14);
        assert!(eta > 0.0 && eta <= 1.0);
        let p = nominal().with_efficiency(EfficiencyPair::symmetric(eta));
        let sp = correlation_spectra(&p, &[2e6]).unwrap();
        assert_abs_diff_eq!(db(sp.amplitude.squeezed[0]), -5.4, epsilon = 1e-6);
        assert_abs_diff_eq!(sp.amplitude.squeezed[0], 0.2884, epsilon = 1e-4);
        let st = epr_covariance_at(&p, 2e6).unwrap();
        assert_abs_diff_eq!(
            st.combo_variance(&SUM_X).unwrap() / 2.0,
            0.2884,
            epsilon = 1e-4
        );
        assert!(st.is_physical());
    }

    #[test]
    fn calibration_edges() {
        assert_eq!(calibrate_efficiency(&nominal(), 2e6, 0.0).unwrap(), 0.0);
        let sigma = (150.0f64 / 175.0).sqrt();
        assert_abs_diff_eq!(sigma, 0.926, epsilon = 1e-3);
        let w = 2.0 / 13.0;
        let bound = db(1.0 - 4.0 * sigma / ((1.0 + sigma).powi(2) + w * w));
        match calibrate_efficiency(&nominal(), 2e6, -30.0) {
            Err(Error::UnachievableTarget { bound_db, .. }) => {
                assert_abs_diff_eq!(bound_db, bound, epsilon = 1e-9)
            }
            other => panic!("expected unachievable target, got {other:?}"),
        }
        assert!(calibrate_efficiency(&nominal(), 2e6, 1.0).is_err());
    }

    #[test]
    fn covariance_matches_spectra() {
        let p = nominal().with_efficiency(EfficiencyPair { x: 0.7, y: 0.6 });
        for f in [0.0, 1e6, 2e6, 3e6, 2e7] {
            let s = p.spectra_at(f);
            let st = epr_covariance_at(&p, f).unwrap();
            assert_abs_diff_eq!(
                st.combo_variance(&SUM_X).unwrap() / 2.0,
                s.squeezed_x,
                epsilon = 1e-12
            );
            assert_abs_diff_eq!(
                st.combo_variance(&DIFF_X).unwrap() / 2.0,
                s.antisqueezed_x,
                epsilon = 1e-12
            );
            assert_abs_diff_eq!(
                st.combo_variance(&DIFF_Y).unwrap() / 2.0,
                s.squeezed_y,
                epsilon = 1e-12
            );
            assert_abs_diff_eq!(
                st.combo_variance(&SUM_Y).unwrap() / 2.0,
                s.antisqueezed_y,
                epsilon = 1e-12
            );
            assert!(st.is_physical());
        }
        let mut amp = p.clone();
        amp.mode = ParametricMode::Amplify;
        let st = epr_covariance_at(&amp, 2e6).unwrap();
        let s = amp.spectra_at(2e6);
        assert_abs_diff_eq!(
            st.combo_variance(&DIFF_X).unwrap() / 2.0,
            s.squeezed_x,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            st.combo_variance(&SUM_Y).unwrap() / 2.0,
            s.squeezed_y,
            epsilon = 1e-12
        );
    }

    #[test]
    fn pump_inversion_round_trip() {
        for (eta, target) in [(1.0, -7.97), (0.8, -3.0), (0.5, -1.0)] {
            let pump = pump_for_squeezing(&nominal(), eta, 2e6, target).unwrap();
            let mut p = nominal().with_efficiency(EfficiencyPair::symmetric(eta));
            p.pump_mw = pump;
            assert_abs_diff_eq!(db(p.spectra_at(2e6).squeezed_x), target, epsilon = 1e-9);
        }
        assert!(matches!(
            pump_for_squeezing(&nominal(), 0.5, 2e6, -10.0),
            Err(Error::UnachievableTarget { .. })
        ));
    }

    #[test]
    fn finesse_consistency() {
        assert!(nominal().consistency_warning().is_none());
        let mut p = nominal();
        p.finesse = 200.0;
        assert!(p.consistency_warning().is_some());
    }
}
