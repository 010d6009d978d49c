//! Spectrum-analyser emulation: Welch periodograms with a Hann window,
//! resolution bandwidth taken as the window's noise-equivalent bandwidth, and
//! video filtering as exponential averaging of linear power over successive
//! segments.

use std::fmt::Write as _;

use rayon::prelude::*;
use realfft::RealFftPlanner;

use super::synth::{next_fast_len, prev_fast_len};
use super::with_workers;
use crate::error::{invalid, Error, Result};

/// Bins on each side of the guard region used for the noise floor.
pub const FLOOR_SPAN_BINS: usize = 25;

/// Segments transformed per parallel batch.
const BATCH: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyzerSettings {
    pub rbw_hz: f64,
    pub vbw_hz: f64,
    pub workers: Option<usize>,
}

impl AnalyzerSettings {
    pub fn new(rbw_hz: f64, vbw_hz: f64) -> Self {
        Self {
            rbw_hz,
            vbw_hz,
            workers: None,
        }
    }

    /// Segment length realising the requested RBW with a Hann window
    /// (NEBW = 1.5 bins), rounded to the nearest 5-smooth length.
    pub fn segment_len(&self, sample_rate_hz: f64) -> usize {
        let ideal = 1.5 * sample_rate_hz / self.rbw_hz;
        let lo = prev_fast_len(ideal.floor().max(1.0) as usize);
        let hi = next_fast_len(ideal.ceil().max(1.0) as usize);
        if (ideal / lo as f64).ln() <= (hi as f64 / ideal).ln() {
            lo
        } else {
            hi
        }
    }
}

/// One-sided power spectral density in linear units (variance per Hz).
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSpectrum {
    pub freq_hz: Vec<f64>,
    pub psd: Vec<f64>,
    /// Noise-equivalent bandwidth of the window actually used.
    pub rbw_hz: f64,
    pub vbw_hz: f64,
    pub n_averages: usize,
    pub segment_len: usize,
}

impl PowerSpectrum {
    pub fn bin_width_hz(&self) -> f64 {
        self.freq_hz[1] - self.freq_hz[0]
    }

    /// `Σ psd·Δf`, which equals the time-domain variance.
    pub fn integrated_power(&self) -> f64 {
        self.psd.iter().sum::<f64>() * self.bin_width_hz()
    }

    pub fn relative_to(&self, trace_id: impl Into<String>, snl: &SnlReference) -> SpectrumEstimate {
        SpectrumEstimate {
            trace_id: trace_id.into(),
            freq_hz: self.freq_hz.clone(),
            psd_db_rel_snl: self
                .psd
                .iter()
                .map(|p| 10.0 * (p / snl.level).log10())
                .collect(),
            rbw_hz: self.rbw_hz,
            vbw_hz: self.vbw_hz,
            n_averages: self.n_averages,
            snl_reference_id: snl.id.clone(),
        }
    }
}

/// The 0 dB level of a spectrum: mean density of a shot-noise calibration
/// spectrum, excluding the DC and Nyquist bins.
#[derive(Debug, Clone, PartialEq)]
pub struct SnlReference {
    pub id: String,
    pub level: f64,
}

impl SnlReference {
    pub fn from_spectrum(id: impl Into<String>, spectrum: &PowerSpectrum) -> Self {
        let inner = &spectrum.psd[1..spectrum.psd.len() - 1];
        Self {
            id: id.into(),
            level: inner.iter().sum::<f64>() / inner.len() as f64,
        }
    }
}

/// Spectrum in dB relative to a named shot-noise reference.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumEstimate {
    pub trace_id: String,
    pub freq_hz: Vec<f64>,
    pub psd_db_rel_snl: Vec<f64>,
    pub rbw_hz: f64,
    pub vbw_hz: f64,
    pub n_averages: usize,
    pub snl_reference_id: String,
}

impl SpectrumEstimate {
    /// Index of the bin closest to `freq_hz`.
    pub fn bin_of(&self, freq_hz: f64) -> Result<usize> {
        let df = self.freq_hz[1] - self.freq_hz[0];
        let last = *self.freq_hz.last().expect("non-empty spectrum");
        if !(freq_hz >= self.freq_hz[0] && freq_hz <= last) {
            return Err(Error::FrequencyOutOfBand { freq_hz });
        }
        Ok(((freq_hz - self.freq_hz[0]) / df).round() as usize)
    }

    /// Mean linear level over `[lo, hi]`, in dB.
    pub fn band_level_db(&self, lo_hz: f64, hi_hz: f64) -> Result<f64> {
        let (sum, n) = self
            .freq_hz
            .iter()
            .zip(&self.psd_db_rel_snl)
            .filter(|(f, _)| **f >= lo_hz && **f <= hi_hz)
            .fold((0.0, 0usize), |(s, n), (_, db)| {
                (s + 10f64.powf(db / 10.0), n + 1)
            });
        if n == 0 {
            return Err(Error::FrequencyOutOfBand { freq_hz: lo_hz });
        }
        Ok(10.0 * (sum / n as f64).log10())
    }

    /// Median linear level of the bins flanking `freq_hz`, skipping
    /// `guard_bins` on either side.
    pub fn floor_around_db(&self, freq_hz: f64, guard_bins: usize) -> Result<f64> {
        let k = self.bin_of(freq_hz)?;
        let mut floor: Vec<f64> = (1..=FLOOR_SPAN_BINS)
            .flat_map(|d| [k.checked_sub(guard_bins + d), Some(k + guard_bins + d)])
            .flatten()
            .filter(|&i| i > 0 && i < self.freq_hz.len() - 1)
            .map(|i| 10f64.powf(self.psd_db_rel_snl[i] / 10.0))
            .collect();
        if floor.is_empty() {
            return Err(Error::FrequencyOutOfBand { freq_hz });
        }
        floor.sort_by(f64::total_cmp);
        let m = floor.len();
        let median = if m % 2 == 1 {
            floor[m / 2]
        } else {
            0.5 * (floor[m / 2 - 1] + floor[m / 2])
        };
        Ok(10.0 * median.log10())
    }
}

fn hann(len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * n as f64 / len as f64).cos())
        .collect()
}

/// Welch estimate of the one-sided PSD of `samples`.
pub fn estimate_psd(
    samples: &[f64],
    sample_rate_hz: f64,
    settings: &AnalyzerSettings,
) -> Result<PowerSpectrum> {
    let AnalyzerSettings { rbw_hz, vbw_hz, .. } = *settings;
    if !(rbw_hz.is_finite() && rbw_hz > 0.0) {
        return Err(invalid("rbw_hz", "must be finite and > 0"));
    }
    if !(vbw_hz > 0.0 && vbw_hz <= rbw_hz) {
        return Err(invalid(
            "vbw_hz",
            format!("must lie in (0, rbw], got {vbw_hz}"),
        ));
    }
    let seg = settings.segment_len(sample_rate_hz);
    if seg < 4 || samples.len() < seg {
        return Err(Error::TraceTooShort {
            len: samples.len(),
            needed: seg.max(4),
        });
    }
    let hop = seg / 2;
    let n_seg = (samples.len() - seg) / hop + 1;
    let window = hann(seg);
    let sum_w: f64 = window.iter().sum();
    let sum_w2: f64 = window.iter().map(|w| w * w).sum();
    let n_bins = seg / 2 + 1;
    let norm = 1.0 / (sample_rate_hz * sum_w2);
    let plan = RealFftPlanner::<f64>::new().plan_fft_forward(seg);

    // Video filter: exponential average with time constant 1/(2π·VBW),
    // started as a cumulative mean; the estimate is the time average of the
    // filtered power.
    let dt = hop as f64 / sample_rate_hz;
    let alpha = 1.0 - (-dt * 2.0 * std::f64::consts::PI * vbw_hz).exp();
    let mut video = vec![0.0; n_bins];
    let mut acc = vec![0.0; n_bins];

    let periodogram =
        |s: usize, buf: &mut Vec<f64>, spec: &mut Vec<realfft::num_complex::Complex<f64>>| {
            let start = s * hop;
            buf.iter_mut()
                .zip(&samples[start..start + seg])
                .zip(&window)
                .for_each(|((b, x), w)| *b = x * w);
            plan.process(buf, spec).expect("buffer sizes match plan");
            spec.iter()
                .enumerate()
                .map(|(k, c)| {
                    let one_sided = if k == 0 || (seg.is_multiple_of(2) && k == n_bins - 1) {
                        1.0
                    } else {
                        2.0
                    };
                    one_sided * c.norm_sqr() * norm
                })
                .collect::<Vec<f64>>()
        };

    with_workers(settings.workers, || {
        let mut done = 0usize;
        while done < n_seg {
            let end = (done + BATCH).min(n_seg);
            let batch: Vec<Vec<f64>> = (done..end)
                .into_par_iter()
                .map_init(
                    || (plan.make_input_vec(), plan.make_output_vec()),
                    |(buf, spec), s| periodogram(s, buf, spec),
                )
                .collect();
            for (i, p) in batch.iter().enumerate() {
                let k = (done + i + 1) as f64;
                let a = alpha.max(1.0 / k);
                for ((v, a_acc), x) in video.iter_mut().zip(acc.iter_mut()).zip(p) {
                    *v += a * (x - *v);
                    *a_acc += *v;
                }
            }
            done = end;
        }
    });

    let df = sample_rate_hz / seg as f64;
    Ok(PowerSpectrum {
        freq_hz: (0..n_bins).map(|k| k as f64 * df).collect(),
        psd: acc.iter().map(|v| v / n_seg as f64).collect(),
        rbw_hz: sample_rate_hz * sum_w2 / (sum_w * sum_w),
        vbw_hz,
        n_averages: n_seg,
        segment_len: seg,
    })
}

/// Tone-to-floor ratio: the largest bin within ±1 of `f0` over the median of
/// the flanking floor bins outside a `guard_bins` exclusion zone.
pub fn tone_snr(spectrum: &SpectrumEstimate, f0_hz: f64, guard_bins: usize) -> Result<f64> {
    let k = spectrum.bin_of(f0_hz)?;
    let last = spectrum.freq_hz.len() - 1;
    let peak = (k.saturating_sub(1)..=(k + 1).min(last))
        .map(|i| spectrum.psd_db_rel_snl[i])
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(peak - spectrum.floor_around_db(f0_hz, guard_bins.max(1))?)
}

/// CSV with header `freq_hz,psd_db_rel_snl,trace_id`, one row per bin inside
/// `band` (inclusive), values in shortest round-trip decimal form.
pub fn spectra_to_csv(spectra: &[&SpectrumEstimate], band: Option<(f64, f64)>) -> String {
    let mut out = String::from("freq_hz,psd_db_rel_snl,trace_id\n");
    for s in spectra {
        for (f, p) in s.freq_hz.iter().zip(&s.psd_db_rel_snl) {
            if band.is_none_or(|(lo, hi)| *f >= lo && *f <= hi) {
                writeln!(out, "{f:?},{p:?},{}", s.trace_id).expect("writing to a String");
            }
        }
    }
    out
}
