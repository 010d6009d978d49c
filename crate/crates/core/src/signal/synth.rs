//! Frequency-domain synthesis of correlated Gaussian noise.
//!
//! Each positive-frequency bin gets a complex Gaussian vector coloured by the
//! Cholesky factor of the cross-spectral matrix at that frequency; Hermitian
//! symmetry is implicit in the real inverse transform. With this scaling the
//! per-sample covariance of the output equals the bin-average of the
//! cross-spectral matrix, so a flat identity spectrum gives unit white noise.

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use realfft::num_complex::Complex;
use realfft::RealFftPlanner;

use super::rng::{Purpose, StreamId, BLOCK_LEN};
use super::{with_workers, TimeTrace};
use crate::error::{invalid, Error, Result};
use crate::nopa::{epr_covariance_matrix, NopaParams};

/// Two-sided cross-spectral density of a set of real channels, normalised so
/// that vacuum quadrature noise is the identity.
pub trait CrossSpectralModel: Sync {
    fn labels(&self) -> Vec<String>;

    fn matrix_at(&self, freq_hz: f64) -> DMatrix<f64>;

    /// True when `matrix_at` does not depend on frequency.
    fn is_flat(&self) -> bool {
        false
    }
}

/// Frequency-independent (white) cross-spectrum.
#[derive(Debug, Clone)]
pub struct FlatSpectrum {
    pub labels: Vec<String>,
    pub matrix: DMatrix<f64>,
}

impl FlatSpectrum {
    pub fn new(labels: Vec<String>, matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: labels.len(),
                got: matrix.nrows(),
            });
        }
        Ok(Self { labels, matrix })
    }

    /// Vacuum noise on `X1, Y1, ..., Xn, Yn`.
    pub fn vacuum(n_modes: usize) -> Self {
        Self {
            labels: quadrature_labels(n_modes),
            matrix: DMatrix::identity(2 * n_modes, 2 * n_modes),
        }
    }
}

impl CrossSpectralModel for FlatSpectrum {
    fn labels(&self) -> Vec<String> {
        self.labels.clone()
    }

    fn matrix_at(&self, _freq_hz: f64) -> DMatrix<f64> {
        self.matrix.clone()
    }

    fn is_flat(&self) -> bool {
        true
    }
}

/// Sideband cross-spectrum of the NOPA output on `X1, Y1, X2, Y2`.
#[derive(Debug, Clone)]
pub struct EprSpectrum {
    pub params: NopaParams,
}

impl EprSpectrum {
    pub fn new(params: NopaParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { params })
    }
}

impl CrossSpectralModel for EprSpectrum {
    fn labels(&self) -> Vec<String> {
        quadrature_labels(2)
    }

    fn matrix_at(&self, freq_hz: f64) -> DMatrix<f64> {
        epr_covariance_matrix(&self.params, freq_hz)
    }
}

pub(crate) fn quadrature_labels(n_modes: usize) -> Vec<String> {
    (1..=n_modes)
        .flat_map(|k| [format!("X{k}"), format!("Y{k}")])
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthesisParams {
    pub sample_rate_hz: f64,
    pub n_samples: usize,
    pub seed: u64,
    /// Lane of the source stream; distinct lanes give independent traces.
    pub lane: u16,
    pub workers: Option<usize>,
}

impl SynthesisParams {
    pub fn new(sample_rate_hz: f64, n_samples: usize, seed: u64) -> Self {
        Self {
            sample_rate_hz,
            n_samples,
            seed,
            lane: 0,
            workers: None,
        }
    }

    pub fn with_lane(mut self, lane: u16) -> Self {
        self.lane = lane;
        self
    }

    pub fn with_workers(mut self, workers: Option<usize>) -> Self {
        self.workers = workers;
        self
    }
}

/// Smallest integer `>= n` whose only prime factors are 2, 3 and 5.
pub fn next_fast_len(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r.is_multiple_of(p) {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

/// Largest 5-smooth integer `<= n` (n >= 1).
pub(crate) fn prev_fast_len(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r.is_multiple_of(p) {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m -= 1;
    }
}

fn factor(matrix: &DMatrix<f64>, freq_hz: f64) -> Result<DMatrix<f64>> {
    if let Some(ch) = matrix.clone().cholesky() {
        return Ok(ch.l());
    }
    // Semidefinite: fall back to a symmetric square root.
    let eig = matrix.clone().symmetric_eigen();
    let scale = eig.eigenvalues.amax().max(1.0);
    if eig.eigenvalues.iter().any(|&l| l < -1e-9 * scale) {
        return Err(Error::NonPsdSpectrum { freq_hz });
    }
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&roots))
}

/// Draws a real multichannel trace whose cross-spectral density follows
/// `model`. Output is a deterministic function of `(model, params)`,
/// independent of the worker count.
pub fn synthesize_traces(
    model: &dyn CrossSpectralModel,
    params: &SynthesisParams,
) -> Result<TimeTrace> {
    if params.n_samples < 2 {
        return Err(invalid("n_samples", "need at least two samples"));
    }
    if !(params.sample_rate_hz.is_finite() && params.sample_rate_hz > 0.0) {
        return Err(invalid("sample_rate_hz", "must be finite and > 0"));
    }
    let labels = model.labels();
    let n_ch = labels.len();
    let n_fft = next_fast_len(params.n_samples);
    let n_bins = n_fft / 2 + 1;
    let has_nyquist = n_fft.is_multiple_of(2);
    let df = params.sample_rate_hz / n_fft as f64;
    let stream = StreamId::new(Purpose::Source, params.lane);
    let root_n = (n_fft as f64).sqrt();
    let flat = if model.is_flat() {
        Some(factor(&model.matrix_at(0.0), 0.0)?)
    } else {
        None
    };

    let n_blocks = n_bins.div_ceil(BLOCK_LEN);
    let channels = with_workers(params.workers, || -> Result<Vec<Vec<f64>>> {
        let mut spectra: Vec<Vec<Complex<f64>>> = vec![vec![Complex::new(0.0, 0.0); n_bins]; n_ch];
        // Regroup the per-channel spectra into per-block slices so blocks can
        // be filled in parallel.
        let mut blocks: Vec<Vec<&mut [Complex<f64>]>> = (0..n_blocks).map(|_| Vec::new()).collect();
        for spectrum in spectra.iter_mut() {
            for (b, chunk) in spectrum.chunks_mut(BLOCK_LEN).enumerate() {
                blocks[b].push(chunk);
            }
        }
        blocks
            .into_par_iter()
            .enumerate()
            .try_for_each(|(b, mut chunks)| -> Result<()> {
                let mut rng = stream.block_rng(params.seed, b);
                let mut z_re = vec![0.0; n_ch];
                let mut z_im = vec![0.0; n_ch];
                let len = chunks[0].len();
                for off in 0..len {
                    let k = b * BLOCK_LEN + off;
                    let real_only = k == 0 || (has_nyquist && k == n_bins - 1);
                    let owned;
                    let l = match &flat {
                        Some(l) => l,
                        None => {
                            owned = factor(&model.matrix_at(k as f64 * df), k as f64 * df)?;
                            &owned
                        }
                    };
                    for j in 0..n_ch {
                        z_re[j] = StandardNormal.sample(&mut rng);
                        z_im[j] = if real_only {
                            0.0
                        } else {
                            StandardNormal.sample(&mut rng)
                        };
                    }
                    let amp = if real_only {
                        root_n
                    } else {
                        root_n * std::f64::consts::FRAC_1_SQRT_2
                    };
                    for (c, chunk) in chunks.iter_mut().enumerate() {
                        let (mut re, mut im) = (0.0, 0.0);
                        for j in 0..n_ch {
                            re += l[(c, j)] * z_re[j];
                            im += l[(c, j)] * z_im[j];
                        }
                        chunk[off] = Complex::new(amp * re, amp * im);
                    }
                }
                Ok(())
            })?;

        let plan = RealFftPlanner::<f64>::new().plan_fft_inverse(n_fft);
        Ok(spectra
            .into_par_iter()
            .map(|mut spectrum| {
                let mut out = vec![0.0; n_fft];
                plan.process(&mut spectrum, &mut out)
                    .expect("spectrum length and real bins are consistent");
                out.truncate(params.n_samples);
                let norm = 1.0 / n_fft as f64;
                out.iter_mut().for_each(|v| *v *= norm);
                out
            })
            .collect())
    })?;

    TimeTrace::new(
        params.sample_rate_hz,
        params.seed,
        n_blocks,
        labels,
        channels,
    )
}
