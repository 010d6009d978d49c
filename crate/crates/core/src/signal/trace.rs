use crate::error::{invalid, Error, Result};

/// Sampled fluctuation series for one or more labelled channels.
///
/// Quadrature traces use the labels `X1, Y1, X2, Y2`; detector outputs use
/// `i_plus, i_minus` or a single detector label.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeTrace {
    pub sample_rate_hz: f64,
    pub seed: u64,
    /// Number of independently seeded blocks the trace was drawn from.
    pub segment_count: usize,
    labels: Vec<String>,
    channels: Vec<Vec<f64>>,
}

impl TimeTrace {
    pub fn new(
        sample_rate_hz: f64,
        seed: u64,
        segment_count: usize,
        labels: Vec<String>,
        channels: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(invalid("sample_rate_hz", "must be finite and > 0"));
        }
        if labels.len() != channels.len() {
            return Err(Error::DimensionMismatch {
                expected: labels.len(),
                got: channels.len(),
            });
        }
        if let Some(first) = channels.first() {
            if channels.iter().any(|c| c.len() != first.len()) {
                return Err(Error::MismatchedTraces("channel lengths differ".into()));
            }
        }
        Ok(Self {
            sample_rate_hz,
            seed,
            segment_count,
            labels,
            channels,
        })
    }

    pub fn len(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn nyquist_hz(&self) -> f64 {
        self.sample_rate_hz / 2.0
    }

    pub fn channel(&self, label: &str) -> Option<&[f64]> {
        self.index_of(label).map(|k| self.channels[k].as_slice())
    }

    pub fn channel_mut(&mut self, label: &str) -> Option<&mut [f64]> {
        self.index_of(label)
            .map(|k| self.channels[k].as_mut_slice())
    }

    pub fn channel_at(&self, index: usize) -> &[f64] {
        &self.channels[index]
    }

    pub fn channel_at_mut(&mut self, index: usize) -> &mut [f64] {
        &mut self.channels[index]
    }

    fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Splits a `2n`-channel quadrature trace into `n` single-mode traces
    /// labelled `X, Y`, without copying samples.
    pub fn into_modes(self) -> Result<Vec<TimeTrace>> {
        if !self.channels.len().is_multiple_of(2) {
            return Err(Error::MismatchedTraces(format!(
                "{} channels cannot be grouped into modes",
                self.channels.len()
            )));
        }
        let mut out = Vec::with_capacity(self.channels.len() / 2);
        let mut it = self.channels.into_iter();
        while let (Some(x), Some(y)) = (it.next(), it.next()) {
            out.push(TimeTrace {
                sample_rate_hz: self.sample_rate_hz,
                seed: self.seed,
                segment_count: self.segment_count,
                labels: vec!["X".into(), "Y".into()],
                channels: vec![x, y],
            });
        }
        Ok(out)
    }

    /// Sample covariance matrix of the channels (population normalisation).
    pub fn sample_covariance(&self) -> nalgebra::DMatrix<f64> {
        let n = self.n_channels();
        let len = self.len() as f64;
        let means: Vec<f64> = self
            .channels
            .iter()
            .map(|c| c.iter().sum::<f64>() / len)
            .collect();
        nalgebra::DMatrix::from_fn(n, n, |i, j| {
            self.channels[i]
                .iter()
                .zip(&self.channels[j])
                .map(|(a, b)| (a - means[i]) * (b - means[j]))
                .sum::<f64>()
                / len
        })
    }

    pub fn variance(samples: &[f64]) -> f64 {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n
    }
}
