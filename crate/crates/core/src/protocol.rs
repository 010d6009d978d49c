//! The three stations of the dense-coding link.
//!
//! Alice displaces beam 1 by classical amplitude and phase tones. Bob
//! rotates beam 1 by the lock phase, mixes it with beam 2 on a balanced
//! beamsplitter and direct-detects both outputs; the sum and difference of
//! the photocurrents give
//!
//! ```text
//! i+ = [(X1 + X2) + Xs] / √2      i- = [(Y1 - Y2) + Ys] / √2
//! ```
//!
//! Direct detection of a bright output is linearised: each photodiode reads
//! the quadrature along the direction of its nominal carrier (π/4 and -π/4
//! for a π/2 lock). A lock error rotates the fluctuations of beam 1 but not
//! the detection directions. Eve direct-detects beam 1 alone, which reads
//! its amplitude quadrature.
//!
//! Every function comes in an analytic form acting on a [`GaussianState`]
//! (a tone is a sideband displacement) and a Monte Carlo form acting on
//! [`TimeTrace`]s.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

use crate::error::{invalid, Error, Result};
use crate::gaussian::{GaussianState, LossChannel, SymplecticTransform};
use crate::signal::rng::{standard_normals, Purpose, StreamId};
use crate::signal::{
    add_electronics_noise, estimate_psd, floor_rel_noiseless, synthesize_traces, AnalyzerSettings,
    FlatSpectrum, SnlReference, SpectrumEstimate, SynthesisParams, TimeTrace,
};

pub const I_PLUS: &str = "i_plus";
pub const I_MINUS: &str = "i_minus";
pub const EVE: &str = "eve";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Waveform {
    #[default]
    Sine,
}

/// Alice's classical modulation: one tone on each quadrature of beam 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalSignal {
    pub mod_freq_hz: f64,
    /// Tone amplitude on the amplitude quadrature, in quadrature units.
    pub depth_x: f64,
    /// Tone amplitude on the phase quadrature.
    pub depth_y: f64,
    pub waveform: Waveform,
}

impl ClassicalSignal {
    pub fn new(mod_freq_hz: f64, depth_x: f64, depth_y: f64) -> Result<Self> {
        let s = Self {
            mod_freq_hz,
            depth_x,
            depth_y,
            waveform: Waveform::Sine,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mod_freq_hz.is_finite() && self.mod_freq_hz > 0.0) {
            return Err(invalid("mod_freq_hz", "must be finite and > 0"));
        }
        for (name, v) in [("depth_x", self.depth_x), ("depth_y", self.depth_y)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Bob's (or Eve's) detection chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    pub quantum_efficiency: f64,
    /// Electronics noise in dB relative to the *measured* shot-noise level.
    pub electronics_floor_db: f64,
    /// Relative phase imposed on beam 1 before the beamsplitter.
    pub phase_setting: f64,
    /// Fractional gain mismatch `δ` between the two photodiode chains:
    /// gains are `1 + δ/2` and `1 - δ/2`.
    pub gain_imbalance: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            quantum_efficiency: 1.0,
            electronics_floor_db: -8.0,
            phase_setting: FRAC_PI_2,
            gain_imbalance: 0.0,
        }
    }
}

impl DetectorConfig {
    pub fn noiseless() -> Self {
        Self {
            electronics_floor_db: f64::NEG_INFINITY,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.quantum_efficiency) {
            return Err(invalid(
                "quantum_efficiency",
                format!("must lie in [0, 1], got {}", self.quantum_efficiency),
            ));
        }
        floor_rel_noiseless(self.electronics_floor_db)?;
        if !self.phase_setting.is_finite() {
            return Err(invalid("phase_setting", "must be finite"));
        }
        if !(self.gain_imbalance.is_finite() && self.gain_imbalance.abs() < 2.0) {
            return Err(invalid("gain_imbalance", "must lie in (-2, 2)"));
        }
        Ok(())
    }

    /// Electronics noise variance per detector, relative to the noiseless SNL.
    pub fn electronics_variance(&self) -> f64 {
        match floor_rel_noiseless(self.electronics_floor_db) {
            Ok(db) => 10f64.powf(db / 10.0),
            Err(_) => 0.0,
        }
    }

    fn gains(&self) -> (f64, f64) {
        (
            1.0 + self.gain_imbalance / 2.0,
            1.0 - self.gain_imbalance / 2.0,
        )
    }
}

/// A single detector output in analytic form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticOutput {
    /// Noise variance relative to the noiseless SNL.
    pub noise_var: f64,
    /// Amplitude of the tone in this output.
    pub tone_amplitude: f64,
}

impl AnalyticOutput {
    pub fn tone_power(&self) -> f64 {
        self.tone_amplitude * self.tone_amplitude / 2.0
    }

    /// Noise variance plus tone power.
    pub fn total_power(&self) -> f64 {
        self.noise_var + self.tone_power()
    }

    /// Tone power over noise variance, in dB.
    pub fn snr_db(&self) -> f64 {
        10.0 * (self.tone_power() / self.noise_var).log10()
    }

    /// Noise floor in dB relative to a reference output.
    pub fn floor_db_rel(&self, reference: &AnalyticOutput) -> f64 {
        10.0 * (self.noise_var / reference.noise_var).log10()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticBellOutputs {
    pub i_plus: AnalyticOutput,
    pub i_minus: AnalyticOutput,
}

/// Noise-stream addressing for a Monte Carlo run. Different `run` values
/// draw independent detector noise from the same seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunNoise {
    pub seed: u64,
    pub run: u16,
    pub workers: Option<usize>,
}

impl RunNoise {
    pub fn new(seed: u64, run: u16) -> Self {
        Self {
            seed,
            run,
            workers: None,
        }
    }

    fn stream(&self, purpose: Purpose, k: u16) -> StreamId {
        StreamId::new(purpose, self.run.wrapping_mul(8).wrapping_add(k))
    }

    fn electronics_seed(&self) -> u64 {
        self.seed ^ (u64::from(self.run) << 40) ^ 0x5eed_e1ec
    }
}

/// The linear readout of Bob's station.
#[derive(Debug, Clone)]
struct BellReadout {
    transform: SymplecticTransform,
    /// Detection directions on the output modes (4-vectors).
    det_c: [f64; 4],
    det_d: [f64; 4],
}

impl BellReadout {
    fn new(det: &DetectorConfig) -> Result<Self> {
        det.validate()?;
        let bs = SymplecticTransform::beamsplitter(2, 0.5, (0, 1))?;
        let transform = bs.after(&SymplecticTransform::phase_shift(2, det.phase_setting, 0)?)?;
        // Nominal carriers: equal real amplitudes, locked at π/2.
        let nominal = bs.after(&SymplecticTransform::phase_shift(2, FRAC_PI_2, 0)?)?;
        let carrier = GaussianState::vacuum(2)
            .displace(0, 1.0, 0.0)?
            .displace(1, 1.0, 0.0)?
            .apply_symplectic(&nominal)?;
        let m = carrier.mean();
        let phi_c = m[1].atan2(m[0]);
        let phi_d = m[3].atan2(m[2]);
        Ok(Self {
            transform,
            det_c: [phi_c.cos(), phi_c.sin(), 0.0, 0.0],
            det_d: [0.0, 0.0, phi_d.cos(), phi_d.sin()],
        })
    }

    /// Detector directions pulled back to the input quadratures `Sᵀ·u`.
    fn input_vectors(&self) -> ([f64; 4], [f64; 4]) {
        let st = self.transform.matrix().transpose();
        let pull = |u: &[f64; 4]| {
            let v = &st * nalgebra::DVector::from_column_slice(u);
            [v[0], v[1], v[2], v[3]]
        };
        (pull(&self.det_c), pull(&self.det_d))
    }
}

fn check_two_mode(state: &GaussianState) -> Result<()> {
    if state.n_modes() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: state.n_modes(),
        });
    }
    Ok(())
}

/// Alice's encoding on beam 1 (mode 0) of a two-beam state.
pub fn encode_state(state: &GaussianState, signal: &ClassicalSignal) -> Result<GaussianState> {
    signal.validate()?;
    state.displace(0, signal.depth_x, signal.depth_y)
}

/// Alice's encoding on a beam-1 trace: adds `depth·sin(2πft)` to its
/// amplitude (first) and phase (second) channels.
pub fn encode_trace(beam1: &mut TimeTrace, signal: &ClassicalSignal) -> Result<()> {
    signal.validate()?;
    if signal.mod_freq_hz >= beam1.nyquist_hz() {
        return Err(Error::ToneAboveNyquist {
            freq_hz: signal.mod_freq_hz,
            nyquist_hz: beam1.nyquist_hz(),
        });
    }
    if beam1.n_channels() < 2 {
        return Err(Error::MismatchedTraces(
            "beam 1 needs X and Y channels".into(),
        ));
    }
    let w = 2.0 * PI * signal.mod_freq_hz / beam1.sample_rate_hz;
    for (ch, depth) in [(0, signal.depth_x), (1, signal.depth_y)] {
        if depth == 0.0 {
            continue;
        }
        for (n, v) in beam1.channel_at_mut(ch).iter_mut().enumerate() {
            *v += depth * (w * n as f64).sin();
        }
    }
    Ok(())
}

/// Bob's Bell measurement on a two-beam state (beam 1 = mode 0).
pub fn bell_measure_state(
    state: &GaussianState,
    det: &DetectorConfig,
) -> Result<AnalyticBellOutputs> {
    check_two_mode(state)?;
    let readout = BellReadout::new(det)?;
    let out = state
        .apply_symplectic(&readout.transform)?
        .apply_loss(&LossChannel::new(0, det.quantum_efficiency)?)?
        .apply_loss(&LossChannel::new(1, det.quantum_efficiency)?)?;
    let (gc, gd) = det.gains();
    let plus: Vec<f64> = (0..4)
        .map(|q| (gc * readout.det_c[q] + gd * readout.det_d[q]) * FRAC_1_SQRT_2)
        .collect();
    let minus: Vec<f64> = (0..4)
        .map(|q| (gd * readout.det_d[q] - gc * readout.det_c[q]) * FRAC_1_SQRT_2)
        .collect();
    let electronics = det.electronics_variance() * (gc * gc + gd * gd) / 2.0;
    Ok(AnalyticBellOutputs {
        i_plus: AnalyticOutput {
            noise_var: out.combo_variance(&plus)? + electronics,
            tone_amplitude: out.combo_mean(&plus)?,
        },
        i_minus: AnalyticOutput {
            noise_var: out.combo_variance(&minus)? + electronics,
            tone_amplitude: out.combo_mean(&minus)?,
        },
    })
}

/// Bob's outputs with both inputs in vacuum: the measured SNL.
pub fn snl_reference_state(det: &DetectorConfig) -> Result<AnalyticBellOutputs> {
    bell_measure_state(&GaussianState::vacuum(2), det)
}

/// Eve's direct detection of the amplitude quadrature of mode 0.
pub fn intercept_state(state: &GaussianState, det: &DetectorConfig) -> Result<AnalyticOutput> {
    det.validate()?;
    let eta = det.quantum_efficiency;
    let mut c = vec![0.0; 2 * state.n_modes()];
    c[0] = 1.0;
    Ok(AnalyticOutput {
        noise_var: eta * state.combo_variance(&c)? + (1.0 - eta) + det.electronics_variance(),
        tone_amplitude: eta.sqrt() * state.combo_mean(&c)?,
    })
}

/// Eve's measured shot-noise level.
pub fn intercept_snl(det: &DetectorConfig) -> Result<AnalyticOutput> {
    intercept_state(&GaussianState::vacuum(1), det)
}

/// Bob's Bell measurement on beam traces. Each trace carries the `X, Y`
/// channels of one beam.
pub fn bell_measure_trace(
    beam1: &TimeTrace,
    beam2: &TimeTrace,
    det: &DetectorConfig,
    noise: &RunNoise,
) -> Result<TimeTrace> {
    if beam1.len() != beam2.len() || beam1.sample_rate_hz != beam2.sample_rate_hz {
        return Err(Error::MismatchedTraces(format!(
            "beam 1 has {} samples at {} Hz, beam 2 has {} at {} Hz",
            beam1.len(),
            beam1.sample_rate_hz,
            beam2.len(),
            beam2.sample_rate_hz
        )));
    }
    if beam1.n_channels() < 2 || beam2.n_channels() < 2 {
        return Err(Error::MismatchedTraces(
            "beams need X and Y channels".into(),
        ));
    }
    let readout = BellReadout::new(det)?;
    let (vc, vd) = readout.input_vectors();
    let inputs = [
        beam1.channel_at(0),
        beam1.channel_at(1),
        beam2.channel_at(0),
        beam2.channel_at(1),
    ];
    let len = beam1.len();
    let eta = det.quantum_efficiency;
    let detect = |v: &[f64; 4], k: u16| -> Vec<f64> {
        let mut out = vec![0.0; len];
        for (w, input) in v.iter().zip(&inputs) {
            if *w != 0.0 {
                let w = eta.sqrt() * w;
                out.iter_mut()
                    .zip(input.iter())
                    .for_each(|(o, x)| *o += w * x);
            }
        }
        if eta < 1.0 {
            let vac = standard_normals(
                len,
                noise.seed,
                noise.stream(Purpose::DetectorLoss, k),
                noise.workers,
            );
            let w = (1.0 - eta).sqrt();
            out.iter_mut().zip(vac).for_each(|(o, n)| *o += w * n);
        }
        out
    };
    let currents = TimeTrace::new(
        beam1.sample_rate_hz,
        noise.seed,
        beam1.segment_count,
        vec!["d_c".into(), "d_d".into()],
        vec![detect(&vc, 0), detect(&vd, 1)],
    )?;
    let floor = floor_rel_noiseless(det.electronics_floor_db)?;
    let currents = add_electronics_noise(currents, floor, noise.electronics_seed(), noise.workers)?;

    let (gc, gd) = det.gains();
    let (dc, dd) = (currents.channel_at(0), currents.channel_at(1));
    let plus = dc
        .iter()
        .zip(dd)
        .map(|(c, d)| (gc * c + gd * d) * FRAC_1_SQRT_2)
        .collect();
    let minus = dc
        .iter()
        .zip(dd)
        .map(|(c, d)| (gd * d - gc * c) * FRAC_1_SQRT_2)
        .collect();
    TimeTrace::new(
        beam1.sample_rate_hz,
        noise.seed,
        beam1.segment_count,
        vec![I_PLUS.into(), I_MINUS.into()],
        vec![plus, minus],
    )
}

/// Bob's pipeline with both beams replaced by vacuum noise and no tones.
/// `params.lane` selects the source stream and the detector-noise run.
pub fn snl_reference_trace(det: &DetectorConfig, params: &SynthesisParams) -> Result<TimeTrace> {
    let vac = synthesize_traces(&FlatSpectrum::vacuum(2), params)?;
    let mut modes = vac.into_modes()?;
    let beam2 = modes.pop().expect("two modes");
    let beam1 = modes.pop().expect("two modes");
    bell_measure_trace(
        &beam1,
        &beam2,
        det,
        &RunNoise {
            seed: params.seed,
            run: params.lane,
            workers: params.workers,
        },
    )
}

/// Eve's photocurrent from direct detection of beam 1.
pub fn intercept_trace(
    beam1: &TimeTrace,
    det: &DetectorConfig,
    noise: &RunNoise,
) -> Result<TimeTrace> {
    det.validate()?;
    if beam1.n_channels() < 1 {
        return Err(Error::MismatchedTraces("beam 1 has no channels".into()));
    }
    let eta = det.quantum_efficiency;
    let len = beam1.len();
    let mut out: Vec<f64> = beam1.channel_at(0).iter().map(|x| eta.sqrt() * x).collect();
    if eta < 1.0 {
        let vac = standard_normals(
            len,
            noise.seed,
            noise.stream(Purpose::DetectorLoss, 2),
            noise.workers,
        );
        let w = (1.0 - eta).sqrt();
        out.iter_mut().zip(vac).for_each(|(o, n)| *o += w * n);
    }
    let trace = TimeTrace::new(
        beam1.sample_rate_hz,
        noise.seed,
        beam1.segment_count,
        vec![EVE.into()],
        vec![out],
    )?;
    add_electronics_noise(
        trace,
        floor_rel_noiseless(det.electronics_floor_db)?,
        noise.electronics_seed() ^ 0xe7e,
        noise.workers,
    )
}

/// Eve's spectrum of beam 1, relative to her own measured SNL (the same
/// detector looking at vacuum, drawn on run `noise.run + 1`).
pub fn intercept_single_beam(
    beam1: &TimeTrace,
    det: &DetectorConfig,
    analyzer: &AnalyzerSettings,
    noise: &RunNoise,
) -> Result<SpectrumEstimate> {
    let eve = intercept_trace(beam1, det, noise)?;
    let snl_noise = RunNoise {
        run: noise.run.wrapping_add(1),
        ..*noise
    };
    let vac = standard_normals(
        beam1.len(),
        noise.seed,
        snl_noise.stream(Purpose::Vacuum, 0),
        noise.workers,
    );
    let vac = TimeTrace::new(
        beam1.sample_rate_hz,
        noise.seed,
        1,
        vec!["X".into()],
        vec![vac],
    )?;
    let eve_snl = intercept_trace(&vac, det, &snl_noise)?;
    let snl = SnlReference::from_spectrum(
        "eve_snl",
        &estimate_psd(eve_snl.channel_at(0), beam1.sample_rate_hz, analyzer)?,
    );
    Ok(estimate_psd(eve.channel_at(0), beam1.sample_rate_hz, analyzer)?.relative_to(EVE, &snl))
}

/// Splits a beam on a beamsplitter of transmissivity `t` whose other input
/// port sees vacuum. Returns the transmitted and reflected beams.
pub fn split_beam(beam: &TimeTrace, t: f64, noise: &RunNoise) -> Result<(TimeTrace, TimeTrace)> {
    if !(0.0..=1.0).contains(&t) {
        return Err(invalid("tap_T", format!("must lie in [0, 1], got {t}")));
    }
    let (a, b) = (t.sqrt(), (1.0 - t).sqrt());
    let mut through = Vec::with_capacity(beam.n_channels());
    let mut reflected = Vec::with_capacity(beam.n_channels());
    for ch in 0..beam.n_channels() {
        let vac = standard_normals(
            beam.len(),
            noise.seed,
            noise.stream(Purpose::Vacuum, 1 + ch as u16),
            noise.workers,
        );
        let x = beam.channel_at(ch);
        through.push(x.iter().zip(&vac).map(|(x, v)| a * x + b * v).collect());
        reflected.push(x.iter().zip(&vac).map(|(x, v)| b * x - a * v).collect());
    }
    let labels = beam.labels().to_vec();
    Ok((
        TimeTrace::new(
            beam.sample_rate_hz,
            beam.seed,
            beam.segment_count,
            labels.clone(),
            through,
        )?,
        TimeTrace::new(
            beam.sample_rate_hz,
            beam.seed,
            beam.segment_count,
            labels,
            reflected,
        )?,
    ))
}

/// Outcome of Eve tapping a fraction of beam 1 on its way to Bob.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TapOutcome {
    /// Bob's amplitude-channel (`i+`) SNR.
    pub bob_snr_db: f64,
    /// Bob's phase-channel (`i-`) SNR.
    pub bob_snr_phase_db: f64,
    /// Eve's amplitude SNR on the tapped fraction; `-inf` with no tap.
    pub eve_snr_db: f64,
    /// Change of Bob's `i+` noise floor relative to the untapped link.
    pub bob_floor_shift_db: f64,
    /// Bob's `i+` floor relative to his measured SNL.
    pub bob_floor_db: f64,
    /// Eve's floor relative to her measured SNL.
    pub eve_floor_db: f64,
}

/// Eve inserts a beamsplitter of transmissivity `tap_t` into the beam-1
/// channel and direct-detects the reflected part; Bob decodes what passes.
/// `state` is the encoded two-beam state.
pub fn tap_attack(state: &GaussianState, tap_t: f64, det: &DetectorConfig) -> Result<TapOutcome> {
    check_two_mode(state)?;
    if !(0.0..=1.0).contains(&tap_t) {
        return Err(invalid("tap_T", format!("must lie in [0, 1], got {tap_t}")));
    }
    let untapped = bell_measure_state(state, det)?;
    let tap = SymplecticTransform::beamsplitter(3, tap_t, (0, 2))?;
    let split = state.with_vacuum_modes(1).apply_symplectic(&tap)?;
    let bob = bell_measure_state(&split.reduce(&[0, 1])?, det)?;
    let eve = intercept_state(&split.reduce(&[2])?, det)?;
    let bob_snl = snl_reference_state(det)?;
    let eve_snl = intercept_snl(det)?;
    Ok(TapOutcome {
        bob_snr_db: bob.i_plus.snr_db(),
        bob_snr_phase_db: bob.i_minus.snr_db(),
        eve_snr_db: eve.snr_db(),
        bob_floor_shift_db: bob.i_plus.floor_db_rel(&untapped.i_plus),
        bob_floor_db: bob.i_plus.floor_db_rel(&bob_snl.i_plus),
        eve_floor_db: eve.floor_db_rel(&eve_snl),
    })
}

/// Bob-over-Eve SNR advantage on the amplitude channel for a pure two-mode
/// squeezed link with squeezing `r`: `(e^{4r} + 1)/4`.
pub fn pure_state_advantage(r: f64) -> f64 {
    ((4.0 * r).exp() + 1.0) / 4.0
}
