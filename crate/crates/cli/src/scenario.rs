//! The measurement scenarios: spectra of the correlations, decoded tones,
//! single-beam interception, analytic sweeps and calibration.

use densecode::nopa::{epr_covariance_at, EfficiencyPair, NopaParams};
use densecode::protocol::{
    bell_measure_state, bell_measure_trace, encode_state, encode_trace, intercept_single_beam,
    intercept_state, pure_state_advantage, snl_reference_state, snl_reference_trace, split_beam,
    tap_attack, ClassicalSignal, DetectorConfig, RunNoise, I_MINUS, I_PLUS,
};
use densecode::signal::electronics_correct;
use densecode::{
    calibrate_efficiency, estimate_psd, synthesize_traces, teleport_fidelity, tone_snr,
    variance_product, ChannelComparison, EprSpectrum, FlatSpectrum, GaussianState, ParametricMode,
    SnlReference, SpectrumEstimate, TimeTrace, VariancePair,
};
use serde::Serialize;

use crate::config::{Resolved, ScenarioConfig};
use crate::error::CliError;

/// Bins excluded on each side of a tone when estimating the floor under it.
pub const GUARD_BINS: usize = 3;

// Stream lanes / detector-noise runs. Each independent noise source of a
// scenario gets its own.
const SOURCE_LANE: u16 = 0;
const SNL_LANE: u16 = 1;
const COHERENT_LANE: u16 = 2;
const EVE_RUN: u16 = 3;
const TAP_RUN: u16 = 5;

/// A named pass/fail evaluation reported alongside the metrics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            passed,
            detail,
        }
    }
}

/// Parameters that the config resolved to.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedSummary {
    pub pump_mw: f64,
    pub source_efficiency_x: f64,
    pub source_efficiency_y: f64,
    pub electronics_variance: f64,
    pub n_samples: usize,
}

impl ResolvedSummary {
    fn of(res: &Resolved) -> Self {
        Self {
            pump_mw: res.nopa.pump_mw,
            source_efficiency_x: res.source_efficiency.x,
            source_efficiency_y: res.source_efficiency.y,
            electronics_variance: res.detector.electronics_variance(),
            n_samples: res.synthesis.n_samples,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationMetrics {
    /// Band-averaged `Var(X1+X2)` relative to the measured SNL.
    pub measured_sum_x_db: f64,
    /// Band-averaged `Var(Y1-Y2)` relative to the measured SNL.
    pub measured_diff_y_db: f64,
    pub corrected_sum_x_db: f64,
    pub corrected_diff_y_db: f64,
    /// Model values at the band centre.
    pub expected_measured_sum_x_db: f64,
    pub expected_measured_diff_y_db: f64,
    pub variance_product_measured: f64,
    pub variance_product_corrected: f64,
    pub fidelity_measured: f64,
    pub fidelity_corrected: f64,
    pub snl_level: f64,
    pub n_averages: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecodeMetrics {
    pub snr_plus_db: f64,
    pub snr_minus_db: f64,
    pub snr_plus_coherent_db: f64,
    pub snr_minus_coherent_db: f64,
    pub floor_plus_db: f64,
    pub floor_minus_db: f64,
    pub improvement_plus_db: f64,
    pub improvement_minus_db: f64,
    pub improvement_plus_corrected_db: f64,
    pub improvement_minus_corrected_db: f64,
    pub expected_improvement_plus_db: f64,
    pub expected_improvement_minus_db: f64,
    pub expected_improvement_plus_corrected_db: f64,
    pub expected_improvement_minus_corrected_db: f64,
    pub dense_bits: f64,
    pub coherent_bits: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InterceptMetrics {
    /// Eve's floor under the tone relative to her measured SNL.
    pub eve_floor_db: f64,
    pub eve_snr_db: f64,
    pub eve_snr_corrected_db: f64,
    pub bob_floor_db: f64,
    pub bob_snr_db: f64,
    pub bob_snr_corrected_db: f64,
    /// Bob's corrected SNR over Eve's.
    pub advantage_db: f64,
    /// `(e^{4r}+1)/4` with `e^{2r}` the antisqueezed level of the source.
    pub pure_state_advantage_db: f64,
    /// Advantage predicted by the covariance model of the configured link.
    pub model_advantage_db: f64,
    pub squeezing_r: f64,
    pub tap_t: Option<f64>,
}

/// A spectrum produced by a run together with the file stem it is written under.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedSpectrum {
    pub stem: String,
    pub spectrum: SpectrumEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub axis: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl SweepTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Metrics {
    Correlation(CorrelationMetrics),
    Decode(DecodeMetrics),
    Intercept(InterceptMetrics),
    Sweep(SweepSummary),
    Calibration(CalibrationResult),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub points: usize,
    /// Axis-specific headline value: crossover squeezing (r_db), fitted
    /// exponent (phase_error); NaN when not applicable.
    pub headline: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationResult {
    pub target_x_db: f64,
    pub target_y_db: f64,
    pub efficiency_x: f64,
    pub efficiency_y: f64,
}

impl CalibrationResult {
    /// Config fragment that fixes the calibrated efficiencies.
    pub fn fragment(&self) -> String {
        format!(
            "[nopa]\nefficiency_x = {:?}\nefficiency_y = {:?}\n",
            self.efficiency_x, self.efficiency_y
        )
    }
}

/// Everything a subcommand produces.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub command: String,
    pub metrics: Metrics,
    pub spectra: Vec<NamedSpectrum>,
    pub table: Option<SweepTable>,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    pub resolved: Option<ResolvedSummary>,
    /// Band written to the spectrum CSVs.
    pub band: (f64, f64),
}

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

fn lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

fn source_beams(res: &Resolved, lane: u16) -> Result<(TimeTrace, TimeTrace), CliError> {
    let model = EprSpectrum::new(res.nopa.clone())?;
    beams_of(synthesize_traces(&model, &res.synthesis.with_lane(lane))?)
}

fn vacuum_beams(res: &Resolved, lane: u16) -> Result<(TimeTrace, TimeTrace), CliError> {
    beams_of(synthesize_traces(
        &FlatSpectrum::vacuum(2),
        &res.synthesis.with_lane(lane),
    )?)
}

fn beams_of(trace: TimeTrace) -> Result<(TimeTrace, TimeTrace), CliError> {
    let mut modes = trace.into_modes()?;
    let b2 = modes.pop().expect("two modes");
    let b1 = modes.pop().expect("two modes");
    Ok((b1, b2))
}

fn noise(res: &Resolved, run: u16) -> RunNoise {
    RunNoise {
        seed: res.synthesis.seed,
        run,
        workers: res.synthesis.workers,
    }
}

/// Bob's measured SNL: both Bell outputs of a vacuum run, averaged. Also
/// returns the `i+` spectrum of that run against it.
fn bob_snl(res: &Resolved) -> Result<(SnlReference, SpectrumEstimate), CliError> {
    let vac = snl_reference_trace(&res.detector, &res.synthesis.with_lane(SNL_LANE))?;
    let fs = res.synthesis.sample_rate_hz;
    let plus = estimate_psd(vac.channel(I_PLUS).expect("i_plus"), fs, &res.analyzer)?;
    let minus = estimate_psd(vac.channel(I_MINUS).expect("i_minus"), fs, &res.analyzer)?;
    let a = SnlReference::from_spectrum("snl", &plus);
    let b = SnlReference::from_spectrum("snl", &minus);
    let snl = SnlReference {
        id: "snl".into(),
        level: 0.5 * (a.level + b.level),
    };
    let spec = plus.relative_to("snl", &snl);
    Ok((snl, spec))
}

fn spectrum(
    trace: &TimeTrace,
    channel: &str,
    id: &str,
    snl: &SnlReference,
    res: &Resolved,
) -> Result<SpectrumEstimate, CliError> {
    let psd = estimate_psd(
        trace.channel(channel).expect("known channel"),
        trace.sample_rate_hz,
        &res.analyzer,
    )?;
    Ok(psd.relative_to(id, snl))
}

fn named(stem: &str, spectrum: SpectrumEstimate) -> NamedSpectrum {
    NamedSpectrum {
        stem: stem.into(),
        spectrum,
    }
}

/// Tone SNR with the electronics power removed from the floor under the
/// tone; `floor_db` is that floor relative to the measured SNL.
pub fn snr_without_electronics(
    snr_db: f64,
    floor_db: f64,
    electronics_floor_db: f64,
) -> Result<f64, CliError> {
    if electronics_floor_db == f64::NEG_INFINITY {
        return Ok(snr_db);
    }
    let (m, e) = (lin(floor_db), lin(electronics_floor_db));
    if m.is_nan() || e.is_nan() || m <= e {
        return Err(CliError::Model(format!(
            "floor {floor_db:.2} dB is not above the electronics floor {electronics_floor_db:.2} dB"
        )));
    }
    Ok(snr_db + db(m) - db(m - e))
}

/// Noise spectra of the two correlation combinations against the SNL.
pub fn run_fig2(config: &ScenarioConfig) -> Result<RunOutput, CliError> {
    let res = config.resolve()?;
    let (lo, hi) = (config.output.band_lo_hz, config.output.band_hi_hz);
    let (beam1, beam2) = source_beams(&res, SOURCE_LANE)?;
    let bell = bell_measure_trace(&beam1, &beam2, &res.detector, &noise(&res, SOURCE_LANE))?;
    drop((beam1, beam2));
    let (snl, snl_spec) = bob_snl(&res)?;
    let sum_x = spectrum(&bell, I_PLUS, "sum_x", &snl, &res)?;
    let diff_y = spectrum(&bell, I_MINUS, "diff_y", &snl, &res)?;

    let e_db = res.detector.electronics_floor_db;
    let mx = sum_x.band_level_db(lo, hi)?;
    let my = diff_y.band_level_db(lo, hi)?;
    let cx = electronics_correct(mx, e_db)?;
    let cy = electronics_correct(my, e_db)?;

    let centre = 0.5 * (lo + hi);
    let model = bell_measure_state(&epr_covariance_at(&res.nopa, centre)?, &res.detector)?;
    let reference = snl_reference_state(&res.detector)?;
    let measured = VariancePair::from_db(mx, my)?;
    let corrected = VariancePair::from_db(cx, cy)?;
    let metrics = CorrelationMetrics {
        measured_sum_x_db: mx,
        measured_diff_y_db: my,
        corrected_sum_x_db: cx,
        corrected_diff_y_db: cy,
        expected_measured_sum_x_db: model.i_plus.floor_db_rel(&reference.i_plus),
        expected_measured_diff_y_db: model.i_minus.floor_db_rel(&reference.i_minus),
        variance_product_measured: variance_product(&measured),
        variance_product_corrected: variance_product(&corrected),
        fidelity_measured: teleport_fidelity(&measured),
        fidelity_corrected: teleport_fidelity(&corrected),
        snl_level: snl.level,
        n_averages: sum_x.n_averages,
    };
    let checks = vec![
        Check::new(
            "sum_x_below_snl",
            mx < 0.0,
            format!("measured Var(X1+X2) {mx:.3} dB re SNL"),
        ),
        Check::new(
            "diff_y_below_snl",
            my < 0.0,
            format!("measured Var(Y1-Y2) {my:.3} dB re SNL"),
        ),
    ];
    Ok(RunOutput {
        command: "fig2".into(),
        metrics: Metrics::Correlation(metrics),
        spectra: vec![
            named("snl", snl_spec),
            named("sum_x", sum_x),
            named("diff_y", diff_y),
        ],
        table: None,
        checks,
        warnings: res.warnings.clone(),
        resolved: Some(ResolvedSummary::of(&res)),
        band: (lo, hi),
    })
}

/// Beams after the optional tap: what reaches Bob, and what Eve takes.
fn apply_tap(
    beam1: TimeTrace,
    tap_t: Option<f64>,
    res: &Resolved,
) -> Result<(TimeTrace, Option<TimeTrace>), CliError> {
    match tap_t {
        None => Ok((beam1, None)),
        Some(t) => {
            let (through, reflected) = split_beam(&beam1, t, &noise(res, TAP_RUN))?;
            Ok((through, Some(reflected)))
        }
    }
}

/// Analytic Bell outputs for the configured source with tones encoded.
fn model_outputs(
    res: &Resolved,
    state: &GaussianState,
    tap_t: Option<f64>,
) -> Result<(f64, f64), CliError> {
    let enc = encode_state(state, &res.signal)?;
    let enc = match tap_t {
        None => enc,
        Some(t) => {
            let bs = densecode::SymplecticTransform::beamsplitter(3, t, (0, 2))?;
            enc.with_vacuum_modes(1)
                .apply_symplectic(&bs)?
                .reduce(&[0, 1])?
        }
    };
    let out = bell_measure_state(&enc, &res.detector)?;
    Ok((out.i_plus.snr_db(), out.i_minus.snr_db()))
}

/// Dense-coded tones decoded by Bob, against the same tones on a coherent
/// (vacuum-correlated) pair.
pub fn run_fig3(config: &ScenarioConfig) -> Result<RunOutput, CliError> {
    let res = config.resolve()?;
    let f0 = res.signal.mod_freq_hz;
    let tap_t = config.attack.tap_t;
    let (snl, _) = bob_snl(&res)?;

    let (mut beam1, beam2) = source_beams(&res, SOURCE_LANE)?;
    encode_trace(&mut beam1, &res.signal)?;
    let (beam1, _) = apply_tap(beam1, tap_t, &res)?;
    let bell = bell_measure_trace(&beam1, &beam2, &res.detector, &noise(&res, SOURCE_LANE))?;
    drop((beam1, beam2));
    let plus = spectrum(&bell, I_PLUS, "i_plus", &snl, &res)?;
    let minus = spectrum(&bell, I_MINUS, "i_minus", &snl, &res)?;
    drop(bell);

    let (mut c1, c2) = vacuum_beams(&res, COHERENT_LANE)?;
    encode_trace(&mut c1, &res.signal)?;
    let coh = bell_measure_trace(&c1, &c2, &res.detector, &noise(&res, COHERENT_LANE))?;
    drop((c1, c2));
    let plus_c = spectrum(&coh, I_PLUS, "i_plus_coherent", &snl, &res)?;
    let minus_c = spectrum(&coh, I_MINUS, "i_minus_coherent", &snl, &res)?;
    drop(coh);

    let e_db = res.detector.electronics_floor_db;
    let snr = |s: &SpectrumEstimate| -> Result<(f64, f64, f64), CliError> {
        let snr = tone_snr(s, f0, GUARD_BINS)?;
        let floor = s.floor_around_db(f0, GUARD_BINS)?;
        Ok((snr, floor, snr_without_electronics(snr, floor, e_db)?))
    };
    let (sp, fp, sp_c) = snr(&plus)?;
    let (sm, fm, sm_c) = snr(&minus)?;
    let (cp, _, cp_c) = snr(&plus_c)?;
    let (cm, _, cm_c) = snr(&minus_c)?;

    // model: same tones through the covariance description
    let (ep, em) = model_outputs(&res, &epr_covariance_at(&res.nopa, f0)?, tap_t)?;
    let (vp, vm) = model_outputs(&res, &GaussianState::vacuum(2), None)?;
    let clean = DetectorConfig {
        electronics_floor_db: f64::NEG_INFINITY,
        ..res.detector
    };
    let clean_res = Resolved {
        detector: clean,
        ..res.clone()
    };
    let (ep0, em0) = model_outputs(&clean_res, &epr_covariance_at(&res.nopa, f0)?, tap_t)?;
    let (vp0, vm0) = model_outputs(&clean_res, &GaussianState::vacuum(2), None)?;

    let corrected = VariancePair::from_db(
        electronics_correct(fp, e_db)?,
        electronics_correct(fm, e_db)?,
    )?;
    let tone_power = 0.5 * (res.signal.depth_x.powi(2) + res.signal.depth_y.powi(2)) / 2.0;
    let channels = ChannelComparison::new(tone_power, &corrected)?;

    let metrics = DecodeMetrics {
        snr_plus_db: sp,
        snr_minus_db: sm,
        snr_plus_coherent_db: cp,
        snr_minus_coherent_db: cm,
        floor_plus_db: fp,
        floor_minus_db: fm,
        improvement_plus_db: sp - cp,
        improvement_minus_db: sm - cm,
        improvement_plus_corrected_db: sp_c - cp_c,
        improvement_minus_corrected_db: sm_c - cm_c,
        expected_improvement_plus_db: ep - vp,
        expected_improvement_minus_db: em - vm,
        expected_improvement_plus_corrected_db: ep0 - vp0,
        expected_improvement_minus_corrected_db: em0 - vm0,
        dense_bits: channels.dense_bits,
        coherent_bits: channels.coherent_bits,
    };
    let checks = vec![
        Check::new(
            "amplitude_improvement_positive",
            metrics.improvement_plus_db > 0.0,
            format!("{:.3} dB", metrics.improvement_plus_db),
        ),
        Check::new(
            "phase_improvement_positive",
            metrics.improvement_minus_db > 0.0,
            format!("{:.3} dB", metrics.improvement_minus_db),
        ),
    ];
    Ok(RunOutput {
        command: "fig3".into(),
        metrics: Metrics::Decode(metrics),
        spectra: vec![
            named("i_plus", plus),
            named("i_minus", minus),
            named("i_plus_coherent", plus_c),
            named("i_minus_coherent", minus_c),
        ],
        table: None,
        checks,
        warnings: res.warnings.clone(),
        resolved: Some(ResolvedSummary::of(&res)),
        band: (config.output.band_lo_hz, config.output.band_hi_hz),
    })
}

/// Eve's direct detection of beam 1, with Bob's decoding of the same tones
/// for contrast.
pub fn run_fig4(config: &ScenarioConfig) -> Result<RunOutput, CliError> {
    let res = config.resolve()?;
    let f0 = res.signal.mod_freq_hz;
    let tap_t = config.attack.tap_t;
    let e_db = res.detector.electronics_floor_db;
    let (snl, _) = bob_snl(&res)?;

    let (mut beam1, beam2) = source_beams(&res, SOURCE_LANE)?;
    encode_trace(&mut beam1, &res.signal)?;
    let (eve_spec, bob_beam1) = match tap_t {
        None => (
            intercept_single_beam(&beam1, &res.detector, &res.analyzer, &noise(&res, EVE_RUN))?,
            beam1,
        ),
        Some(_) => {
            let (through, reflected) = apply_tap(beam1, tap_t, &res)?;
            let reflected = reflected.expect("tap set");
            (
                intercept_single_beam(
                    &reflected,
                    &res.detector,
                    &res.analyzer,
                    &noise(&res, EVE_RUN),
                )?,
                through,
            )
        }
    };
    let bell = bell_measure_trace(&bob_beam1, &beam2, &res.detector, &noise(&res, SOURCE_LANE))?;
    drop((bob_beam1, beam2));
    let bob_spec = spectrum(&bell, I_PLUS, "i_plus", &snl, &res)?;
    drop(bell);

    let eve_floor = eve_spec.floor_around_db(f0, GUARD_BINS)?;
    let eve_snr = tone_snr(&eve_spec, f0, GUARD_BINS)?;
    let bob_floor = bob_spec.floor_around_db(f0, GUARD_BINS)?;
    let bob_snr = tone_snr(&bob_spec, f0, GUARD_BINS)?;
    let eve_c = snr_without_electronics(eve_snr, eve_floor, e_db)?;
    let bob_c = snr_without_electronics(bob_snr, bob_floor, e_db)?;

    let s = res.nopa.spectra_at(f0);
    let r = 0.5 * s.antisqueezed_x.ln();
    let state = epr_covariance_at(&res.nopa, f0)?;
    let clean = DetectorConfig {
        electronics_floor_db: f64::NEG_INFINITY,
        ..res.detector
    };
    let model_adv = match tap_t {
        None => {
            let enc = encode_state(&state, &res.signal)?;
            bell_measure_state(&enc, &clean)?.i_plus.snr_db()
                - intercept_state(&enc, &clean)?.snr_db()
        }
        Some(t) => {
            let tap = tap_attack(&encode_state(&state, &res.signal)?, t, &clean)?;
            tap.bob_snr_db - tap.eve_snr_db
        }
    };
    let metrics = InterceptMetrics {
        eve_floor_db: eve_floor,
        eve_snr_db: eve_snr,
        eve_snr_corrected_db: eve_c,
        bob_floor_db: bob_floor,
        bob_snr_db: bob_snr,
        bob_snr_corrected_db: bob_c,
        advantage_db: bob_c - eve_c,
        pure_state_advantage_db: db(pure_state_advantage(r)),
        model_advantage_db: model_adv,
        squeezing_r: r,
        tap_t,
    };
    let checks = vec![Check::new(
        "bob_beats_eve",
        metrics.advantage_db > 0.0,
        format!("Bob's SNR exceeds Eve's by {:.3} dB", metrics.advantage_db),
    )];
    Ok(RunOutput {
        command: "fig4".into(),
        metrics: Metrics::Intercept(metrics),
        spectra: vec![named("eve", eve_spec), named("bob_i_plus", bob_spec)],
        table: None,
        checks,
        warnings: res.warnings.clone(),
        resolved: Some(ResolvedSummary::of(&res)),
        band: (config.output.band_lo_hz, config.output.band_hi_hz),
    })
}

/// Sweepable parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Squeezing of a pure two-mode squeezed link, in dB.
    RDb,
    /// Transmissivity of a tap on beam 1.
    TapT,
    /// Lock error of the Bell measurement, in radians.
    PhaseError,
    /// Pump power over threshold.
    PumpRatio,
}

impl SweepAxis {
    pub fn parse(name: &str) -> Result<Self, CliError> {
        match name {
            "r_db" => Ok(Self::RDb),
            "tap_T" => Ok(Self::TapT),
            "phase_error" => Ok(Self::PhaseError),
            "pump_ratio" => Ok(Self::PumpRatio),
            other => Err(CliError::Config(format!(
                "sweep.axis: unknown axis `{other}`, expected one of r_db, tap_T, phase_error, pump_ratio"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::RDb => "r_db",
            Self::TapT => "tap_T",
            Self::PhaseError => "phase_error",
            Self::PumpRatio => "pump_ratio",
        }
    }

    /// Default `(start, stop, points)`.
    pub fn default_range(&self) -> (f64, f64, usize) {
        match self {
            Self::RDb => (0.0, 6.0, 61),
            Self::TapT => (1.0, 0.0, 21),
            Self::PhaseError => (0.0, 0.2, 21),
            Self::PumpRatio => (0.05, 0.95, 19),
        }
    }
}

fn grid(start: f64, stop: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![start];
    }
    (0..points)
        .map(|i| start + (stop - start) * i as f64 / (points - 1) as f64)
        .collect()
}

fn strictly(values: &[f64], ord: std::cmp::Ordering) -> bool {
    values
        .windows(2)
        .all(|w| w[1].partial_cmp(&w[0]) == Some(ord))
}

/// Squeezing (dB) at which Bob's and Eve's SNRs cross on a pure link.
pub const CROSSOVER_R: f64 = 0.274_653_072_167_027_1; // ln(3)/4

/// Analytic sweep of one parameter around the configured link.
pub fn sweep(config: &ScenarioConfig) -> Result<RunOutput, CliError> {
    let axis = SweepAxis::parse(&config.sweep.axis)?;
    let sw = &config.sweep;
    if !(sw.start.is_finite() && sw.stop.is_finite()) || sw.points == 0 {
        return Err(CliError::Config(
            "sweep: start and stop must be finite and points >= 1".into(),
        ));
    }
    let res = config.resolve()?;
    let xs = grid(sw.start, sw.stop, sw.points);
    let f0 = res.signal.mod_freq_hz;
    let mut checks = Vec::new();
    let mut headline = f64::NAN;
    let (columns, rows): (Vec<&str>, Vec<Vec<f64>>) = match axis {
        SweepAxis::RDb => {
            let det = DetectorConfig::noiseless();
            let sig = ClassicalSignal::new(f0, 1.0, 1.0)?;
            let mut rows = Vec::new();
            for &x in &xs {
                check_range(x >= 0.0, "r_db", x)?;
                let r = x * std::f64::consts::LN_10 / 20.0;
                let enc = encode_state(
                    &GaussianState::two_mode_squeezed(r, ParametricMode::Deamplify)?,
                    &sig,
                )?;
                let bob = bell_measure_state(&enc, &det)?.i_plus.snr_db();
                let eve = intercept_state(&enc, &det)?.snr_db();
                rows.push(vec![x, r, bob, eve, bob - eve]);
            }
            let expected = db((2.0 * CROSSOVER_R).exp());
            headline = crossover(&rows, 0, 4);
            checks.push(Check::new(
                "crossover_at_threshold",
                (headline - expected).abs() <= 0.2,
                format!("crossover at {headline:.3} dB squeezing, threshold {expected:.3} dB"),
            ));
            (
                vec!["r_db", "r", "bob_snr_db", "eve_snr_db", "advantage_db"],
                rows,
            )
        }
        SweepAxis::TapT => {
            let enc = encode_state(&epr_covariance_at(&res.nopa, f0)?, &res.signal)?;
            let mut rows = Vec::new();
            for &t in &xs {
                check_range((0.0..=1.0).contains(&t), "tap_T", t)?;
                let o = tap_attack(&enc, t, &res.detector)?;
                rows.push(vec![
                    t,
                    o.bob_snr_db,
                    o.bob_snr_phase_db,
                    o.eve_snr_db,
                    o.bob_floor_db,
                    o.bob_floor_shift_db,
                ]);
            }
            let mut sorted = rows.clone();
            sorted.sort_by(|a, b| b[0].total_cmp(&a[0]));
            let snr: Vec<f64> = sorted.iter().map(|r| r[1]).collect();
            let floor: Vec<f64> = sorted.iter().map(|r| r[4]).collect();
            checks.push(Check::new(
                "bob_snr_decreasing",
                strictly(&snr, std::cmp::Ordering::Less),
                "Bob's amplitude SNR strictly falls as tap_T decreases".into(),
            ));
            checks.push(Check::new(
                "bob_floor_increasing",
                strictly(&floor, std::cmp::Ordering::Greater),
                "Bob's floor strictly rises as tap_T decreases".into(),
            ));
            (
                vec![
                    "tap_T",
                    "bob_snr_db",
                    "bob_snr_phase_db",
                    "eve_snr_db",
                    "bob_floor_db",
                    "bob_floor_shift_db",
                ],
                rows,
            )
        }
        SweepAxis::PhaseError => {
            let state = epr_covariance_at(&res.nopa, f0)?;
            let floor = |eps: f64| -> Result<(f64, f64), CliError> {
                let det = DetectorConfig {
                    phase_setting: config.detector.phase_setting + eps,
                    ..res.detector
                };
                let out = bell_measure_state(&state, &det)?;
                let snl = snl_reference_state(&det)?;
                Ok((
                    out.i_plus.noise_var / snl.i_plus.noise_var,
                    out.i_minus.noise_var / snl.i_minus.noise_var,
                ))
            };
            let (_, base) = floor(0.0)?;
            let mut rows = Vec::new();
            for &eps in &xs {
                check_range(eps.abs() < std::f64::consts::PI, "phase_error", eps)?;
                let (p, m) = floor(eps)?;
                rows.push(vec![eps, db(p), db(m), m - base]);
            }
            headline = fit_exponent(&rows);
            checks.push(Check::new(
                "phase_error_quadratic",
                (headline - 2.0).abs() <= 0.2,
                format!("i_minus excess grows as eps^{headline:.3}"),
            ));
            (
                vec![
                    "phase_error",
                    "i_plus_floor_db",
                    "i_minus_floor_db",
                    "i_minus_excess",
                ],
                rows,
            )
        }
        SweepAxis::PumpRatio => {
            let reference = snl_reference_state(&res.detector)?;
            let mut rows = Vec::new();
            for &ratio in &xs {
                check_range((0.0..1.0).contains(&ratio), "pump_ratio", ratio)?;
                let params = NopaParams {
                    pump_mw: ratio * res.nopa.threshold_mw,
                    ..res.nopa.clone()
                };
                let s = params.spectra_at(f0);
                let out = bell_measure_state(&epr_covariance_at(&params, f0)?, &res.detector)?;
                rows.push(vec![
                    ratio,
                    db(s.squeezed_x),
                    db(s.antisqueezed_x),
                    db(s.squeezed_y),
                    out.i_plus.floor_db_rel(&reference.i_plus),
                ]);
            }
            let mut sorted = rows.clone();
            sorted.sort_by(|a, b| a[0].total_cmp(&b[0]));
            let sq: Vec<f64> = sorted.iter().map(|r| r[1]).collect();
            checks.push(Check::new(
                "squeezing_deepens_with_pump",
                res.nopa.efficiency.x == 0.0 || strictly(&sq, std::cmp::Ordering::Less),
                "squeezed level strictly falls as the pump rises".into(),
            ));
            (
                vec![
                    "pump_ratio",
                    "squeezed_x_db",
                    "antisqueezed_x_db",
                    "squeezed_y_db",
                    "measured_sum_x_db",
                ],
                rows,
            )
        }
    };
    let points = rows.len();
    Ok(RunOutput {
        command: "sweep".into(),
        metrics: Metrics::Sweep(SweepSummary { points, headline }),
        spectra: Vec::new(),
        table: Some(SweepTable {
            axis: axis.name().into(),
            columns: columns.into_iter().map(String::from).collect(),
            rows,
        }),
        checks,
        warnings: res.warnings.clone(),
        resolved: Some(ResolvedSummary::of(&res)),
        band: (config.output.band_lo_hz, config.output.band_hi_hz),
    })
}

fn check_range(ok: bool, axis: &str, x: f64) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "sweep: value {x} out of range for axis {axis}"
        )))
    }
}

/// Linear interpolation of the first sign change of column `y` against `x`.
fn crossover(rows: &[Vec<f64>], x: usize, y: usize) -> f64 {
    for w in rows.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if a[y] == 0.0 {
            return a[x];
        }
        if a[y].signum() != b[y].signum() {
            return a[x] + (b[x] - a[x]) * a[y] / (a[y] - b[y]);
        }
    }
    f64::NAN
}

/// Least-squares slope of log(excess) against log|eps| over the points with
/// a positive excess.
fn fit_exponent(rows: &[Vec<f64>]) -> f64 {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r[0] != 0.0 && r[3] > 0.0)
        .map(|r| (r[0].abs().ln(), r[3].ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Efficiencies reproducing the squeezing targets (`target_db` overrides
/// both quadratures).
pub fn calibrate(config: &ScenarioConfig, target_db: Option<f64>) -> Result<RunOutput, CliError> {
    let tx = target_db.unwrap_or(config.calibration.target_x_db);
    let ty = target_db.unwrap_or(config.calibration.target_y_db);
    let mut cfg = config.clone();
    cfg.nopa.efficiency_x = None;
    cfg.nopa.efficiency_y = None;
    cfg.calibration.eve_floor_db = None;
    cfg.calibration.target_x_db = tx;
    cfg.calibration.target_y_db = ty;
    // validate everything else first
    let res = cfg.resolve()?;
    let f0 = res.signal.mod_freq_hz;
    let params = NopaParams {
        efficiency: EfficiencyPair::symmetric(1.0),
        ..res.nopa.clone()
    };
    let result = CalibrationResult {
        target_x_db: tx,
        target_y_db: ty,
        efficiency_x: calibrate_efficiency(&params, f0, tx)? / res.detector.quantum_efficiency,
        efficiency_y: calibrate_efficiency(&params, f0, ty)? / res.detector.quantum_efficiency,
    };
    Ok(RunOutput {
        command: "calibrate".into(),
        metrics: Metrics::Calibration(result),
        spectra: Vec::new(),
        table: None,
        checks: Vec::new(),
        warnings: res.warnings.clone(),
        resolved: Some(ResolvedSummary::of(&res)),
        band: (config.output.band_lo_hz, config.output.band_hi_hz),
    })
}
