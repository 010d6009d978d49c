//! Scenario configuration: per-figure presets overlaid by a TOML file.

use std::path::Path;

use densecode::nopa::{calibrate_efficiency, pump_for_squeezing, EfficiencyPair, NopaParams};
use densecode::protocol::{ClassicalSignal, DetectorConfig};
use densecode::signal::floor_rel_noiseless;
use densecode::{AnalyzerSettings, ParametricMode, SynthesisParams};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Which scenario a preset is for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    Fig2,
    Fig3,
    Fig4,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub nopa: NopaSection,
    pub calibration: CalibrationSection,
    pub detector: DetectorSection,
    pub signal: SignalSection,
    pub engine: EngineSection,
    pub attack: AttackSection,
    pub sweep: SweepSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NopaSection {
    pub pump_mw: f64,
    pub threshold_mw: f64,
    pub linewidth_mhz: f64,
    pub finesse: f64,
    pub fsr_ghz: f64,
    /// Lumped efficiencies; when absent they are calibrated from
    /// `calibration.target_*_db`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub efficiency_x: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub efficiency_y: Option<f64>,
    pub mode: ParametricMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationSection {
    /// Electronics-free correlation levels at the modulation frequency, dB re SNL.
    pub target_x_db: f64,
    pub target_y_db: f64,
    /// When set, the pump is solved so that a single beam read by the
    /// configured detector sits this many dB above its measured SNL. The
    /// source efficiency is taken as 1.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eve_floor_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorSection {
    pub quantum_efficiency: f64,
    pub electronics_floor_db: f64,
    pub phase_setting: f64,
    pub gain_imbalance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SignalSection {
    pub mod_freq_hz: f64,
    pub depth_x: f64,
    pub depth_y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngineSection {
    pub sample_rate_hz: f64,
    pub duration_s: f64,
    pub rbw_hz: f64,
    pub vbw_hz: f64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttackSection {
    /// Transmissivity of a tap inserted into beam 1; absent means no tap.
    #[serde(rename = "tap_T", skip_serializing_if = "Option::is_none")]
    pub tap_t: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub axis: String,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub band_lo_hz: f64,
    pub band_hi_hz: f64,
}

impl Default for NopaSection {
    fn default() -> Self {
        let p = NopaParams::experiment();
        Self {
            pump_mw: p.pump_mw,
            threshold_mw: p.threshold_mw,
            linewidth_mhz: p.linewidth_mhz,
            finesse: p.finesse,
            fsr_ghz: p.fsr_ghz,
            efficiency_x: None,
            efficiency_y: None,
            mode: p.mode,
        }
    }
}

impl Default for CalibrationSection {
    fn default() -> Self {
        Self {
            target_x_db: -5.4,
            target_y_db: -4.8,
            eve_floor_db: None,
        }
    }
}

impl Default for DetectorSection {
    fn default() -> Self {
        let d = DetectorConfig::default();
        Self {
            quantum_efficiency: d.quantum_efficiency,
            electronics_floor_db: d.electronics_floor_db,
            phase_setting: d.phase_setting,
            gain_imbalance: d.gain_imbalance,
        }
    }
}

impl Default for SignalSection {
    fn default() -> Self {
        Self {
            mod_freq_hz: 2.0e6,
            depth_x: 1.0,
            depth_y: 1.0,
        }
    }
}

pub const DEFAULT_SAMPLE_RATE_HZ: f64 = 50.0e6;
pub const DEFAULT_SAMPLES: usize = 1 << 22;

impl Default for EngineSection {
    fn default() -> Self {
        Self {
            sample_rate_hz: DEFAULT_SAMPLE_RATE_HZ,
            duration_s: DEFAULT_SAMPLES as f64 / DEFAULT_SAMPLE_RATE_HZ,
            rbw_hz: 30.0e3,
            vbw_hz: 100.0,
            seed: 20030101,
            workers: None,
        }
    }
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            axis: "tap_T".into(),
            start: 1.0,
            stop: 0.0,
            points: 21,
        }
    }
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            band_lo_hz: 1.0e6,
            band_hi_hz: 3.0e6,
        }
    }
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self::preset(Figure::Fig3)
    }
}

/// Model parameters derived from a config.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub nopa: NopaParams,
    /// Source efficiencies after dividing out the detector efficiency.
    pub source_efficiency: EfficiencyPair,
    pub detector: DetectorConfig,
    pub signal: ClassicalSignal,
    pub synthesis: SynthesisParams,
    pub analyzer: AnalyzerSettings,
    pub warnings: Vec<String>,
}

impl ScenarioConfig {
    pub fn preset(figure: Figure) -> Self {
        let mut c = Self {
            nopa: NopaSection::default(),
            calibration: CalibrationSection::default(),
            detector: DetectorSection::default(),
            signal: SignalSection::default(),
            engine: EngineSection::default(),
            attack: AttackSection::default(),
            sweep: SweepSection::default(),
            output: OutputSection::default(),
        };
        match figure {
            Figure::Fig2 => {
                c.calibration.target_y_db = -5.4;
                c.output.band_lo_hz = 1.95e6;
                c.output.band_hi_hz = 2.05e6;
            }
            Figure::Fig3 => {}
            Figure::Fig4 => {
                c.detector.electronics_floor_db = -5.0;
                c.calibration.eve_floor_db = Some(4.0);
            }
        }
        c
    }

    /// Preset for `figure` with the TOML document `text` laid over it.
    /// Unknown keys are rejected by name.
    pub fn from_toml_over(figure: Figure, text: &str) -> Result<Self, CliError> {
        // Strict parse first so errors point into the user's document.
        toml::from_str::<ScenarioConfig>(text).map_err(|e| CliError::Config(e.to_string()))?;
        let user: toml::Table =
            toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let mut base = toml::Table::try_from(Self::preset(figure))
            .map_err(|e| CliError::Config(e.to_string()))?;
        merge(&mut base, user);
        toml::Value::Table(base)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))
    }

    pub fn load(figure: Figure, path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(Self::preset(figure)),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
                Self::from_toml_over(figure, &text)
            }
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn n_samples(&self) -> usize {
        (self.engine.duration_s * self.engine.sample_rate_hz).round() as usize
    }

    pub fn set_samples(&mut self, n: usize) {
        self.engine.duration_s = n as f64 / self.engine.sample_rate_hz;
    }

    pub fn detector_config(&self) -> DetectorConfig {
        DetectorConfig {
            quantum_efficiency: self.detector.quantum_efficiency,
            electronics_floor_db: self.detector.electronics_floor_db,
            phase_setting: self.detector.phase_setting,
            gain_imbalance: self.detector.gain_imbalance,
        }
    }

    fn nopa_base(&self) -> NopaParams {
        NopaParams {
            pump_mw: self.nopa.pump_mw,
            threshold_mw: self.nopa.threshold_mw,
            linewidth_mhz: self.nopa.linewidth_mhz,
            finesse: self.nopa.finesse,
            fsr_ghz: self.nopa.fsr_ghz,
            efficiency: EfficiencyPair::symmetric(1.0),
            mode: self.nopa.mode,
        }
    }

    /// Validates every section and derives the model parameters, running
    /// the efficiency or pump calibration the config asks for.
    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let e = &self.engine;
        check(
            e.sample_rate_hz.is_finite() && e.sample_rate_hz > 0.0,
            "engine.sample_rate_hz",
            "must be > 0",
        )?;
        check(
            e.duration_s.is_finite() && e.duration_s > 0.0,
            "engine.duration_s",
            "must be > 0",
        )?;
        check(
            self.n_samples() >= 2,
            "engine.duration_s",
            "gives fewer than 2 samples",
        )?;
        check(
            e.rbw_hz.is_finite() && e.rbw_hz > 0.0,
            "engine.rbw_hz",
            "must be > 0",
        )?;
        check(
            e.vbw_hz.is_finite() && e.vbw_hz > 0.0 && e.vbw_hz <= e.rbw_hz,
            "engine.vbw_hz",
            "must lie in (0, rbw_hz]",
        )?;
        check(e.workers != Some(0), "engine.workers", "must be >= 1")?;
        check(
            self.output.band_lo_hz < self.output.band_hi_hz && self.output.band_lo_hz >= 0.0,
            "output.band_lo_hz",
            "band must satisfy 0 <= lo < hi",
        )?;
        if let Some(t) = self.attack.tap_t {
            check(
                (0.0..=1.0).contains(&t),
                "attack.tap_T",
                "must lie in [0, 1]",
            )?;
        }

        let detector = self.detector_config();
        detector
            .validate()
            .map_err(|e| CliError::Config(format!("detector: {e}")))?;
        let signal = ClassicalSignal::new(
            self.signal.mod_freq_hz,
            self.signal.depth_x,
            self.signal.depth_y,
        )
        .map_err(|e| CliError::Config(format!("signal: {e}")))?;
        check(
            signal.mod_freq_hz < e.sample_rate_hz / 2.0,
            "signal.mod_freq_hz",
            "must lie below the Nyquist frequency",
        )?;

        let mut warnings = Vec::new();
        if signal.depth_x == 0.0 && signal.depth_y == 0.0 {
            warnings.push("both modulation depths are zero".to_string());
        }
        let mut nopa = self.nopa_base();
        nopa.validate()?;
        let f = signal.mod_freq_hz;
        let eta_det = detector.quantum_efficiency;

        if let Some(eve_db) = self.calibration.eve_floor_db {
            // single-beam level a (re noiseless SNL) seen through the detector
            let floor = floor_rel_noiseless(detector.electronics_floor_db)?;
            let el = 10f64.powf(floor / 10.0);
            let seen = 10f64.powf(eve_db / 10.0) * (1.0 + el) - el;
            check(
                eta_det > 0.0,
                "detector.quantum_efficiency",
                "must be > 0 to solve the pump",
            )?;
            let a = (seen - (1.0 - eta_det)) / eta_det;
            if a.is_nan() || a <= 1.0 {
                return Err(CliError::Config(format!(
                    "calibration.eve_floor_db: {eve_db} dB is not above the single-beam vacuum level"
                )));
            }
            let s_sq = a - (a * a - 1.0).sqrt();
            nopa.pump_mw = pump_for_squeezing(&nopa, 1.0, f, 10.0 * s_sq.log10())?;
        }
        for (key, v) in [
            ("nopa.efficiency_x", self.nopa.efficiency_x),
            ("nopa.efficiency_y", self.nopa.efficiency_y),
        ] {
            if let Some(v) = v {
                check((0.0..=1.0).contains(&v), key, "must lie in [0, 1]")?;
            }
        }
        // Explicit efficiencies win; otherwise a pump-solved source is
        // lossless and any other source is calibrated to the targets.
        let pick = |given: Option<f64>, target: f64| -> Result<f64, CliError> {
            match (given, self.calibration.eve_floor_db) {
                (Some(v), _) => Ok(v * eta_det),
                (None, Some(_)) => Ok(eta_det),
                (None, None) => Ok(calibrate_efficiency(&nopa, f, target)?),
            }
        };
        let total = EfficiencyPair {
            x: pick(self.nopa.efficiency_x, self.calibration.target_x_db)?,
            y: pick(self.nopa.efficiency_y, self.calibration.target_y_db)?,
        };
        let source_efficiency = if eta_det > 0.0 {
            EfficiencyPair {
                x: total.x / eta_det,
                y: total.y / eta_det,
            }
        } else {
            EfficiencyPair::symmetric(0.0)
        };
        for (key, v) in [
            ("nopa.efficiency_x", source_efficiency.x),
            ("nopa.efficiency_y", source_efficiency.y),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(CliError::Model(format!(
                    "{key}: source efficiency {v:.4} outside [0, 1] after dividing out the detector efficiency"
                )));
            }
        }
        nopa.efficiency = source_efficiency;
        nopa.validate()?;
        if let Some(w) = nopa.consistency_warning() {
            warnings.push(w);
        }

        let synthesis = SynthesisParams::new(e.sample_rate_hz, self.n_samples(), e.seed)
            .with_workers(e.workers);
        let mut analyzer = AnalyzerSettings::new(e.rbw_hz, e.vbw_hz);
        analyzer.workers = e.workers;
        Ok(Resolved {
            nopa,
            source_efficiency,
            detector,
            signal,
            synthesis,
            analyzer,
            warnings,
        })
    }
}

fn check(ok: bool, key: &str, reason: &str) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Config(format!("{key}: {reason}")))
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}
