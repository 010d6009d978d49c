//! Run directory layout: `results.json`, one CSV per spectrum (or a sweep
//! table), the echoed `config.toml`, and optional SVG plots.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use densecode::signal::spectra_to_csv;
use densecode::SpectrumEstimate;
use serde_json::{json, Value};

use crate::config::ScenarioConfig;
use crate::error::CliError;
use crate::scenario::RunOutput;

pub const RESULTS_FILE: &str = "results.json";
pub const CONFIG_FILE: &str = "config.toml";
pub const SWEEP_FILE: &str = "sweep.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    /// Spectra as CSV files referenced from `results.json`.
    #[default]
    Csv,
    /// Spectra inlined into `results.json`.
    Json,
}

/// Seconds since the epoch, from `SOURCE_DATE_EPOCH` when set so that
/// reruns can produce identical bytes.
fn timestamp() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or_else(|| {
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
        })
}

/// Builds the results document without touching the filesystem.
pub fn results_document(run: &RunOutput, config: &ScenarioConfig, format: Format) -> Value {
    let (lo, hi) = run.band;
    let spectra: Vec<Value> = run
        .spectra
        .iter()
        .map(|s| {
            let mut v = json!({
                "trace_id": s.spectrum.trace_id,
                "rbw_hz": s.spectrum.rbw_hz,
                "vbw_hz": s.spectrum.vbw_hz,
                "n_averages": s.spectrum.n_averages,
                "snl_reference_id": s.spectrum.snl_reference_id,
            });
            match format {
                Format::Csv => v["file"] = json!(format!("{}.csv", s.stem)),
                Format::Json => {
                    let (f, p): (Vec<f64>, Vec<f64>) = s
                        .spectrum
                        .freq_hz
                        .iter()
                        .zip(&s.spectrum.psd_db_rel_snl)
                        .filter(|(f, _)| **f >= lo && **f <= hi)
                        .map(|(f, p)| (*f, *p))
                        .unzip();
                    v["freq_hz"] = json!(f);
                    v["psd_db_rel_snl"] = json!(p);
                }
            }
            v
        })
        .collect();
    let mut doc = json!({
        "command": run.command,
        "config": config,
        "config_file": CONFIG_FILE,
        "resolved": run.resolved,
        "metrics": run.metrics,
        "checks": run.checks,
        "warnings": run.warnings,
        "band_hz": [lo, hi],
        "spectra": spectra,
        "provenance": {
            "seed": config.engine.seed,
            "version": env!("CARGO_PKG_VERSION"),
            "timestamp_unix": timestamp(),
        },
    });
    if let Some(table) = &run.table {
        doc["table"] = match format {
            Format::Csv => {
                json!({ "axis": table.axis, "file": SWEEP_FILE, "columns": table.columns })
            }
            Format::Json => json!(table),
        };
    }
    doc
}

/// Writes the run directory and returns the paths written.
pub fn write_run(
    dir: &Path,
    run: &RunOutput,
    config: &ScenarioConfig,
    format: Format,
    plot: bool,
) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: &str, contents: String| -> Result<(), CliError> {
        let p = dir.join(name);
        fs::write(&p, contents)?;
        written.push(p);
        Ok(())
    };
    put(CONFIG_FILE, config.to_toml())?;
    let doc = results_document(run, config, format);
    put(
        RESULTS_FILE,
        serde_json::to_string_pretty(&doc).expect("json") + "\n",
    )?;
    if format == Format::Csv {
        for s in &run.spectra {
            put(
                &format!("{}.csv", s.stem),
                spectra_to_csv(&[&s.spectrum], Some(run.band)),
            )?;
        }
        if let Some(table) = &run.table {
            put(SWEEP_FILE, table.to_csv())?;
        }
    }
    if plot {
        for s in &run.spectra {
            put(
                &format!("{}.svg", s.stem),
                spectrum_svg(&s.spectrum, run.band),
            )?;
        }
    }
    Ok(written)
}

/// Line plot of a spectrum over `band`, in dB re SNL.
pub fn spectrum_svg(spec: &SpectrumEstimate, band: (f64, f64)) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const PAD: f64 = 50.0;
    let pts: Vec<(f64, f64)> = spec
        .freq_hz
        .iter()
        .zip(&spec.psd_db_rel_snl)
        .filter(|(f, p)| **f >= band.0 && **f <= band.1 && p.is_finite())
        .map(|(f, p)| (*f, *p))
        .collect();
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
    );
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    if pts.is_empty() {
        svg.push_str("</svg>\n");
        return svg;
    }
    let ymin = pts
        .iter()
        .map(|p| p.1)
        .fold(f64::INFINITY, f64::min)
        .min(0.0)
        - 1.0;
    let ymax = pts
        .iter()
        .map(|p| p.1)
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.0)
        + 1.0;
    let (x0, x1) = (pts[0].0, pts[pts.len() - 1].0.max(pts[0].0 + 1.0));
    let sx = |f: f64| PAD + (f - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |p: f64| H - PAD - (p - ymin) / (ymax - ymin) * (H - 2.0 * PAD);
    let _ = writeln!(
        svg,
        "<line x1=\"{PAD}\" y1=\"{y}\" x2=\"{x}\" y2=\"{y}\" stroke=\"gray\" stroke-dasharray=\"4 4\"/>",
        y = sy(0.0),
        x = W - PAD
    );
    let path: Vec<String> = pts
        .iter()
        .map(|(f, p)| format!("{:.2},{:.2}", sx(*f), sy(*p)))
        .collect();
    let _ = writeln!(
        svg,
        "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"1\" points=\"{}\"/>",
        path.join(" ")
    );
    let _ = writeln!(
        svg,
        "<text x=\"{PAD}\" y=\"30\" font-family=\"sans-serif\" font-size=\"14\">{} (dB re SNL, {:.3}-{:.3} MHz)</text>",
        spec.trace_id,
        x0 / 1e6,
        x1 / 1e6
    );
    let _ = writeln!(
        svg,
        "<text x=\"5\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\">{ymax:.1}</text>\n<text x=\"5\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\">{ymin:.1}</text>",
        sy(ymax) + 4.0,
        sy(ymin)
    );
    svg.push_str("</svg>\n");
    svg
}
