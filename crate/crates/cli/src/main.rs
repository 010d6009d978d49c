use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use densecode_cli::scenario::{CalibrationResult, SweepAxis};
use densecode_cli::{
    calibrate, run_fig2, run_fig3, run_fig4, sweep, write_run, CliError, Figure, Format, Metrics,
    RunOutput, ScenarioConfig,
};

#[derive(Parser)]
#[command(
    name = "densecode",
    version,
    about = "Bright-EPR dense coding simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Noise spectra of Var(X1+X2) and Var(Y1-Y2) against the SNL.
    Fig2(Common),
    /// Decoded amplitude and phase tones against a coherent baseline.
    Fig3(Common),
    /// Single-beam interception compared with Bob's decoding.
    Fig4(Common),
    /// Analytic sweep of one link parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// r_db, tap_T, phase_error or pump_ratio.
        #[arg(long)]
        axis: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        start: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        stop: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Source efficiencies reproducing a squeezing target.
    Calibrate {
        #[command(flatten)]
        common: Common,
        /// Target level in dB re SNL for both quadratures; defaults to the
        /// config's per-quadrature targets.
        #[arg(long, allow_hyphen_values = true)]
        target: Option<f64>,
    },
}

#[derive(Args)]
struct Common {
    /// TOML file overriding the scenario defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Number of samples per trace.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    /// Also write an SVG per spectrum.
    #[arg(long)]
    plot: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl Common {
    fn load(&self, figure: Figure) -> Result<ScenarioConfig, CliError> {
        let mut c = ScenarioConfig::load(figure, self.config.as_deref())?;
        if let Some(seed) = self.seed {
            c.engine.seed = seed;
        }
        if let Some(n) = self.samples {
            c.set_samples(n);
        }
        Ok(c)
    }

    fn format(&self) -> Format {
        match self.format {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

fn report(run: &RunOutput) {
    for w in &run.warnings {
        eprintln!("warning: {w}");
    }
    if let Ok(serde_json::Value::Object(map)) = serde_json::to_value(&run.metrics) {
        for (k, v) in map {
            println!("{k:>40} = {v}");
        }
    }
    for c in &run.checks {
        println!(
            "[{}] {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let (common, config, run) = match &cli.command {
        Command::Fig2(c) => {
            let cfg = c.load(Figure::Fig2)?;
            let run = run_fig2(&cfg)?;
            (c, cfg, run)
        }
        Command::Fig3(c) => {
            let cfg = c.load(Figure::Fig3)?;
            let run = run_fig3(&cfg)?;
            (c, cfg, run)
        }
        Command::Fig4(c) => {
            let cfg = c.load(Figure::Fig4)?;
            let run = run_fig4(&cfg)?;
            (c, cfg, run)
        }
        Command::Sweep {
            common,
            axis,
            start,
            stop,
            points,
        } => {
            let mut cfg = common.load(Figure::Fig3)?;
            if let Some(a) = axis {
                let parsed = SweepAxis::parse(a)?;
                if *a != cfg.sweep.axis {
                    let (s, e, n) = parsed.default_range();
                    cfg.sweep.start = s;
                    cfg.sweep.stop = e;
                    cfg.sweep.points = n;
                }
                cfg.sweep.axis = a.clone();
            }
            if let Some(v) = start {
                cfg.sweep.start = *v;
            }
            if let Some(v) = stop {
                cfg.sweep.stop = *v;
            }
            if let Some(v) = points {
                cfg.sweep.points = *v;
            }
            let run = sweep(&cfg)?;
            (common, cfg, run)
        }
        Command::Calibrate { common, target } => {
            let cfg = common.load(Figure::Fig3)?;
            let run = calibrate(&cfg, *target)?;
            if let Metrics::Calibration(c) = &run.metrics {
                print!("{}", CalibrationResult::fragment(c));
                std::fs::create_dir_all(&common.out)?;
                std::fs::write(common.out.join("calibration.toml"), c.fragment())?;
            }
            (common, cfg, run)
        }
    };
    report(&run);
    let written = write_run(&common.out, &run, &config, common.format(), common.plot)?;
    eprintln!("wrote {} files to {}", written.len(), common.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
