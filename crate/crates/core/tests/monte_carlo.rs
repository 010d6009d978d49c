//! Monte Carlo traces against the analytic covariance description.

use densecode::gaussian::{GaussianState, LossChannel, ParametricMode};
use densecode::nopa::{epr_covariance_matrix, EfficiencyPair, NopaParams};
use densecode::protocol::{
    bell_measure_state, bell_measure_trace, split_beam, tap_attack, DetectorConfig, RunNoise,
    I_MINUS, I_PLUS,
};
use densecode::signal::{
    estimate_psd, next_fast_len, synthesize_traces, AnalyzerSettings, EprSpectrum,
};
use densecode::{FlatSpectrum, SynthesisParams, TimeTrace};
use nalgebra::DMatrix;

const R: f64 = 0.6215;

fn lossy_tms() -> GaussianState {
    GaussianState::two_mode_squeezed(R, ParametricMode::Deamplify)
        .unwrap()
        .apply_loss(&LossChannel::new(0, 0.8).unwrap())
        .unwrap()
        .apply_loss(&LossChannel::new(1, 0.9).unwrap())
        .unwrap()
}

fn labels() -> Vec<String> {
    ["X1", "Y1", "X2", "Y2"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

fn flat(state: &GaussianState) -> FlatSpectrum {
    FlatSpectrum::new(labels(), state.cov().clone()).unwrap()
}

fn beams(trace: TimeTrace) -> (TimeTrace, TimeTrace) {
    let mut m = trace.into_modes().unwrap();
    let b = m.pop().unwrap();
    (m.pop().unwrap(), b)
}

/// Checks the sample covariance against `sigma` element-wise at `k` standard
/// errors, with `var[i][j]` the variance of each sample element, and the
/// Frobenius error against the matching statistical scale.
fn assert_covariance(sample: &DMatrix<f64>, sigma: &DMatrix<f64>, var: &DMatrix<f64>, k: f64) {
    let n = sigma.nrows();
    for i in 0..n {
        for j in 0..n {
            let err = (sample[(i, j)] - sigma[(i, j)]).abs();
            let se = var[(i, j)].sqrt();
            assert!(
                err <= k * se,
                "element ({i},{j}): error {err:.3e} vs {k}σ = {:.3e}",
                k * se
            );
        }
    }
    let fro = (sample - sigma).norm();
    let scale = var.sum().sqrt();
    assert!(
        fro <= k * scale,
        "Frobenius error {fro:.3e} vs {:.3e}",
        k * scale
    );
}

fn white_variances(sigma: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(sigma.nrows(), sigma.ncols(), |i, j| {
        (sigma[(i, i)] * sigma[(j, j)] + sigma[(i, j)].powi(2)) / n as f64
    })
}

#[test]
fn sampled_covariance_matches_state() {
    let st = lossy_tms();
    for (n, seed) in [(100_000, 3), (1_000_000, 4)] {
        let tr = synthesize_traces(&flat(&st), &SynthesisParams::new(1e6, n, seed)).unwrap();
        assert_covariance(
            &tr.sample_covariance(),
            st.cov(),
            &white_variances(st.cov(), n),
            3.0,
        );
    }
}

#[test]
fn coloured_covariance_is_bin_average_of_spectrum() {
    let params = NopaParams::experiment().with_efficiency(EfficiencyPair { x: 0.72, y: 0.67 });
    let (fs, n) = (50e6, 1 << 17);
    let tr = synthesize_traces(
        &EprSpectrum::new(params.clone()).unwrap(),
        &SynthesisParams::new(fs, n, 9),
    )
    .unwrap();

    // Oracle: average the model over the synthesis grid, counting the
    // negative-frequency half of every interior bin.
    let m = next_fast_len(n);
    let mut avg = DMatrix::<f64>::zeros(4, 4);
    let mut var = DMatrix::<f64>::zeros(4, 4);
    for k in 0..m {
        let f = (k.min(m - k)) as f64 * fs / m as f64;
        let s = epr_covariance_matrix(&params, f);
        avg += &s;
        var += DMatrix::from_fn(4, 4, |i, j| s[(i, i)] * s[(j, j)] + s[(i, j)].powi(2));
    }
    avg /= m as f64;
    var /= (m as f64) * n as f64;
    assert_covariance(&tr.sample_covariance(), &avg, &var, 4.0);
}

#[test]
fn parseval_holds_for_coloured_traces() {
    let params = NopaParams::experiment().with_efficiency(EfficiencyPair::symmetric(0.7));
    let fs = 50e6;
    let tr = synthesize_traces(
        &EprSpectrum::new(params).unwrap(),
        &SynthesisParams::new(fs, 1 << 20, 5),
    )
    .unwrap();
    let settings = AnalyzerSettings::new(30e3, 30e3);
    for ch in 0..tr.n_channels() {
        let x = tr.channel_at(ch);
        let spec = estimate_psd(x, fs, &settings).unwrap();
        let ratio = spec.integrated_power() / TimeTrace::variance(x);
        assert!((ratio - 1.0).abs() < 0.01, "channel {ch}: ratio {ratio}");
    }
}

#[test]
fn bell_traces_match_analytic_outputs() {
    let st = lossy_tms();
    let det = DetectorConfig {
        quantum_efficiency: 0.85,
        electronics_floor_db: -8.0,
        phase_setting: std::f64::consts::FRAC_PI_2 + 0.05,
        gain_imbalance: 0.1,
    };
    let n = 1 << 20;
    let (b1, b2) = beams(synthesize_traces(&flat(&st), &SynthesisParams::new(1e6, n, 21)).unwrap());
    let out = bell_measure_trace(&b1, &b2, &det, &RunNoise::new(21, 0)).unwrap();
    let model = bell_measure_state(&st, &det).unwrap();
    for (label, expected) in [
        (I_PLUS, model.i_plus.noise_var),
        (I_MINUS, model.i_minus.noise_var),
    ] {
        let v = TimeTrace::variance(out.channel(label).unwrap());
        let se = expected * (2.0 / n as f64).sqrt();
        assert!(
            (v - expected).abs() < 4.0 * se,
            "{label}: {v} vs {expected}"
        );
    }
}

#[test]
fn trace_tap_matches_covariance_tap() {
    let st = lossy_tms();
    let det = DetectorConfig::noiseless();
    let n = 1 << 20;
    let (b1, b2) = beams(synthesize_traces(&flat(&st), &SynthesisParams::new(1e6, n, 8)).unwrap());
    let (through, _) = split_beam(&b1, 0.6, &RunNoise::new(8, 1)).unwrap();
    let out = bell_measure_trace(&through, &b2, &det, &RunNoise::new(8, 0)).unwrap();
    let floor_db = 10.0 * TimeTrace::variance(out.channel(I_PLUS).unwrap()).log10();
    let tap = tap_attack(&st.displace(0, 1e-3, 0.0).unwrap(), 0.6, &det).unwrap();
    assert!(
        (floor_db - tap.bob_floor_db).abs() < 0.03,
        "{floor_db} vs {}",
        tap.bob_floor_db
    );
}

#[test]
fn pipeline_is_bit_identical_across_worker_counts() {
    let params = NopaParams::experiment().with_efficiency(EfficiencyPair::symmetric(0.7));
    let det = DetectorConfig {
        quantum_efficiency: 0.9,
        ..DetectorConfig::default()
    };
    let run = |workers: Option<usize>| {
        let p = SynthesisParams::new(50e6, 300_000, 77).with_workers(workers);
        let (b1, b2) =
            beams(synthesize_traces(&EprSpectrum::new(params.clone()).unwrap(), &p).unwrap());
        let noise = RunNoise {
            workers,
            ..RunNoise::new(77, 0)
        };
        let out = bell_measure_trace(&b1, &b2, &det, &noise).unwrap();
        let mut settings = AnalyzerSettings::new(30e3, 1e3);
        settings.workers = workers;
        let spec = estimate_psd(out.channel(I_PLUS).unwrap(), 50e6, &settings).unwrap();
        (out, spec)
    };
    let (ref_trace, ref_spec) = run(Some(1));
    for w in [Some(2), Some(8), None] {
        let (t, s) = run(w);
        assert_eq!(t, ref_trace, "traces differ for {w:?} workers");
        assert_eq!(s.psd, ref_spec.psd, "spectra differ for {w:?} workers");
    }
}
