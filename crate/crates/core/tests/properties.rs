//! Property tests over randomly generated transforms, channels and parameters.

use densecode::gaussian::{
    symplectic_form, GaussianState, LossChannel, ParametricMode, SymplecticTransform,
};
use densecode::nopa::{calibrate_efficiency, EfficiencyPair, NopaParams};
use densecode::signal::{electronics_correct, floor_rel_noiseless};
use nalgebra::DMatrix;
use proptest::prelude::*;

#[derive(Debug, Clone)]
enum Gate {
    Tms(f64, bool, usize, usize),
    Split(f64, usize, usize),
    Phase(f64, usize),
    Squeeze(f64, usize),
}

fn gate(n: usize) -> impl Strategy<Value = Gate> {
    prop_oneof![
        (0.0..1.0f64, any::<bool>(), 0..n, 0..n).prop_map(|(r, amp, i, j)| Gate::Tms(r, amp, i, j)),
        (0.0..=1.0f64, 0..n, 0..n).prop_map(|(t, i, j)| Gate::Split(t, i, j)),
        (-6.3..6.3f64, 0..n).prop_map(|(th, i)| Gate::Phase(th, i)),
        (-1.0..1.0f64, 0..n).prop_map(|(r, i)| Gate::Squeeze(r, i)),
    ]
}

fn circuit() -> impl Strategy<Value = (usize, Vec<Gate>)> {
    (2usize..=4).prop_flat_map(|n| (Just(n), prop::collection::vec(gate(n), 1..8)))
}

fn build(n: usize, gates: &[Gate]) -> SymplecticTransform {
    let mut s = SymplecticTransform::identity(n);
    for g in gates {
        let next = match *g {
            Gate::Tms(r, amp, i, j) if i != j => {
                let mode = if amp {
                    ParametricMode::Amplify
                } else {
                    ParametricMode::Deamplify
                };
                SymplecticTransform::two_mode_squeezer(r, mode)
                    .unwrap()
                    .embed(n, &[i, j])
                    .unwrap()
            }
            Gate::Split(t, i, j) if i != j => {
                SymplecticTransform::beamsplitter(n, t, (i, j)).unwrap()
            }
            Gate::Phase(th, i) => SymplecticTransform::phase_shift(n, th, i).unwrap(),
            Gate::Squeeze(r, i) => SymplecticTransform::single_mode_squeezer(n, r, i).unwrap(),
            _ => continue,
        };
        s = next.after(&s).unwrap();
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn composed_transforms_stay_symplectic((n, gates) in circuit()) {
        let s = build(n, &gates);
        let omega = symplectic_form(n);
        let m = s.matrix();
        let residual = (m * &omega * m.transpose() - &omega).norm();
        prop_assert!(residual < 1e-10, "residual {residual}");
    }

    #[test]
    fn channels_preserve_physicality(
        (n, gates) in circuit(),
        losses in prop::collection::vec((0usize..4, 0.0..=1.0f64), 0..4),
    ) {
        let mut st = GaussianState::vacuum(n).apply_symplectic(&build(n, &gates)).unwrap();
        prop_assert!(st.is_physical());
        for (mode, eta) in losses {
            st = st.apply_loss(&LossChannel::new(mode % n, eta).unwrap()).unwrap();
            let nu = st.symplectic_eigenvalues();
            prop_assert!(nu.iter().all(|&v| v >= 1.0 - 1e-9), "{nu:?}");
        }
    }

    #[test]
    fn combo_variance_is_quadratic_form(
        (n, gates) in circuit(),
        coeffs in prop::collection::vec(-2.0..2.0f64, 8),
    ) {
        let st = GaussianState::vacuum(n).apply_symplectic(&build(n, &gates)).unwrap();
        let c = &coeffs[..2 * n];
        let mut direct = 0.0;
        for i in 0..2 * n {
            for j in 0..2 * n {
                direct += c[i] * st.cov()[(i, j)] * c[j];
            }
        }
        let v = st.combo_variance(c).unwrap();
        prop_assert!((v - direct).abs() <= 1e-9 * direct.abs().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn electronics_correction_inverts_power_addition(v_db in -15.0..15.0f64, floor_db in -20.0..-0.5f64) {
        let e = 10f64.powf(floor_rel_noiseless(floor_db).unwrap() / 10.0);
        let measured = 10.0 * ((10f64.powf(v_db / 10.0) + e) / (1.0 + e)).log10();
        let back = electronics_correct(measured, floor_db).unwrap();
        prop_assert!((back - v_db).abs() < 1e-9);
    }

    #[test]
    fn squeezing_spectra_bracket_the_snl(
        ratio in 0.0..0.99f64,
        eta in 0.0..=1.0f64,
        f_mhz in 0.0..100.0f64,
    ) {
        let p = NopaParams {
            pump_mw: ratio * 175.0,
            efficiency: EfficiencyPair::symmetric(eta),
            ..NopaParams::experiment()
        };
        let s = p.spectra_at(f_mhz * 1e6);
        prop_assert!(s.squeezed_x <= 1.0 + 1e-15 && s.squeezed_x >= 0.0);
        prop_assert!(s.antisqueezed_x >= 1.0 - 1e-15);
        // correlations never beat the pure-state bound S_sq·S_anti >= 1
        prop_assert!(s.squeezed_x * s.antisqueezed_x >= 1.0 - 1e-12);
    }

    #[test]
    fn squeezing_deepens_with_pump(r1 in 0.01..0.98f64, dr in 0.001..0.01f64, f_mhz in 0.0..30.0f64) {
        let at = |r: f64| NopaParams { pump_mw: r * 175.0, ..NopaParams::experiment() }
            .spectra_at(f_mhz * 1e6)
            .squeezed_x;
        prop_assert!(at(r1 + dr) < at(r1));
    }

    #[test]
    fn calibration_round_trips(target in -12.0..-0.1f64, f_mhz in 0.5..5.0f64) {
        let p = NopaParams::experiment();
        let eta = calibrate_efficiency(&p, f_mhz * 1e6, target).unwrap();
        let s = p.with_efficiency(EfficiencyPair::symmetric(eta)).spectra_at(f_mhz * 1e6);
        prop_assert!((10.0 * s.squeezed_x.log10() - target).abs() < 1e-9);
    }
}

#[test]
fn vacuum_covariance_is_identity_under_passive_optics() {
    let s = SymplecticTransform::beamsplitter(3, 0.3, (0, 2))
        .unwrap()
        .after(&SymplecticTransform::phase_shift(3, 1.1, 1).unwrap())
        .unwrap();
    let st = GaussianState::vacuum(3).apply_symplectic(&s).unwrap();
    assert!((st.cov() - DMatrix::<f64>::identity(6, 6)).norm() < 1e-12);
}
