mod common;

use eit_noise_core::fluctuations::{diffusion_matrix, drift_matrix, DriftMatrix};
use eit_noise_core::linalg::{conjugate_relabel, max_abs, partner_permutation, CMatrix, C64};
use eit_noise_core::model::{Field, FieldParams, PhysicalParams, StateVector};
use eit_noise_core::spectra::{
    correlation_record, lyapunov_identity_defect, output_spectral_matrix, scan, spectral_matrix,
    spectral_matrix_from_noise,
};
use eit_noise_core::steady_state::{solve, SteadyState};
use proptest::prelude::*;

const OMEGA: f64 = 1.0 / (6.0 * std::f64::consts::PI);

fn grid(n: usize, half_width: f64) -> Vec<f64> {
    (0..n).map(|k| -half_width + 2.0 * half_width * k as f64 / (n - 1) as f64).collect()
}

fn stable_drift() -> impl Strategy<Value = (CMatrix, CMatrix)> {
    (
        proptest::collection::vec(common::complex(1.0), 144),
        proptest::collection::vec(common::complex(1.0), 144),
        proptest::collection::vec(0.5..5.0f64, 12),
    )
        .prop_map(|(m, b, diag)| {
            let mut a = CMatrix::from_iterator(m) * C64::new(0.5, 0.0);
            for (i, d) in diag.into_iter().enumerate() {
                a[(i, i)] += C64::new(d + 3.0, 0.0);
            }
            let b = CMatrix::from_iterator(b);
            (a, b * b.adjoint())
        })
}

fn empty_cavity(detuning: [f64; 2]) -> (PhysicalParams, SteadyState) {
    let mut p = PhysicalParams {
        pump: FieldParams::coherent(0.0, 0.5, C64::new(4.0, -1.0)),
        probe: FieldParams::coherent(0.0, 0.5, C64::new(0.5, 2.0)),
        ground_dephasing: 0.0,
        cavity_linewidth: 0.1,
        round_trip: 1e-3,
        atoms: 1e4,
    };
    p.pump.cavity_detuning = detuning[0];
    p.probe.cavity_detuning = detuning[1];
    let x =
        StateVector::ground(p.atoms, 1, p.empty_cavity_amplitude(Field::Pump), p.empty_cavity_amplitude(Field::Probe));
    (p, SteadyState { x, residual: 0.0, stable: false, min_decay_rate: 0.0 })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn spectrum_integrates_to_the_lyapunov_covariance((a, noise) in stable_drift()) {
        let defect = lyapunov_identity_defect(&DriftMatrix(a), &noise).unwrap();
        prop_assert!(defect < 1e-6, "{defect:e}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    /// `[δA_out(Ω), δA_out†(Ω')] ∝ δ(Ω + Ω')` with unit weight: the output
    /// field is a free field whatever the atoms do.
    #[test]
    fn output_fields_keep_canonical_commutators(p in common::params(), omega in -3.0..3.0f64) {
        let ss = solve(&p).unwrap();
        prop_assume!(ss.stable);
        let a = drift_matrix(&p, &ss);
        let d = diffusion_matrix(&p, &ss).unwrap();
        let plus = output_spectral_matrix(&spectral_matrix(&a, &d, omega).unwrap(), &p);
        let minus = output_spectral_matrix(&spectral_matrix(&a, &d, -omega).unwrap(), &p);
        for k in 0..2 {
            let commutator = plus[(2 * k, 2 * k)] - minus[(2 * k + 1, 2 * k + 1)];
            prop_assert!((commutator - C64::new(1.0, 0.0)).norm() < 1e-9, "{commutator}");
        }
    }

    /// `P conj(S(Ω)) P` is the spectrum at `−Ω` with the noise in the
    /// opposite operator order.
    #[test]
    fn spectrum_conjugation_symmetry(p in common::params(), omega in 0.01..3.0f64) {
        let ss = solve(&p).unwrap();
        prop_assume!(ss.stable);
        let a = drift_matrix(&p, &ss);
        let d = diffusion_matrix(&p, &ss).unwrap();
        let s = spectral_matrix(&a, &d, omega).unwrap().matrix;
        let reversed = d.correlation().transpose() * partner_permutation();
        let t = spectral_matrix_from_noise(&a, &reversed, -omega).unwrap().matrix;
        let scale = max_abs(&s);
        prop_assert!(max_abs(&(conjugate_relabel(&s) - t)) <= 1e-12 * scale);
    }

    #[test]
    fn empty_cavity_output_is_shot_noise(dc1 in -3.0..3.0f64, dc2 in -3.0..3.0f64, omega in -5.0..5.0f64) {
        let (p, ss) = empty_cavity([dc1, dc2]);
        prop_assume!(omega.abs() > 1e-6);
        let a = drift_matrix(&p, &ss);
        let d = diffusion_matrix(&p, &ss).unwrap();
        let r = correlation_record(&spectral_matrix(&a, &d, omega).unwrap(), &p, &ss).unwrap();
        for v in [r.s_pump, r.s_probe, r.s_sum, r.s_diff] {
            prop_assert!((v - 1.0).abs() < 1e-10, "{v}");
        }
        prop_assert!(r.correlation_2c.abs() < 1e-10);
    }
}

#[test]
fn lyapunov_identity_at_resonance() {
    let p = common::unequal_intensities();
    let ss = solve(&p).unwrap();
    let a = drift_matrix(&p, &ss);
    let d = diffusion_matrix(&p, &ss).unwrap();
    let defect = lyapunov_identity_defect(&a, &d.adjoint_ordered()).unwrap();
    assert!(defect < 1e-6, "{defect:e}");
}

#[test]
fn symmetric_scan_gives_even_spectra() {
    let p = common::unequal_intensities();
    let g = grid(41, 2.0);
    let records = scan(&p, &g, OMEGA).unwrap();
    let again = scan(&p, &g, OMEGA).unwrap();
    assert_eq!(records, again);
    for k in 0..g.len() / 2 {
        let (l, r) = (&records[k], &records[g.len() - 1 - k]);
        for (x, y) in [(l.fano_pump, r.fano_pump), (l.fano_probe, r.fano_probe), (l.correlation_2c, r.correlation_2c)] {
            assert!((x - y).abs() <= 1e-8 * x.abs().max(y.abs()).max(1.0), "{}: {x} vs {y}", g[k]);
        }
    }
}

#[test]
fn sum_and_difference_split_the_beam_noise() {
    let p = common::equal_intensities();
    for (r, ss) in scan(&p, &grid(21, 2.0), OMEGA)
        .unwrap()
        .iter()
        .zip(eit_noise_core::steady_state::continuation_scan(&p, &grid(21, 2.0)).unwrap())
    {
        let intensities = Field::BOTH.map(|f| ss.output_amplitude(&p.with_probe_detuning(r.delta_l2), f).norm_sqr());
        assert!(r.splitting_defect(intensities) < 1e-12 * r.s_sum.max(1.0));
        assert!((r.correlation_2c - (r.s_sum - r.s_diff)).abs() == 0.0);
        assert!(r.s_pump >= 0.0 && r.s_probe >= 0.0);
    }
}

#[test]
fn correlation_is_strongest_at_resonance() {
    let p = common::equal_intensities();
    let records = scan(&p, &[-1.0, 0.0, 1.0], OMEGA).unwrap();
    assert!(records[1].correlation_2c > 0.0);
    assert!(records[1].correlation_2c > records[0].correlation_2c);
    assert!(records[1].correlation_2c > records[2].correlation_2c);
}
