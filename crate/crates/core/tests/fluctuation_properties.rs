mod common;

use eit_noise_core::fluctuations::{diffusion_matrix, drift_matrix, DriftMatrix};
use eit_noise_core::linalg::{frobenius, CMatrix, C64, PARTNER};
use eit_noise_core::model::{atomic_operator, idx, Field};
use eit_noise_core::oracle;
use eit_noise_core::spectra::lyapunov_covariance;
use eit_noise_core::steady_state::solve;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn linearization_has_the_conjugation_symmetries(p in common::params()) {
        let ss = solve(&p).unwrap();
        let a = drift_matrix(&p, &ss);
        let d = diffusion_matrix(&p, &ss).unwrap();
        let scale_a = a.0.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let scale_d = d.correlation().iter().map(|z| z.norm()).fold(1.0, f64::max);
        prop_assert!(a.conjugation_defect() <= 1e-14 * scale_a);
        prop_assert!(d.conjugation_defect() <= 1e-14 * scale_d);
        // the adjoint-ordered covariance is Hermitian
        let n = d.adjoint_ordered();
        prop_assert!(frobenius(&(n - n.adjoint())) <= 1e-14 * frobenius(&n));
    }

    #[test]
    fn cross_field_coupling_is_carried_by_ground_coherence(p in common::params()) {
        let ss = solve(&p).unwrap();
        let a = drift_matrix(&p, &ss).0;
        let i = C64::new(0.0, 1.0);
        let g1 = p.pump.coupling;
        let g2 = p.probe.coupling;
        let s12 = ss.x[idx::S12];
        let tol = 1e-12 * (g1 + g2) * p.atoms;
        prop_assert!((a[(idx::S1M, idx::A2)] - i * g2 * s12.conj()).norm() <= tol);
        prop_assert!((a[(idx::S2M, idx::A1)] - i * g1 * s12).norm() <= tol);
        prop_assert!((a[(idx::S1P, idx::A2D)] + i * g2 * s12).norm() <= tol);
        prop_assert!((a[(idx::S2P, idx::A1D)] + i * g1 * s12.conj()).norm() <= tol);
    }
}

#[test]
fn no_cross_field_coupling_without_ground_coherence() {
    let mut p = common::unequal_intensities();
    p.probe.drive = C64::new(0.0, 0.0);
    let ss = solve(&p).unwrap();
    assert_eq!(ss.x[idx::S12], C64::new(0.0, 0.0));
    let a = drift_matrix(&p, &ss).0;
    for (row, col) in [(idx::S1M, idx::A2), (idx::S1P, idx::A2D), (idx::S2M, idx::A1), (idx::S2P, idx::A1D)] {
        assert_eq!(a[(row, col)], C64::new(0.0, 0.0));
    }
}

/// With the fields frozen the atoms are independent, so the collective
/// covariance is `N` times the single-atom covariance of the steady density
/// matrix, which the density-matrix oracle supplies by direct integration.
#[test]
fn atomic_covariance_matches_density_matrix_moments() {
    let p = common::unequal_intensities().with_probe_detuning(0.3);
    let ss = solve(&p).unwrap();
    let a = drift_matrix(&p, &ss);
    let noise = diffusion_matrix(&p, &ss).unwrap().adjoint_ordered();

    // keep the atomic block; the field block is inert and noiseless
    let mut frozen = CMatrix::identity();
    let mut atomic_noise = CMatrix::zeros();
    for r in 0..idx::ATOMIC {
        for c in 0..idx::ATOMIC {
            frozen[(r, c)] = a.0[(r, c)];
            atomic_noise[(r, c)] = noise[(r, c)];
        }
    }
    let sigma = lyapunov_covariance(&DriftMatrix(frozen), &atomic_noise).unwrap();

    let ground =
        oracle::density_from_state(&eit_noise_core::StateVector::ground(1.0, 1, C64::default(), C64::default()), 1.0);
    let rho = oracle::integrate_density_matrix(
        &p,
        ss.x.amplitude(Field::Pump),
        ss.x.amplitude(Field::Probe),
        &ground,
        3000.0,
    )
    .unwrap();
    let mean = |op: &nalgebra::Matrix3<C64>| (rho * op).trace();
    let mut expected = CMatrix::zeros();
    for mu in 0..idx::ATOMIC {
        for nu in 0..idx::ATOMIC {
            let o_mu = atomic_operator(mu);
            let o_nu_dag = atomic_operator(PARTNER[nu]);
            expected[(mu, nu)] = (mean(&(o_mu * o_nu_dag)) - mean(&o_mu) * mean(&o_nu_dag)) * p.atoms;
        }
    }
    let mut block = CMatrix::zeros();
    for r in 0..idx::ATOMIC {
        for c in 0..idx::ATOMIC {
            block[(r, c)] = sigma[(r, c)];
        }
    }
    let err = frobenius(&(block - expected)) / frobenius(&expected);
    assert!(err < 1e-6, "relative error {err:e}");
}
