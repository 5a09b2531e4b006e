//! Independent validators.
//!
//! * A Schrödinger-picture master equation for one atom at frozen field
//!   amplitudes, written out matrix element by matrix element rather than
//!   through the operator algebra used by [`crate::model`].
//! * An Euler–Maruyama simulator of the linear Langevin system
//!   `dδx = −A δx dt + B dW` whose Welch-averaged periodograms estimate
//!   `S(Ω) = (A − iΩ)⁻¹ B B† (A† + iΩ)⁻¹`.

use alloc::vec::Vec;

use nalgebra::{SMatrix, SVector};
#[allow(unused_imports)] // shadowed by inherent methods whenever std is linked
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::linalg::{c, re, CMatrix, Mat3, C64};
use crate::model::{idx, PhysicalParams, StateVector};
use crate::ode::{self, OdeError, Tolerance};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("trajectory {trajectory} diverged at step {step} (norm above 1e6)")]
    UnstableIntegration { trajectory: usize, step: usize },
    #[error("invalid trajectory configuration: {reason}")]
    InvalidConfig { reason: &'static str },
    #[error("density-matrix integration failed: {0}")]
    Integration(#[from] OdeError),
}

/// `dρ/dt` for a single atom with the cavity fields replaced by the
/// amplitudes `[a1, a1*, a2, a2*]` (independent, as in the mean-field drift).
pub fn liouvillian(params: &PhysicalParams, amps: [C64; 4], rho: &Mat3) -> Mat3 {
    let [a1, a1c, a2, a2c] = amps;
    let g1 = params.pump.coupling;
    let g2 = params.probe.coupling;
    // energies of |0>, |1>, |2> in the frame rotating with both fields
    let energy = [-params.pump.detuning, 0.0, params.probe.detuning - params.pump.detuning];
    // H[k][l]: off-diagonal couplings
    let mut h = [[re(0.0); 3]; 3];
    h[0][1] = a1 * g1;
    h[1][0] = a1c * g1;
    h[0][2] = a2 * g2;
    h[2][0] = a2c * g2;
    for (k, e) in energy.iter().enumerate() {
        h[k][k] = re(*e);
    }

    let mut out = Mat3::zeros();
    for i in 0..3 {
        for j in 0..3 {
            let mut acc = re(0.0);
            for k in 0..3 {
                acc += h[i][k] * rho[(k, j)] - rho[(i, k)] * h[k][j];
            }
            out[(i, j)] = acc * c(0.0, -1.0);
        }
    }

    let gp = params.pump.decay;
    let gq = params.probe.decay;
    let total = gp + gq;
    out[(0, 0)] -= rho[(0, 0)] * total;
    out[(1, 1)] += rho[(0, 0)] * gp;
    out[(2, 2)] += rho[(0, 0)] * gq;
    for k in 1..3 {
        out[(0, k)] -= rho[(0, k)] * (0.5 * total);
        out[(k, 0)] -= rho[(k, 0)] * (0.5 * total);
    }
    // dephasing jump √(γ12/2)(|1><1| − |2><2|): ground coherence at γ12,
    // optical coherences at γ12/4
    let deph = params.ground_dephasing;
    out[(1, 2)] -= rho[(1, 2)] * deph;
    out[(2, 1)] -= rho[(2, 1)] * deph;
    for k in 1..3 {
        out[(0, k)] -= rho[(0, k)] * (0.25 * deph);
        out[(k, 0)] -= rho[(k, 0)] * (0.25 * deph);
    }
    out
}

/// `N ρ` built entry by entry from the atomic variables of `x`.
pub fn density_from_state(x: &StateVector, atoms: f64) -> Mat3 {
    let w1 = x[idx::W1];
    let w2 = x[idx::W2];
    let n0 = (re(atoms) + w1 + w2) / 3.0;
    let mut r = Mat3::zeros();
    r[(0, 0)] = n0;
    r[(1, 1)] = n0 - w1;
    r[(2, 2)] = n0 - w2;
    r[(0, 1)] = x[idx::S1M];
    r[(1, 0)] = x[idx::S1P];
    r[(0, 2)] = x[idx::S2M];
    r[(2, 0)] = x[idx::S2P];
    r[(1, 2)] = x[idx::S12];
    r[(2, 1)] = x[idx::S12P];
    r
}

/// Atomic variables read back from `N ρ` (or its time derivative).
pub fn atomic_variables(r: &Mat3) -> [C64; idx::ATOMIC] {
    let mut v = [re(0.0); idx::ATOMIC];
    v[idx::S1M] = r[(0, 1)];
    v[idx::S1P] = r[(1, 0)];
    v[idx::S2M] = r[(0, 2)];
    v[idx::S2P] = r[(2, 0)];
    v[idx::S12] = r[(1, 2)];
    v[idx::S12P] = r[(2, 1)];
    v[idx::W1] = r[(0, 0)] - r[(1, 1)];
    v[idx::W2] = r[(0, 0)] - r[(2, 2)];
    v
}

/// Atomic rows of the mean-field drift computed from the master equation.
pub fn atomic_rates(params: &PhysicalParams, x: &StateVector) -> [C64; idx::ATOMIC] {
    let amps = [x[idx::A1], x[idx::A1D], x[idx::A2], x[idx::A2D]];
    atomic_variables(&liouvillian(params, amps, &density_from_state(x, params.atoms)))
}

fn flatten(m: &Mat3) -> SVector<C64, 9> {
    SVector::<C64, 9>::from_iterator(m.iter().copied())
}

fn unflatten(v: &SVector<C64, 9>) -> Mat3 {
    Mat3::from_iterator(v.iter().copied())
}

/// Evolves `rho0` for a time `t_end` at fixed field amplitudes.
pub fn integrate_density_matrix(
    params: &PhysicalParams,
    a1: C64,
    a2: C64,
    rho0: &Mat3,
    t_end: f64,
) -> Result<Mat3, OracleError> {
    let amps = [a1, a1.conj(), a2, a2.conj()];
    let tol = Tolerance { rtol: 1e-12, atol: 1e-14, ..Tolerance::default() };
    let y = ode::integrate(|y| flatten(&liouvillian(params, amps, &unflatten(y))), flatten(rho0), t_end, tol)?;
    Ok(unflatten(&y))
}

/// Evolves the atomic variables of `x` with the fields frozen, through the
/// master equation.
pub fn integrate_atomic_state(
    params: &PhysicalParams,
    x: &StateVector,
    t_end: f64,
) -> Result<StateVector, OracleError> {
    let rho = density_from_state(x, params.atoms) / re(params.atoms);
    let amps = [x[idx::A1], x[idx::A1D], x[idx::A2], x[idx::A2D]];
    let tol = Tolerance { rtol: 1e-12, atol: 1e-14, ..Tolerance::default() };
    let y = ode::integrate(|y| flatten(&liouvillian(params, amps, &unflatten(y))), flatten(&rho), t_end, tol)?;
    let vars = atomic_variables(&(unflatten(&y) * re(params.atoms)));
    let mut out = *x;
    for (mu, v) in vars.into_iter().enumerate() {
        out.0[mu] = v;
    }
    Ok(out)
}

/// Budget of one stochastic PSD estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryConfig {
    pub dt: f64,
    /// Recorded steps per trajectory, split evenly into `segments`
    /// non-overlapping blocks; the periodograms use these blocks plus the
    /// ones straddling each boundary.
    pub n_steps: usize,
    pub n_trajectories: usize,
    pub seed: u64,
    pub segments: usize,
    /// Steps discarded before recording, starting from the initial sample.
    pub burn_in: usize,
}

impl TrajectoryConfig {
    pub fn segment_len(&self) -> usize {
        self.n_steps / self.segments.max(1)
    }

    /// Welch segments overlap by half their length.
    pub fn hop(&self) -> usize {
        self.segment_len() / 2
    }

    pub fn periodograms_per_trajectory(&self) -> usize {
        2 * self.segments - 1
    }

    pub fn validate(&self, max_rate: f64) -> Result<(), OracleError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(OracleError::InvalidConfig { reason: "dt must be positive" });
        }
        if self.dt * max_rate >= 0.1 {
            return Err(OracleError::InvalidConfig { reason: "dt·max|eig(A)| must be below 0.1" });
        }
        if self.segments == 0 || self.segment_len() < 2 {
            return Err(OracleError::InvalidConfig { reason: "segments need at least two steps" });
        }
        if self.n_trajectories == 0 {
            return Err(OracleError::InvalidConfig { reason: "no trajectories requested" });
        }
        Ok(())
    }
}

/// Linear Langevin system `dδx = −A δx dt + B dW` with `E[dW dW†] = I dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LangevinSystem<const D: usize> {
    pub drift: SMatrix<C64, D, D>,
    pub noise_factor: SMatrix<C64, D, D>,
    /// `L` such that the initial state is `L ξ` with `ξ` standard complex
    /// normal; zero starts every trajectory at rest.
    pub initial_factor: SMatrix<C64, D, D>,
}

impl<const D: usize> LangevinSystem<D> {
    pub fn new(drift: SMatrix<C64, D, D>, noise_factor: SMatrix<C64, D, D>) -> Self {
        LangevinSystem { drift, noise_factor, initial_factor: SMatrix::zeros() }
    }

    /// Starts trajectories from a sample of the covariance `L L†`, typically
    /// the Cholesky factor of the stationary covariance, so no burn-in is
    /// needed.
    pub fn with_initial_factor(mut self, factor: SMatrix<C64, D, D>) -> Self {
        self.initial_factor = factor;
        self
    }
}

/// Factor `B` with `B B†` equal to the Hermitian part of `m` with negative
/// eigenvalues clipped to zero.
pub fn psd_factor(m: &CMatrix) -> CMatrix {
    let hermitian = (m + m.adjoint()) * re(0.5);
    let eig = hermitian.symmetric_eigen();
    let mut b = eig.eigenvectors;
    for (j, lambda) in eig.eigenvalues.iter().enumerate() {
        let scale = lambda.max(0.0).sqrt();
        b.column_mut(j).scale_mut(scale);
    }
    b
}

fn complex_normal<const D: usize>(rng: &mut ChaCha8Rng) -> SVector<C64, D> {
    // unit variance per component: E[ξ ξ†] = I
    let s = core::f64::consts::FRAC_1_SQRT_2;
    SVector::<C64, D>::from_fn(|_, _| {
        c(rng.sample::<f64, _>(StandardNormal) * s, rng.sample::<f64, _>(StandardNormal) * s)
    })
}

fn hann(len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| {
            let s = (core::f64::consts::PI * n as f64 / (len - 1) as f64).sin();
            s * s
        })
        .collect()
}

/// Summed Welch periodograms of one trajectory. Frequencies index the outer
/// vector; each entry is the unnormalized `Σ_seg X X†`.
pub fn trajectory_periodograms<const D: usize>(
    system: &LangevinSystem<D>,
    cfg: &TrajectoryConfig,
    omegas: &[f64],
    trajectory: usize,
) -> Result<Vec<SMatrix<C64, D, D>>, OracleError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(trajectory as u64);
    let propagator = SMatrix::<C64, D, D>::identity() - system.drift * re(cfg.dt);
    let noise = system.noise_factor * re(cfg.dt.sqrt());
    let step = |x: &mut SVector<C64, D>, rng: &mut ChaCha8Rng| {
        *x = propagator * *x + noise * complex_normal::<D>(rng);
    };
    let check = |x: &SVector<C64, D>, step: usize| {
        if x.iter().any(|z| !z.norm().is_finite()) || x.norm() > 1e6 {
            Err(OracleError::UnstableIntegration { trajectory, step })
        } else {
            Ok(())
        }
    };

    let mut x = system.initial_factor * complex_normal::<D>(&mut rng);
    for n in 0..cfg.burn_in {
        step(&mut x, &mut rng);
        if n % 256 == 0 {
            check(&x, n)?;
        }
    }

    let len = cfg.segment_len();
    let hop = cfg.hop();
    let count = cfg.periodograms_per_trajectory();
    let window = hann(len);
    let rotors: Vec<C64> = omegas.iter().map(|w| c(0.0, w * cfg.dt).exp()).collect();
    let mut out = alloc::vec![SMatrix::<C64, D, D>::zeros(); omegas.len()];
    // two half-overlapping segments are open at any time; slot = segment % 2
    let mut sums = alloc::vec![[SVector::<C64, D>::zeros(); 2]; omegas.len()];
    // one global phase per frequency: a segment-wide phase factor drops out of X X†
    let mut phases = alloc::vec![re(1.0); omegas.len()];
    let total = (count - 1) * hop + len;
    for n in 0..total {
        let newest = (n / hop).min(count - 1);
        let oldest = if n >= len { (n - len) / hop + 1 } else { 0 };
        for seg in oldest..=newest {
            let w = window[n - seg * hop];
            for k in 0..omegas.len() {
                sums[k][seg % 2] += x * (phases[k] * w);
            }
        }
        for k in 0..omegas.len() {
            phases[k] *= rotors[k];
        }
        if n + 1 >= len && (n + 1 - len) % hop == 0 {
            let done = (n + 1 - len) / hop;
            for k in 0..omegas.len() {
                let s = core::mem::replace(&mut sums[k][done % 2], SVector::zeros());
                out[k] += s * s.adjoint();
            }
        }
        step(&mut x, &mut rng);
        if n % 256 == 0 {
            check(&x, cfg.burn_in + n)?;
        }
    }
    Ok(out)
}

/// Normalization turning a sum of `count` raw periodograms into a spectral
/// density estimate.
pub fn periodogram_scale(cfg: &TrajectoryConfig, count: usize) -> f64 {
    let energy: f64 = hann(cfg.segment_len()).iter().map(|w| w * w).sum();
    // X = Σ w x e^{iΩt}, E|X|² ≈ S(Ω)·Σw²/dt
    cfg.dt / (energy * count as f64)
}

/// Averaged PSD estimates of `δx` at each requested frequency. Trajectories
/// are summed in index order, so any parallel driver that reduces in the
/// same order reproduces this result bit for bit.
pub fn simulate_psd<const D: usize>(
    system: &LangevinSystem<D>,
    cfg: &TrajectoryConfig,
    omegas: &[f64],
) -> Result<Vec<SMatrix<C64, D, D>>, OracleError> {
    cfg.validate(spectral_bound(&system.drift))?;
    let mut total = alloc::vec![SMatrix::<C64, D, D>::zeros(); omegas.len()];
    for t in 0..cfg.n_trajectories {
        let p = trajectory_periodograms(system, cfg, omegas, t)?;
        for (acc, m) in total.iter_mut().zip(p) {
            *acc += m;
        }
    }
    Ok(finish_psd(total, cfg))
}

/// Applies the normalization of [`periodogram_scale`] to summed periodograms
/// from all trajectories.
pub fn finish_psd<const D: usize>(total: Vec<SMatrix<C64, D, D>>, cfg: &TrajectoryConfig) -> Vec<SMatrix<C64, D, D>> {
    let scale = periodogram_scale(cfg, cfg.n_trajectories * cfg.periodograms_per_trajectory());
    total.into_iter().map(|m| m * re(scale)).collect()
}

/// Upper bound on the eigenvalue moduli of `a` (its row-sum norm).
pub fn spectral_bound<const D: usize>(a: &SMatrix<C64, D, D>) -> f64 {
    (0..D).map(|i| a.row(i).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;
    use crate::model::FieldParams;

    fn params() -> PhysicalParams {
        PhysicalParams {
            pump: FieldParams::coherent(0.0, 0.5, c(0.0, 0.0)),
            probe: FieldParams::coherent(0.0, 0.5, c(0.0, 0.0)),
            ground_dephasing: 0.0,
            cavity_linewidth: 0.1,
            round_trip: 1e-3,
            atoms: 1.0,
        }
    }

    #[test]
    fn ground_state_is_constant_without_fields() {
        let rho = crate::linalg::ket_bra(1, 1);
        let out = integrate_density_matrix(&params(), c(0.0, 0.0), c(0.0, 0.0), &rho, 5.0).unwrap();
        assert!(max_abs(&(out - rho)) < 1e-14);
    }

    #[test]
    fn excited_population_decays_exponentially() {
        let rho = crate::linalg::ket_bra(0, 0);
        for t in [0.3, 1.0, 4.0] {
            let out = integrate_density_matrix(&params(), c(0.0, 0.0), c(0.0, 0.0), &rho, t).unwrap();
            assert!((out[(0, 0)].re - (-t).exp()).abs() < 1e-8);
            assert!((out.trace() - re(1.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn dark_state_is_reached_at_two_photon_resonance() {
        let mut p = params();
        p.pump.coupling = 1.0;
        p.probe.coupling = 1.0;
        p.pump.detuning = 0.3;
        p.probe.detuning = 0.3;
        let rho = crate::linalg::ket_bra(1, 1);
        let out = integrate_density_matrix(&p, c(0.8, 0.0), c(0.0, 0.5), &rho, 400.0).unwrap();
        assert!(out[(0, 0)].re.abs() < 1e-6, "{}", out[(0, 0)].re);
        let min_eig =
            ((out + out.adjoint()) * re(0.5)).symmetric_eigenvalues().iter().fold(f64::INFINITY, |a, &b| a.min(b));
        assert!(min_eig > -1e-9);
    }

    #[test]
    fn zero_noise_gives_zero_spectrum() {
        let a = SMatrix::<C64, 2, 2>::new(re(1.0), re(0.2), re(0.0), re(2.0));
        let b = SMatrix::<C64, 2, 2>::zeros();
        let cfg = TrajectoryConfig { dt: 0.01, n_steps: 512, n_trajectories: 3, seed: 1, segments: 2, burn_in: 10 };
        let psd = simulate_psd(&LangevinSystem::new(a, b), &cfg, &[0.0, 1.0]).unwrap();
        assert!(psd.iter().all(|m| max_abs(m) == 0.0));
    }

    #[test]
    fn coarse_step_is_rejected() {
        let a = SMatrix::<C64, 1, 1>::new(re(50.0));
        let cfg = TrajectoryConfig { dt: 0.01, n_steps: 512, n_trajectories: 1, seed: 1, segments: 2, burn_in: 0 };
        assert!(matches!(
            simulate_psd(&LangevinSystem::new(a, a), &cfg, &[0.0]),
            Err(OracleError::InvalidConfig { .. })
        ));
    }

    #[test]
    fn trajectories_are_reproducible_and_distinct() {
        let a = SMatrix::<C64, 1, 1>::new(re(1.0));
        let cfg = TrajectoryConfig { dt: 0.01, n_steps: 256, n_trajectories: 1, seed: 9, segments: 1, burn_in: 0 };
        let sys = LangevinSystem::new(a, a);
        let p0 = trajectory_periodograms(&sys, &cfg, &[0.5], 0).unwrap();
        let p0b = trajectory_periodograms(&sys, &cfg, &[0.5], 0).unwrap();
        let p1 = trajectory_periodograms(&sys, &cfg, &[0.5], 1).unwrap();
        assert_eq!(p0, p0b);
        assert_ne!(p0, p1);
    }
}
