//! Noise spectra of the output fields.
//!
//! Fourier convention: `δx(t) = ∫ δx(Ω) e^{−iΩt} dΩ/2π`, so that
//!
//! ```text
//! S(Ω) = (A − iΩ)⁻¹ · N · (A† + iΩ)⁻¹,      N = ⟨F F†⟩ = D P
//! ```
//!
//! is the spectral density of `⟨δx δx†⟩`. Output fluctuations follow from
//! `δA_out = √(γτ) δA − δA_in` together with `δA_in = √(τ/γ) F_field`, so
//! the whole output vector is `T(Ω) F` with
//! `T = √(γτ) E (A − iΩ)⁻¹ − √(τ/γ) E` and `E` selecting the field rows.
//! Input–intracavity correlations are therefore carried exactly.
//!
//! Bright-field intensity noise is evaluated as amplitude-quadrature noise,
//! `δX = e^{−iφ} δA_out + e^{iφ} δA_out†` with `φ = arg a_out`; a coherent
//! beam gives 1.

use alloc::vec::Vec;

use nalgebra::{SMatrix, SVector};
#[allow(unused_imports)] // shadowed by inherent methods whenever std is linked
use num_traits::Float;
use thiserror::Error;

use crate::error::Error;
use crate::fluctuations::{self, DiffusionMatrix, DriftMatrix};
use crate::linalg::{self, c, re, CMatrix, LinalgError, C64, DIM};
use crate::model::{idx, Field, PhysicalParams};
use crate::quadrature::{self, QuadratureError, QuadratureOptions};
use crate::steady_state::{self, SolverOptions, SteadyState, MARGINAL};

/// Condition number of `A − iΩ` above which the resolvent is rejected.
pub const MAX_CONDITION: f64 = 1e14;

/// Output fields smaller than this have no defined quadrature phase.
pub const MIN_OUTPUT_AMPLITUDE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectraError {
    #[error("resolvent at Ω = {omega} is numerically singular (condition number {condition:e})")]
    SingularResolvent { omega: f64, condition: f64 },
    #[error("drift matrix is unstable (min Re λ = {min_decay_rate:e})")]
    Unstable { min_decay_rate: f64 },
    #[error("output {field:?} field vanishes; its amplitude quadrature is undefined")]
    ZeroOutputField { field: Field },
    #[error("Lyapunov solve failed: {0}")]
    Lyapunov(#[from] LinalgError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// Rows `a1, a1*, a2, a2*` of the state vector.
const FIELD_ROWS: [usize; 4] = [idx::A1, idx::A1D, idx::A2, idx::A2D];

pub type OutputMatrix = SMatrix<C64, 4, 4>;

/// `S(Ω)` together with the pieces needed for the output transformation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralMatrix {
    pub omega: f64,
    pub matrix: CMatrix,
    /// `(A − iΩ)⁻¹`.
    pub resolvent: CMatrix,
    /// Adjoint-ordered force covariance `⟨F F†⟩`.
    pub noise: CMatrix,
}

impl SpectralMatrix {
    /// Largest entry of the pump–probe blocks (rows of one field, columns of
    /// the other).
    pub fn cross_block_magnitude(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in [idx::A1, idx::A1D] {
            for j in [idx::A2, idx::A2D] {
                m = m.max(self.matrix[(i, j)].norm()).max(self.matrix[(j, i)].norm());
            }
        }
        m
    }
}

/// `S(Ω)` for a given adjoint-ordered noise covariance.
pub fn spectral_matrix_from_noise(
    a: &DriftMatrix,
    noise: &CMatrix,
    omega: f64,
) -> Result<SpectralMatrix, SpectraError> {
    let shifted = a.0 - CMatrix::identity() * c(0.0, omega);
    let (resolvent, condition) = linalg::inverse_with_condition(&shifted)
        .map_err(|_| SpectraError::SingularResolvent { omega, condition: f64::INFINITY })?;
    if condition > MAX_CONDITION {
        return Err(SpectraError::SingularResolvent { omega, condition });
    }
    let matrix = resolvent * noise * resolvent.adjoint();
    Ok(SpectralMatrix { omega, matrix, resolvent, noise: *noise })
}

pub fn spectral_matrix(a: &DriftMatrix, d: &DiffusionMatrix, omega: f64) -> Result<SpectralMatrix, SpectraError> {
    spectral_matrix_from_noise(a, &d.adjoint_ordered(), omega)
}

/// `(1/2π) ∫ S(Ω) dΩ` over the whole real line.
pub fn integrated_spectrum(a: &DriftMatrix, noise: &CMatrix, opts: QuadratureOptions) -> Result<CMatrix, SpectraError> {
    let eig = linalg::eigenvalues(&a.0).ok_or(LinalgError::Singular)?;
    let slowest = eig.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    if slowest <= MARGINAL {
        return Err(SpectraError::Unstable { min_decay_rate: slowest });
    }
    let fastest = eig.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let scale = (slowest * fastest).sqrt();
    let mut failure = None;
    let integral = quadrature::integrate_real_line(
        |w| match spectral_matrix_from_noise(a, noise, w) {
            Ok(s) => s.matrix,
            Err(e) => {
                failure.get_or_insert(e);
                CMatrix::zeros()
            }
        },
        scale,
        opts,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(integral.value / re(2.0 * core::f64::consts::PI))
}

/// Equal-time covariance from the Lyapunov equation `A Σ + Σ A† = N`.
pub fn lyapunov_covariance(a: &DriftMatrix, noise: &CMatrix) -> Result<CMatrix, SpectraError> {
    Ok(linalg::solve_lyapunov(&a.0, noise)?)
}

/// `‖(1/2π)∫S dΩ − Σ‖_F / ‖Σ‖_F`.
pub fn lyapunov_identity_defect(a: &DriftMatrix, noise: &CMatrix) -> Result<f64, SpectraError> {
    let integral = integrated_spectrum(a, noise, QuadratureOptions::default())?;
    let sigma = lyapunov_covariance(a, noise)?;
    Ok(linalg::frobenius(&(integral - sigma)) / linalg::frobenius(&sigma))
}

/// Spectral matrix of `(δA₁,out, δA₁,out†, δA₂,out, δA₂,out†)`.
pub fn output_spectral_matrix(s: &SpectralMatrix, params: &PhysicalParams) -> OutputMatrix {
    let inside = params.output_coupling();
    let direct = (params.round_trip / params.cavity_linewidth).sqrt();
    let t = SMatrix::<C64, 4, DIM>::from_fn(|i, j| {
        let row = FIELD_ROWS[i];
        let mut v = s.resolvent[(row, j)] * inside;
        if j == row {
            v -= re(direct);
        }
        v
    });
    t * s.noise * t.adjoint()
}

/// Mean output amplitudes and the quadrature selection vector of each field.
fn quadrature_vectors(
    params: &PhysicalParams,
    ss: &SteadyState,
) -> Result<([f64; 2], [SVector<C64, 4>; 2]), SpectraError> {
    let mut intensity = [0.0; 2];
    let mut vectors = [SVector::<C64, 4>::zeros(); 2];
    for (k, field) in Field::BOTH.into_iter().enumerate() {
        let out = ss.output_amplitude(params, field);
        if out.norm() < MIN_OUTPUT_AMPLITUDE {
            return Err(SpectraError::ZeroOutputField { field });
        }
        let phase = out / out.norm();
        intensity[k] = out.norm_sqr();
        vectors[k][2 * k] = phase.conj();
        vectors[k][2 * k + 1] = phase;
    }
    Ok((intensity, vectors))
}

/// Shot-noise-normalized amplitude-quadrature spectra of both output beams
/// and their cross spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpectra {
    pub pump: f64,
    pub probe: f64,
    /// `⟨δX₁ δX₂⟩(Ω)`.
    pub cross: C64,
    /// Output photon fluxes `|a_out|²`.
    pub intensities: [f64; 2],
}

pub fn output_spectra(
    s: &SpectralMatrix,
    params: &PhysicalParams,
    ss: &SteadyState,
) -> Result<QuadratureSpectra, SpectraError> {
    let out = output_spectral_matrix(s, params);
    let (intensities, v) = quadrature_vectors(params, ss)?;
    let form = |x: &SVector<C64, 4>, y: &SVector<C64, 4>| (x.transpose() * out * y.map(|z| z.conj()))[(0, 0)];
    Ok(QuadratureSpectra {
        pump: form(&v[0], &v[0]).re,
        probe: form(&v[1], &v[1]).re,
        cross: form(&v[0], &v[1]),
        intensities,
    })
}

/// One row of scan output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumRecord {
    pub delta_l2: f64,
    pub omega: f64,
    pub s_pump: f64,
    pub s_probe: f64,
    pub fano_pump: f64,
    pub fano_probe: f64,
    /// Sum photocurrent noise over the total shot noise.
    pub s_sum: f64,
    pub s_diff: f64,
    /// `s_sum − s_diff`: the covariance term `4⟨δn₁ δn₂⟩` over total shot noise.
    pub correlation_2c: f64,
    /// `(s_sum − s_diff)/(s_sum + s_diff)`, between −1 and 1.
    pub correlation_norm: f64,
}

impl SpectrumRecord {
    /// `s_sum + s_diff` minus the intensity-weighted mean of the single-beam
    /// spectra times two; zero up to rounding.
    pub fn splitting_defect(&self, intensities: [f64; 2]) -> f64 {
        let [i1, i2] = intensities;
        let weighted = 2.0 * (i1 * self.s_pump + i2 * self.s_probe) / (i1 + i2);
        (self.s_sum + self.s_diff - weighted).abs()
    }
}

/// Builds the full record, including sum/difference noise and correlation.
pub fn correlation_record(
    s: &SpectralMatrix,
    params: &PhysicalParams,
    ss: &SteadyState,
) -> Result<SpectrumRecord, SpectraError> {
    Ok(record_from(&output_spectra(s, params, ss)?, params.probe.detuning, s.omega))
}

/// Record from already-computed quadrature spectra.
pub fn record_from(q: &QuadratureSpectra, delta_l2: f64, omega: f64) -> SpectrumRecord {
    let [i1, i2] = q.intensities;
    let own = i1 * q.pump + i2 * q.probe;
    let mixed = 2.0 * (i1 * i2).sqrt() * q.cross.re;
    let s_sum = (own + mixed) / (i1 + i2);
    let s_diff = (own - mixed) / (i1 + i2);
    SpectrumRecord {
        delta_l2,
        omega,
        s_pump: q.pump,
        s_probe: q.probe,
        fano_pump: q.pump,
        fano_probe: q.probe,
        s_sum,
        s_diff,
        correlation_2c: s_sum - s_diff,
        correlation_norm: (s_sum - s_diff) / (s_sum + s_diff),
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SpectraOptions {
    /// Diagnostic: remove the ground-state coherence from the linearization.
    pub force_zero_coherence: bool,
    pub solver: SolverOptions,
}

/// Drift and noise at a steady state, with the optional coherence removal.
pub fn linearization(
    params: &PhysicalParams,
    ss: &SteadyState,
    opts: &SpectraOptions,
) -> Result<(DriftMatrix, CMatrix), Error> {
    let x = if opts.force_zero_coherence { fluctuations::without_ground_coherence(&ss.x) } else { ss.x };
    let mut a = fluctuations::drift_matrix_at(params, &x);
    let d = fluctuations::diffusion_matrix_at(params, &x)?;
    let mut noise = d.adjoint_ordered();
    if opts.force_zero_coherence {
        decouple_ground_coherence(&mut a, &mut noise);
    }
    let min_decay_rate = a.min_decay_rate();
    if min_decay_rate.is_nan() || min_decay_rate <= -MARGINAL {
        return Err(SpectraError::Unstable { min_decay_rate }.into());
    }
    Ok((a, noise))
}

/// Removes the ground-coherence fluctuation channel: its rows and columns
/// are cut from the drift (keeping a unit decay so `A` stays invertible)
/// and from the noise.
pub fn decouple_ground_coherence(a: &mut DriftMatrix, noise: &mut CMatrix) {
    for k in [idx::S12, idx::S12P] {
        for j in 0..DIM {
            a.0[(k, j)] = re(0.0);
            a.0[(j, k)] = re(0.0);
            noise[(k, j)] = re(0.0);
            noise[(j, k)] = re(0.0);
        }
        a.0[(k, k)] = re(1.0);
    }
}

/// Record at one steady state.
pub fn record_at(
    params: &PhysicalParams,
    ss: &SteadyState,
    omega: f64,
    opts: &SpectraOptions,
) -> Result<SpectrumRecord, Error> {
    let (a, noise) = linearization(params, ss, opts)?;
    let s = spectral_matrix_from_noise(&a, &noise, omega)?;
    Ok(correlation_record(&s, params, ss)?)
}

/// Spectra along a probe-detuning grid: continuation for the steady states,
/// then an independent spectral evaluation at each point.
pub fn scan(params: &PhysicalParams, grid: &[f64], omega: f64) -> Result<Vec<SpectrumRecord>, Error> {
    scan_with(params, grid, omega, &SpectraOptions::default())
}

pub fn scan_with(
    params: &PhysicalParams,
    grid: &[f64],
    omega: f64,
    opts: &SpectraOptions,
) -> Result<Vec<SpectrumRecord>, Error> {
    let states = steady_state::continuation_scan_with(params, grid, &opts.solver)?;
    grid.iter()
        .zip(&states)
        .enumerate()
        .map(|(i, (&delta, ss))| {
            record_at(&params.with_probe_detuning(delta), ss, omega, opts).map_err(|e| Error::at(i, e))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{conjugate_relabel, max_abs, partner_permutation};
    use crate::model::{FieldParams, StateVector};

    fn pseudo_random(seed: u64) -> impl FnMut() -> f64 {
        let mut s = seed;
        move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        }
    }

    fn random_stable(seed: u64) -> (DriftMatrix, CMatrix) {
        let mut r = pseudo_random(seed);
        let a = CMatrix::from_fn(|i, j| c(r(), r()) * 0.6 + if i == j { re(2.0 + 3.0 * r()) } else { re(0.0) });
        let b = CMatrix::from_fn(|_, _| c(r(), r()));
        (DriftMatrix(a), b * b.adjoint())
    }

    fn empty_cavity(detuning: f64, fano: f64) -> (PhysicalParams, SteadyState) {
        let mut p = PhysicalParams {
            pump: FieldParams::coherent(0.0, 0.5, c(3.0, 1.0)),
            probe: FieldParams::coherent(0.0, 0.5, c(-1.0, 2.0)),
            ground_dephasing: 0.0,
            cavity_linewidth: 0.1,
            round_trip: 1e-3,
            atoms: 100.0,
        };
        p.pump.cavity_detuning = detuning;
        p.probe.cavity_detuning = -0.5 * detuning;
        p.pump.input_fano = fano;
        let a1 = p.empty_cavity_amplitude(Field::Pump);
        let a2 = p.empty_cavity_amplitude(Field::Probe);
        let x = StateVector::ground(p.atoms, 1, a1, a2);
        let ss = SteadyState { x, residual: 0.0, stable: false, min_decay_rate: 0.0 };
        (p, ss)
    }

    #[test]
    fn zero_noise_gives_zero_spectrum() {
        let (a, _) = random_stable(1);
        let s = spectral_matrix_from_noise(&a, &CMatrix::zeros(), 0.7).unwrap();
        assert_eq!(s.matrix, CMatrix::zeros());
    }

    #[test]
    fn diagonal_drift_gives_lorentzians() {
        let rates: [f64; DIM] = core::array::from_fn(|i| 0.5 + i as f64);
        let a = DriftMatrix(CMatrix::from_fn(|i, j| if i == j { re(rates[i]) } else { re(0.0) }));
        for omega in [0.0, 0.3, 4.0] {
            let s = spectral_matrix_from_noise(&a, &CMatrix::identity(), omega).unwrap();
            for (i, rate) in rates.iter().enumerate() {
                for j in 0..DIM {
                    let expect = if i == j { 1.0 / (rate * rate + omega * omega) } else { 0.0 };
                    assert!((s.matrix[(i, j)] - re(expect)).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn conjugation_maps_omega_to_minus_omega() {
        // real-symmetric-pair drift: P conj(A) P = A
        let (a0, n0) = random_stable(5);
        let a = DriftMatrix((a0.0 + conjugate_relabel(&a0.0)) * re(0.5));
        let p = partner_permutation();
        // noise whose relabelled conjugate equals its transpose, like a quantum D·P
        let d = n0 * p;
        let d = (d + conjugate_relabel(&d).transpose()) * re(0.5);
        let noise = d * p;
        for omega in [0.2, 1.3] {
            let s = spectral_matrix_from_noise(&a, &noise, omega).unwrap();
            let m = spectral_matrix_from_noise(&a, &noise, -omega).unwrap().resolvent;
            let swapped = m * (d.transpose() * p) * m.adjoint();
            assert!(max_abs(&(conjugate_relabel(&s.matrix) - swapped)) < 1e-12);
        }
        // classical (symmetric) noise: the plain relation holds
        let d_sym = (d + d.transpose()) * re(0.5);
        for omega in [0.2, 1.3] {
            let s = spectral_matrix_from_noise(&a, &(d_sym * p), omega).unwrap();
            let t = spectral_matrix_from_noise(&a, &(d_sym * p), -omega).unwrap();
            assert!(max_abs(&(conjugate_relabel(&s.matrix) - t.matrix)) < 1e-12);
        }
    }

    #[test]
    fn integral_of_spectrum_matches_lyapunov() {
        for seed in [2, 3, 4] {
            let (a, n) = random_stable(seed);
            let defect = lyapunov_identity_defect(&a, &n).unwrap();
            assert!(defect < 1e-6, "seed {seed}: {defect:e}");
        }
    }

    #[test]
    fn singular_resolvent_is_rejected() {
        let a = DriftMatrix(CMatrix::from_fn(|i, j| if i == j && i > 0 { re(1.0) } else { re(0.0) }));
        let r = spectral_matrix_from_noise(&a, &CMatrix::identity(), 0.0);
        assert!(matches!(r, Err(SpectraError::SingularResolvent { .. })));
    }

    /// Hand-derived filter: `δA_out = r₊ δA_in`, `δA_out† = r₋ δA_in†` with
    /// `r± = (γ/2 ∓ iΔ ± iΩ)/(γ/2 ± iΔ ∓ iΩ)`. Classical amplitude noise of
    /// strength `(F − 1)/4` along the drive then adds `(F−1)/4 · |u + v|²`,
    /// `u = e^{−iθ} r₊`, `v = e^{iθ} r₋`, `θ = arg r₊(0)`.
    fn empty_cavity_closed_form(gamma: f64, detuning: f64, omega: f64, fano: f64) -> f64 {
        let h = 0.5 * gamma;
        let rp = c(h, -detuning + omega) / c(h, detuning - omega);
        let rm = c(h, detuning + omega) / c(h, -detuning - omega);
        let theta = (c(h, -detuning) / c(h, detuning)).arg();
        let u = c(0.0, -theta).exp() * rp;
        let v = c(0.0, theta).exp() * rm;
        u.norm_sqr() + 0.25 * (fano - 1.0) * (u + v).norm_sqr()
    }

    fn empty_record(detuning: f64, fano: f64, omega: f64) -> (SpectrumRecord, QuadratureSpectra) {
        let (p, ss) = empty_cavity(detuning, fano);
        let a = fluctuations::drift_matrix_at(&p, &ss.x);
        let d = fluctuations::diffusion_matrix_at(&p, &ss.x).unwrap();
        let s = spectral_matrix(&a, &d, omega).unwrap();
        let q = output_spectra(&s, &p, &ss).unwrap();
        (record_from(&q, 0.0, omega), q)
    }

    #[test]
    fn empty_cavity_is_unitary_for_coherent_inputs() {
        let mut r = pseudo_random(17);
        for _ in 0..20 {
            let (rec, _) = empty_record(0.4 * r(), 1.0, 0.6 * r());
            for v in [rec.s_pump, rec.s_probe, rec.s_sum, rec.s_diff] {
                assert!((v - 1.0).abs() < 1e-10, "{rec:?}");
            }
        }
    }

    #[test]
    fn empty_cavity_transmits_excess_noise_by_the_closed_form() {
        for (detuning, omega) in [(0.0, 1e-5), (0.0, 0.03), (0.07, 0.01), (-0.05, 0.4), (0.02, -2.0)] {
            let fano = 3.0;
            let (rec, _) = empty_record(detuning, fano, omega);
            let expect = empty_cavity_closed_form(0.1, detuning, omega, fano);
            assert!((rec.s_pump - expect).abs() < 1e-10, "{detuning} {omega}: {} vs {expect}", rec.s_pump);
            assert!((rec.s_probe - 1.0).abs() < 1e-10);
        }
        // inside the cavity bandwidth the input excess noise is transmitted whole
        let (rec, _) = empty_record(0.0, 3.0, 1e-5);
        assert!((rec.s_pump - 3.0).abs() < 1e-6);
    }

    #[test]
    fn sum_and_difference_split_the_single_beam_noise() {
        let (rec, q) = empty_record(0.03, 2.0, 0.02);
        assert!(rec.splitting_defect(q.intensities) < 1e-12);
        assert!(rec.correlation_2c.abs() < 1e-12);
    }

    #[test]
    fn dark_output_field_is_reported() {
        let (mut p, ss) = empty_cavity(0.0, 1.0);
        p.probe.drive = c(0.0, 0.0);
        let mut x = ss.x;
        x.0[idx::A2] = c(0.0, 0.0);
        x.0[idx::A2D] = c(0.0, 0.0);
        let ss = SteadyState { x, ..ss };
        let a = fluctuations::drift_matrix_at(&p, &ss.x);
        let d = fluctuations::diffusion_matrix_at(&p, &ss.x).unwrap();
        let s = spectral_matrix(&a, &d, 0.1).unwrap();
        assert_eq!(output_spectra(&s, &p, &ss), Err(SpectraError::ZeroOutputField { field: Field::Probe }));
    }
}
