//! Linearization around a steady state.
//!
//! Fluctuations obey `dδx/dt = −A δx + F(t)` with
//! `⟨F_μ(t) F_ν(t′)⟩ = D_μν δ(t − t′)` in the operator order written. The
//! atomic part of `D` comes from the generalized Einstein relation
//!
//! ```text
//! D_μν = Tr[N ρ (𝒢†(O_μ O_ν) − O_μ 𝒢†(O_ν) − 𝒢†(O_μ) O_ν)]
//! ```
//!
//! evaluated with the single-atom generator at the steady-state fields; the
//! field part is the input noise entering through `√(γ/τ) δA_in`.
//!
//! Quantum diffusion matrices are not symmetric, so `P conj(D) P = Dᵀ` rather
//! than `D`. The spectral formulas use the adjoint ordering
//! `⟨F_μ F_ν†⟩ = (D P)_μν`, which is Hermitian and positive semidefinite.

use nalgebra::Matrix3;
use thiserror::Error;

use crate::linalg::{self, c, re, CMatrix, Mat3, C64};
use crate::model::{self, atomic_operator, idx, Field, PhysicalParams, StateVector};
use crate::steady_state::{SteadyState, MARGINAL};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FluctuationError {
    #[error("reconstructed single-atom density matrix has eigenvalue {min_eigenvalue:e} < -1e-9")]
    NonPhysicalState { min_eigenvalue: f64 },
}

/// `A = −∂f/∂x` at a steady state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftMatrix(pub CMatrix);

impl DriftMatrix {
    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    /// Smallest real part of the spectrum; `NaN` if the eigen-solver fails.
    pub fn min_decay_rate(&self) -> f64 {
        linalg::min_real_eigenvalue(&self.0).unwrap_or(f64::NAN)
    }

    /// All eigenvalues have positive real part.
    pub fn is_stable(&self) -> bool {
        self.min_decay_rate() > MARGINAL
    }

    /// `max |P conj(A) P − A|`.
    pub fn conjugation_defect(&self) -> f64 {
        linalg::max_abs(&(linalg::conjugate_relabel(&self.0) - self.0))
    }
}

/// Langevin-force correlations split into atomic and input-field parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionMatrix {
    pub atomic: CMatrix,
    pub input: CMatrix,
}

impl DiffusionMatrix {
    /// `⟨F_μ F_ν⟩` in the written operator order.
    pub fn correlation(&self) -> CMatrix {
        self.atomic + self.input
    }

    /// `⟨F_μ F_ν†⟩`, the covariance used by the spectral matrix.
    pub fn adjoint_ordered(&self) -> CMatrix {
        linalg::permute_columns(&self.correlation())
    }

    /// `max |P conj(D) P − Dᵀ|`.
    pub fn conjugation_defect(&self) -> f64 {
        let d = self.correlation();
        linalg::max_abs(&(linalg::conjugate_relabel(&d) - d.transpose()))
    }
}

pub fn drift_matrix(params: &PhysicalParams, ss: &SteadyState) -> DriftMatrix {
    drift_matrix_at(params, &ss.x)
}

pub fn drift_matrix_at(params: &PhysicalParams, x: &StateVector) -> DriftMatrix {
    DriftMatrix(-model::jacobian(params, x))
}

pub fn diffusion_matrix(params: &PhysicalParams, ss: &SteadyState) -> Result<DiffusionMatrix, FluctuationError> {
    diffusion_matrix_at(params, &ss.x)
}

pub fn diffusion_matrix_at(params: &PhysicalParams, x: &StateVector) -> Result<DiffusionMatrix, FluctuationError> {
    Ok(DiffusionMatrix { atomic: atomic_diffusion(params, x)?, input: input_diffusion(params) })
}

/// Smallest eigenvalue of the Hermitian part of the single-atom density
/// matrix encoded in `x`.
pub fn min_density_eigenvalue(params: &PhysicalParams, x: &StateVector) -> f64 {
    let rho = x.collective_density(params.atoms) / re(params.atoms);
    let herm: Matrix3<C64> = (rho + rho.adjoint()) * re(0.5);
    herm.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Atomic Langevin-force correlations from the Einstein relation, scaled to
/// the collective operators by the atom number.
pub fn atomic_diffusion(params: &PhysicalParams, x: &StateVector) -> Result<CMatrix, FluctuationError> {
    let min_eigenvalue = min_density_eigenvalue(params, x);
    if min_eigenvalue < -1e-9 {
        return Err(FluctuationError::NonPhysicalState { min_eigenvalue });
    }
    let generator = model::build_generator_split(params, [x[idx::A1], x[idx::A1D], x[idx::A2], x[idx::A2D]]);
    let r = x.collective_density(params.atoms);
    let ops: [Mat3; idx::ATOMIC] = core::array::from_fn(atomic_operator);
    let images: [Mat3; idx::ATOMIC] = core::array::from_fn(|mu| generator.adjoint(&ops[mu]));
    let mut d = CMatrix::zeros();
    for mu in 0..idx::ATOMIC {
        for nu in 0..idx::ATOMIC {
            let product = ops[mu] * ops[nu];
            let k = generator.adjoint(&product) - ops[mu] * images[nu] - images[mu] * ops[nu];
            d[(mu, nu)] = (r * k).trace();
        }
    }
    Ok(d)
}

/// Input-noise block. A coherent input contributes only
/// `⟨δA_in δA_in†⟩ = 1`; excess noise `F > 1` is classical amplitude noise
/// `δA_in → δA_in + e^{iφ} r(t)`, `⟨r r⟩ = (F − 1)/4`, φ the drive phase.
pub fn input_diffusion(params: &PhysicalParams) -> CMatrix {
    let rate = params.cavity_linewidth / params.round_trip;
    let mut d = CMatrix::zeros();
    for field in Field::BOTH {
        let fp = params.field(field);
        let excess = 0.25 * (fp.input_fano - 1.0);
        let phase = if fp.drive.norm() > 0.0 { fp.drive / fp.drive.norm() } else { re(1.0) };
        let a = field.amplitude();
        let ad = field.amplitude_conj();
        d[(a, ad)] = re(rate * (1.0 + excess));
        d[(ad, a)] = re(rate * excess);
        d[(a, a)] = phase * phase * rate * excess;
        d[(ad, ad)] = (phase * phase).conj() * rate * excess;
    }
    d
}

/// Steady-state covariance `Σ = ⟨δx δx†⟩` solving `A Σ + Σ A† = D P`.
pub fn covariance(a: &DriftMatrix, d: &DiffusionMatrix) -> Result<CMatrix, linalg::LinalgError> {
    linalg::solve_lyapunov(&a.0, &d.adjoint_ordered())
}

/// Copy of `x` with the ground-state coherence removed; used by the
/// diagnostic that isolates coherence-mediated pump–probe coupling.
pub fn without_ground_coherence(x: &StateVector) -> StateVector {
    let mut y = *x;
    y.0[idx::S12] = c(0.0, 0.0);
    y.0[idx::S12P] = c(0.0, 0.0);
    y
}
