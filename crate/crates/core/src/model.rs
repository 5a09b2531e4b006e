//! Physical parameters, the mean-field state vector and its drift.
//!
//! Levels are labelled `|0⟩` (excited), `|1⟩` and `|2⟩` (ground). Field 1 (the
//! pump) drives `|1⟩ ↔ |0⟩` and field 2 (the probe) drives `|2⟩ ↔ |0⟩`. The
//! atomic part of the drift is not transcribed by hand: every atomic row is
//! `Tr[N ρ · 𝒢†(O_μ)]` where `O_μ` is the single-atom operator behind state
//! variable `μ` and `𝒢†` the adjoint Lindblad generator with the cavity
//! fields entering as c-numbers (mean-field factorization `⟨ŜÂ⟩ → ⟨Ŝ⟩⟨Â⟩`).
//!
//! Intracavity field operators are normalized to `[Â, Â†] = 1/τ`, so `|a|²`
//! is a photon flux. With `Ĥ = ħg Ŝ⁺Â + h.c.` this gives the cavity rows
//!
//! ```text
//! dA₁/dt = −(γ/2 + iΔc₁) A₁ − i (g₁/τ) S₁⁻ + √(γ/τ) A₁,in
//! ```
//!
//! and the single-atom Rabi frequency `2g|a|`.

use alloc::vec::Vec;
use core::ops::Index;

#[allow(unused_imports)] // shadowed by inherent methods whenever std is linked
use num_traits::Float;
use thiserror::Error;

use crate::linalg::{self, c, commutator, ket_bra, re, CMatrix, CVector, Mat3, C64, DIM, PARTNER};

/// Positions of the mean-field variables inside a [`StateVector`].
pub mod idx {
    /// `⟨Ŝ₁⁻⟩ = N⟨|1⟩⟨0|⟩`
    pub const S1M: usize = 0;
    pub const S1P: usize = 1;
    /// `⟨Ŝ₂⁻⟩ = N⟨|2⟩⟨0|⟩`
    pub const S2M: usize = 2;
    pub const S2P: usize = 3;
    /// Ground-state coherence `⟨Ŝ₁₂⟩ = N⟨|2⟩⟨1|⟩`.
    pub const S12: usize = 4;
    /// `⟨Ŝ₁₂⁺⟩ = N⟨|1⟩⟨2|⟩`
    pub const S12P: usize = 5;
    /// Inversion `N(ρ₀₀ − ρ₁₁)`.
    pub const W1: usize = 6;
    /// Inversion `N(ρ₀₀ − ρ₂₂)`.
    pub const W2: usize = 7;
    pub const A1: usize = 8;
    pub const A1D: usize = 9;
    pub const A2: usize = 10;
    pub const A2D: usize = 11;

    /// Number of atomic variables; they occupy indices `0..ATOMIC`.
    pub const ATOMIC: usize = 8;

    pub const NAMES: [&str; super::DIM] =
        ["s1m", "s1p", "s2m", "s2p", "s12", "s12p", "w1", "w2", "a1", "a1d", "a2", "a2d"];
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("total excited-state decay Γ1 + Γ2 is zero")]
    ZeroTotalDecay,
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: &'static str },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Field {
    Pump,
    Probe,
}

impl Field {
    pub const BOTH: [Field; 2] = [Field::Pump, Field::Probe];

    /// Index of the intracavity amplitude `a`.
    pub const fn amplitude(self) -> usize {
        match self {
            Field::Pump => idx::A1,
            Field::Probe => idx::A2,
        }
    }

    /// Index of the conjugate amplitude `a*`.
    pub const fn amplitude_conj(self) -> usize {
        match self {
            Field::Pump => idx::A1D,
            Field::Probe => idx::A2D,
        }
    }

    /// Index of the lowering polarization driven by this field.
    pub const fn polarization(self) -> usize {
        match self {
            Field::Pump => idx::S1M,
            Field::Probe => idx::S2M,
        }
    }

    /// Ground level this field couples to the excited state.
    pub const fn ground_level(self) -> usize {
        match self {
            Field::Pump => 1,
            Field::Probe => 2,
        }
    }
}

/// Parameters attached to one of the two cavity modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldParams {
    /// Atom–field coupling `g`.
    pub coupling: f64,
    /// Spontaneous emission rate from `|0⟩` into this field's ground state.
    pub decay: f64,
    pub cavity_detuning: f64,
    /// Field frequency minus atomic transition frequency.
    pub detuning: f64,
    /// Input drive amplitude `α_in`; `|α_in|²` is the input photon flux.
    pub drive: C64,
    /// Input intensity noise relative to shot noise; 1 is a coherent beam.
    pub input_fano: f64,
}

impl FieldParams {
    pub fn coherent(coupling: f64, decay: f64, drive: C64) -> Self {
        FieldParams { coupling, decay, cavity_detuning: 0.0, detuning: 0.0, drive, input_fano: 1.0 }
    }
}

/// Complete parameter set of the cavity model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    pub pump: FieldParams,
    pub probe: FieldParams,
    /// Ground-state decoherence rate γ₁₂.
    pub ground_dephasing: f64,
    /// Cavity linewidth γ.
    pub cavity_linewidth: f64,
    /// Cavity length divided by the speed of light, τ.
    pub round_trip: f64,
    /// Number of atoms N.
    pub atoms: f64,
}

impl PhysicalParams {
    pub fn field(&self, f: Field) -> &FieldParams {
        match f {
            Field::Pump => &self.pump,
            Field::Probe => &self.probe,
        }
    }

    pub fn field_mut(&mut self, f: Field) -> &mut FieldParams {
        match f {
            Field::Pump => &mut self.pump,
            Field::Probe => &mut self.probe,
        }
    }

    /// Γ = Γ₁ + Γ₂, the unit of frequency.
    pub fn total_decay(&self) -> f64 {
        self.pump.decay + self.probe.decay
    }

    /// √(γ/τ): coupling of the input field into the cavity.
    pub fn input_coupling(&self) -> f64 {
        (self.cavity_linewidth / self.round_trip).sqrt()
    }

    /// √(γτ): scaling of the intracavity amplitude in the output field,
    /// `A_out = √(γτ) A − A_in`.
    pub fn output_coupling(&self) -> f64 {
        (self.cavity_linewidth * self.round_trip).sqrt()
    }

    /// Intracavity amplitude of field `f` with the atoms removed.
    pub fn empty_cavity_amplitude(&self, f: Field) -> C64 {
        let fp = self.field(f);
        fp.drive * self.input_coupling() / c(0.5 * self.cavity_linewidth, fp.cavity_detuning)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        fn finite(name: &'static str, v: f64) -> Result<(), ModelError> {
            if v.is_finite() {
                Ok(())
            } else {
                Err(ModelError::InvalidParameter { name, reason: "must be finite" })
            }
        }
        fn nonneg(name: &'static str, v: f64) -> Result<(), ModelError> {
            finite(name, v)?;
            if v >= 0.0 {
                Ok(())
            } else {
                Err(ModelError::InvalidParameter { name, reason: "must be non-negative" })
            }
        }
        fn positive(name: &'static str, v: f64) -> Result<(), ModelError> {
            finite(name, v)?;
            if v > 0.0 {
                Ok(())
            } else {
                Err(ModelError::InvalidParameter { name, reason: "must be strictly positive" })
            }
        }
        let names = [
            ("g1", "Gamma1", "Delta_c1", "delta_L1", "alpha1_in", "fano1_in"),
            ("g2", "Gamma2", "Delta_c2", "delta_L2", "alpha2_in", "fano2_in"),
        ];
        for (fp, n) in [&self.pump, &self.probe].into_iter().zip(names) {
            nonneg(n.0, fp.coupling)?;
            nonneg(n.1, fp.decay)?;
            finite(n.2, fp.cavity_detuning)?;
            finite(n.3, fp.detuning)?;
            finite(n.4, fp.drive.re)?;
            finite(n.4, fp.drive.im)?;
            finite(n.5, fp.input_fano)?;
            if fp.input_fano < 1.0 {
                return Err(ModelError::InvalidParameter {
                    name: n.5,
                    reason: "input noise below shot noise is not supported",
                });
            }
        }
        if self.total_decay() == 0.0 {
            return Err(ModelError::ZeroTotalDecay);
        }
        nonneg("gamma12", self.ground_dephasing)?;
        positive("gamma", self.cavity_linewidth)?;
        positive("tau", self.round_trip)?;
        finite("N", self.atoms)?;
        if self.atoms < 1.0 {
            return Err(ModelError::InvalidParameter { name: "N", reason: "must be at least 1" });
        }
        Ok(())
    }

    /// Expresses every quantity in units of Γ = Γ₁ + Γ₂: rates and detunings
    /// are divided by Γ, τ becomes τΓ, and couplings and amplitudes (which
    /// carry `s^{-1/2}`) are divided by √Γ.
    pub fn nondimensionalize(&self) -> Result<Self, ModelError> {
        let unit = self.total_decay();
        if unit == 0.0 {
            return Err(ModelError::ZeroTotalDecay);
        }
        Ok(self.rescale(1.0 / unit))
    }

    /// Inverse of [`nondimensionalize`](Self::nondimensionalize) for a known Γ.
    pub fn redimensionalize(&self, total_decay: f64) -> Self {
        self.rescale(total_decay)
    }

    fn rescale(&self, s: f64) -> Self {
        let root = s.sqrt();
        let field = |fp: &FieldParams| FieldParams {
            coupling: fp.coupling * root,
            decay: fp.decay * s,
            cavity_detuning: fp.cavity_detuning * s,
            detuning: fp.detuning * s,
            drive: fp.drive * root,
            input_fano: fp.input_fano,
        };
        PhysicalParams {
            pump: field(&self.pump),
            probe: field(&self.probe),
            ground_dephasing: self.ground_dephasing * s,
            cavity_linewidth: self.cavity_linewidth * s,
            round_trip: self.round_trip / s,
            atoms: self.atoms,
        }
    }

    /// Copy with both couplings multiplied by `factor`.
    pub fn with_couplings_scaled(&self, factor: f64) -> Self {
        let mut p = *self;
        p.pump.coupling *= factor;
        p.probe.coupling *= factor;
        p
    }

    pub fn with_probe_detuning(&self, detuning: f64) -> Self {
        let mut p = *self;
        p.probe.detuning = detuning;
        p
    }
}

/// The twelve mean-field variables in the order given by [`idx`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVector(pub CVector);

impl Index<usize> for StateVector {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.0[i]
    }
}

impl StateVector {
    pub fn zeros() -> Self {
        StateVector(CVector::zeros())
    }

    /// All atoms in ground level `level` (1 or 2), cavity fields as given.
    pub fn ground(atoms: f64, level: usize, a1: C64, a2: C64) -> Self {
        let mut populations = [0.0; 3];
        populations[level] = atoms;
        Self::from_populations(populations, a1, a2)
    }

    /// Incoherent mixture with the given level populations `[N₀, N₁, N₂]`.
    pub fn from_populations(populations: [f64; 3], a1: C64, a2: C64) -> Self {
        let mut x = CVector::zeros();
        x[idx::W1] = re(populations[0] - populations[1]);
        x[idx::W2] = re(populations[0] - populations[2]);
        x[idx::A1] = a1;
        x[idx::A1D] = a1.conj();
        x[idx::A2] = a2;
        x[idx::A2D] = a2.conj();
        StateVector(x)
    }

    /// `P · conj(x)`: the state obtained by conjugating every variable and
    /// swapping it with its partner. Physical states are fixed points.
    pub fn conjugate_relabel(&self) -> Self {
        StateVector(CVector::from_fn(|i, _| self.0[PARTNER[i]].conj()))
    }

    /// Largest violation of the conjugate pairing, including the imaginary
    /// parts of the inversions.
    pub fn pairing_defect(&self) -> f64 {
        (0..DIM).map(|i| (self.0[PARTNER[i]] - self.0[i].conj()).norm()).fold(0.0, f64::max)
    }

    pub fn amplitude(&self, f: Field) -> C64 {
        self.0[f.amplitude()]
    }

    /// Level populations `[N₀, N₁, N₂]` implied by the inversions.
    pub fn populations(&self, atoms: f64) -> [f64; 3] {
        let w1 = self.0[idx::W1].re;
        let w2 = self.0[idx::W2].re;
        let excited = (atoms + w1 + w2) / 3.0;
        [excited, excited - w1, excited - w2]
    }

    /// `N ρ`, the collective single-atom density matrix encoded by the
    /// atomic variables. Linear in the state and well defined for `N = 0`.
    pub fn collective_density(&self, atoms: f64) -> Mat3 {
        let mut r = Mat3::identity() * re(atoms / 3.0);
        for mu in 0..idx::ATOMIC {
            r += density_direction(mu) * self.0[mu];
        }
        r
    }

    /// Inverse of [`collective_density`](Self::collective_density); field
    /// entries are taken from `fields`.
    pub fn from_collective_density(r: &Mat3, fields: &StateVector) -> Self {
        let mut x = fields.0;
        for mu in 0..idx::ATOMIC {
            x[mu] = (r * atomic_operator(mu)).trace();
        }
        StateVector(x)
    }
}

/// Single-atom operator whose collective expectation is atomic variable `mu`.
pub fn atomic_operator(mu: usize) -> Mat3 {
    match mu {
        idx::S1M => ket_bra(1, 0),
        idx::S1P => ket_bra(0, 1),
        idx::S2M => ket_bra(2, 0),
        idx::S2P => ket_bra(0, 2),
        idx::S12 => ket_bra(2, 1),
        idx::S12P => ket_bra(1, 2),
        idx::W1 => ket_bra(0, 0) - ket_bra(1, 1),
        idx::W2 => ket_bra(0, 0) - ket_bra(2, 2),
        _ => panic!("state index {mu} is not atomic"),
    }
}

/// Derivative of `N ρ` with respect to atomic variable `mu`. These are the
/// dual basis of [`atomic_operator`]: `Tr[E_ν O_μ] = δ_μν`, `Tr E_ν = 0`.
fn density_direction(mu: usize) -> Mat3 {
    match mu {
        idx::W1 => Mat3::from_diagonal(&nalgebra::Vector3::new(re(1.0 / 3.0), re(-2.0 / 3.0), re(1.0 / 3.0))),
        idx::W2 => Mat3::from_diagonal(&nalgebra::Vector3::new(re(1.0 / 3.0), re(1.0 / 3.0), re(-2.0 / 3.0))),
        _ => atomic_operator(mu).transpose(),
    }
}

/// Single-atom dynamics at fixed field amplitudes: rotating-frame Hamiltonian
/// plus jump operators.
#[derive(Debug, Clone, PartialEq)]
pub struct LindbladGenerator {
    pub hamiltonian: Mat3,
    pub jump_ops: Vec<Mat3>,
}

impl LindbladGenerator {
    /// Heisenberg-picture generator
    /// `𝒢†(O) = i[H, O] + Σ_k (L_k† O L_k − ½{L_k† L_k, O})`.
    pub fn adjoint(&self, op: &Mat3) -> Mat3 {
        let mut out = commutator(&self.hamiltonian, op) * c(0.0, 1.0);
        for l in &self.jump_ops {
            let ld = l.adjoint();
            out += ld * op * l - linalg::anticommutator(&(ld * l), op) * re(0.5);
        }
        out
    }

    /// Hamiltonian part only, `i[∂H/∂a, O]` style terms for derivatives.
    fn commutator_term(h: &Mat3, op: &Mat3) -> Mat3 {
        commutator(h, op) * c(0.0, 1.0)
    }
}

/// Generator for physical (mutually conjugate) field amplitudes.
pub fn build_generator(params: &PhysicalParams, a1: C64, a2: C64) -> LindbladGenerator {
    build_generator_split(params, [a1, a1.conj(), a2, a2.conj()])
}

/// Generator with the amplitudes `[a1, a1*, a2, a2*]` treated as independent
/// variables. The Hamiltonian is Hermitian only when they are conjugate.
///
/// In the frame rotating with both fields the bare energies are `−δL₁` for
/// `|0⟩` and `δL₂ − δL₁` for `|2⟩`, so the optical polarizations oscillate at
/// `+iδL` and the ground-state coherence at the two-photon detuning.
/// Optical coherences decay at `(Γ₁ + Γ₂)/2`, as fixed by the jump
/// operators; no separate phenomenological damping is added.
pub fn build_generator_split(params: &PhysicalParams, amps: [C64; 4]) -> LindbladGenerator {
    let d1 = params.pump.detuning;
    let d2 = params.probe.detuning;
    let g1 = params.pump.coupling;
    let g2 = params.probe.coupling;
    let hamiltonian = ket_bra(0, 0) * re(-d1)
        + ket_bra(2, 2) * re(d2 - d1)
        + (ket_bra(0, 1) * amps[0] + ket_bra(1, 0) * amps[1]) * re(g1)
        + (ket_bra(0, 2) * amps[2] + ket_bra(2, 0) * amps[3]) * re(g2);
    let mut jump_ops = Vec::with_capacity(3);
    jump_ops.push(ket_bra(1, 0) * re(params.pump.decay.sqrt()));
    jump_ops.push(ket_bra(2, 0) * re(params.probe.decay.sqrt()));
    if params.ground_dephasing > 0.0 {
        let z = ket_bra(1, 1) - ket_bra(2, 2);
        jump_ops.push(z * re((0.5 * params.ground_dephasing).sqrt()));
    }
    LindbladGenerator { hamiltonian, jump_ops }
}

fn field_amplitudes(x: &StateVector) -> [C64; 4] {
    [x[idx::A1], x[idx::A1D], x[idx::A2], x[idx::A2D]]
}

/// `dx/dt` of the mean-field equations.
pub fn drift(params: &PhysicalParams, x: &StateVector) -> StateVector {
    let generator = build_generator_split(params, field_amplitudes(x));
    let r = x.collective_density(params.atoms);
    let mut f = CVector::zeros();
    for mu in 0..idx::ATOMIC {
        f[mu] = (r * generator.adjoint(&atomic_operator(mu))).trace();
    }
    let half = 0.5 * params.cavity_linewidth;
    let input = params.input_coupling();
    for field in Field::BOTH {
        let fp = params.field(field);
        let a = field.amplitude();
        let ad = field.amplitude_conj();
        let s = field.polarization();
        let couple = fp.coupling / params.round_trip;
        f[a] = -c(half, fp.cavity_detuning) * x[a] - c(0.0, couple) * x[s] + fp.drive * input;
        f[ad] = -c(half, -fp.cavity_detuning) * x[ad] + c(0.0, couple) * x[s + 1] + fp.drive.conj() * input;
    }
    StateVector(f)
}

/// Analytic Jacobian `∂f_μ/∂x_ν` of [`drift`], with every variable (including
/// conjugate partners) treated as independent.
pub fn jacobian(params: &PhysicalParams, x: &StateVector) -> CMatrix {
    let generator = build_generator_split(params, field_amplitudes(x));
    let r = x.collective_density(params.atoms);
    let g1 = params.pump.coupling;
    let g2 = params.probe.coupling;
    let field_derivatives = [
        (idx::A1, ket_bra(0, 1) * re(g1)),
        (idx::A1D, ket_bra(1, 0) * re(g1)),
        (idx::A2, ket_bra(0, 2) * re(g2)),
        (idx::A2D, ket_bra(2, 0) * re(g2)),
    ];
    let mut j = CMatrix::zeros();
    for mu in 0..idx::ATOMIC {
        let op = atomic_operator(mu);
        let image = generator.adjoint(&op);
        for nu in 0..idx::ATOMIC {
            j[(mu, nu)] = (density_direction(nu) * image).trace();
        }
        for (col, dh) in &field_derivatives {
            j[(mu, *col)] = (r * LindbladGenerator::commutator_term(dh, &op)).trace();
        }
    }
    let half = 0.5 * params.cavity_linewidth;
    for field in Field::BOTH {
        let fp = params.field(field);
        let a = field.amplitude();
        let ad = field.amplitude_conj();
        let s = field.polarization();
        let couple = fp.coupling / params.round_trip;
        j[(a, a)] = -c(half, fp.cavity_detuning);
        j[(a, s)] = c(0.0, -couple);
        j[(ad, ad)] = -c(half, -fp.cavity_detuning);
        j[(ad, s + 1)] = c(0.0, couple);
    }
    j
}
