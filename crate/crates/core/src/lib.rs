//! Linearized quantum-noise model for pump and probe fields interacting with
//! three-level Λ atoms inside a ring cavity.
//!
//! The pipeline is
//!
//! 1. [`model`]: physical parameters, the 12-component mean-field state and
//!    its nonlinear drift, generated from the single-atom Lindblad generator;
//! 2. [`steady_state`]: damped Newton with coupling ramps and detuning
//!    continuation for the fixed point of the drift;
//! 3. [`fluctuations`]: drift matrix `A` (`dδx/dt = −A δx + F`) and the
//!    Langevin-force correlation matrix from the generalized Einstein relation;
//! 4. [`spectra`]: the intracavity spectral matrix `S(Ω)`, input–output
//!    transformation, amplitude-quadrature noise, Fano factors and the
//!    pump–probe intensity correlation.
//!
//! [`oracle`] carries independent validators (a density-matrix integrator
//! and a stochastic trajectory simulator), and [`linalg`] the small dense
//! complex linear algebra shared by all stages.
//!
//! Everything runs in dimensionless units where the total excited-state
//! decay rate Γ = Γ₁ + Γ₂ equals one. The crate is `no_std` and only needs
//! an allocator.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod error;
pub mod fluctuations;
pub mod linalg;
pub mod model;
pub mod ode;
pub mod oracle;
pub mod quadrature;
pub mod spectra;
pub mod steady_state;

pub use error::Error;
pub use fluctuations::{DiffusionMatrix, DriftMatrix};
pub use linalg::{CMatrix, CVector, C64};
pub use model::{Field, FieldParams, LindbladGenerator, PhysicalParams, StateVector};
pub use spectra::{SpectralMatrix, SpectrumRecord};
pub use steady_state::SteadyState;
