//! Fixed points of the mean-field drift.
//!
//! The solver works on the reduced real representation of the state: twelve
//! real unknowns (real and imaginary parts of `s1m, s2m, s12, a1, a2` plus the
//! two inversions), from which the conjugate partners are rebuilt exactly.
//! Damped Newton with the analytic Jacobian does the root finding. The branch
//! is selected by ramping the couplings from zero in equal steps starting from
//! the empty-cavity state with every atom in `|1⟩`; multi-start seeds are only
//! tried when the ramp fails. Far-detuned optical pumping can leave every seed
//! outside Newton's basin, so the last resort lets the drift itself relax the
//! empty-cavity state and restarts Newton along the way.

use alloc::vec::Vec;

use nalgebra::DMatrix;
#[allow(unused_imports)] // shadowed by inherent methods whenever std is linked
use num_traits::Float;
use thiserror::Error;

use crate::error::Error;
use crate::linalg::{self, c, CVector, C64, DIM, PARTNER};
use crate::model::{self, idx, Field, ModelError, PhysicalParams, StateVector};
use crate::ode::{self, Tolerance};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("Newton iteration did not converge (residual {residual:e} after {iterations} steps)")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("every located fixed point is dynamically unstable (min Re eig(A) = {min_decay_rate:e})")]
    UnstableOnly { min_decay_rate: f64 },
    #[error("detuning grid must be strictly monotone")]
    NonMonotoneGrid,
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub max_iterations: usize,
    /// Accepted bound on the scaled residual, see [`scaled_residual`].
    pub tolerance: f64,
    pub ramp_steps: usize,
    /// Relaxation fallback: at most this many stretches of `100/Γ` of time
    /// integration, with a Newton attempt after each.
    pub relaxation_chunks: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { max_iterations: 200, tolerance: 1e-12, ramp_steps: 10, relaxation_chunks: 100 }
    }
}

/// A converged fixed point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyState {
    pub x: StateVector,
    /// [`scaled_residual`] of the drift at `x`.
    pub residual: f64,
    /// All eigenvalues of the drift matrix have positive real part.
    pub stable: bool,
    /// Smallest real part of the drift-matrix spectrum.
    pub min_decay_rate: f64,
}

impl SteadyState {
    /// Population of the excited state, `N₀`.
    pub fn excited_population(&self, atoms: f64) -> f64 {
        self.x.populations(atoms)[0]
    }

    /// Mean output amplitude `√(γτ) a − α_in`.
    pub fn output_amplitude(&self, params: &PhysicalParams, f: Field) -> C64 {
        self.x.amplitude(f) * params.output_coupling() - params.field(f).drive
    }

    /// Intracavity photon flux `|a|²`.
    pub fn intracavity_intensity(&self, f: Field) -> f64 {
        self.x.amplitude(f).norm_sqr()
    }
}

/// `‖f(x)‖∞` with the atomic rows expressed per atom (divided by `N`), so the
/// bound is independent of the atom number and reachable in double precision.
pub fn scaled_residual(params: &PhysicalParams, f: &StateVector) -> f64 {
    let n = params.atoms.max(1.0);
    (0..DIM).map(|i| if i < idx::ATOMIC { f[i].norm() / n } else { f[i].norm() }).fold(0.0, f64::max)
}

/// (state index, imaginary part?) for each reduced coordinate.
const REDUCED: [(usize, bool); DIM] = [
    (idx::S1M, false),
    (idx::S1M, true),
    (idx::S2M, false),
    (idx::S2M, true),
    (idx::S12, false),
    (idx::S12, true),
    (idx::W1, false),
    (idx::W2, false),
    (idx::A1, false),
    (idx::A1, true),
    (idx::A2, false),
    (idx::A2, true),
];

fn to_reduced(x: &StateVector) -> [f64; DIM] {
    core::array::from_fn(|k| {
        let (i, imag) = REDUCED[k];
        if imag {
            x[i].im
        } else {
            x[i].re
        }
    })
}

fn from_reduced(u: &[f64; DIM]) -> StateVector {
    let mut x = CVector::zeros();
    for (k, &(i, imag)) in REDUCED.iter().enumerate() {
        if imag {
            x[i].im = u[k];
        } else {
            x[i].re = u[k];
        }
    }
    for (i, &p) in PARTNER.iter().enumerate() {
        if p > i {
            x[p] = x[i].conj();
        }
    }
    StateVector(x)
}

fn reduced_jacobian(params: &PhysicalParams, x: &StateVector) -> DMatrix<f64> {
    let j = model::jacobian(params, x);
    let mut out = DMatrix::zeros(DIM, DIM);
    for (col, &(i, imag)) in REDUCED.iter().enumerate() {
        let p = PARTNER[i];
        let column: CVector = if p == i {
            j.column(i).into_owned()
        } else if imag {
            (j.column(i) - j.column(p)) * c(0.0, 1.0)
        } else {
            j.column(i) + j.column(p)
        };
        for (row, &(r, rimag)) in REDUCED.iter().enumerate() {
            out[(row, col)] = if rimag { column[r].im } else { column[r].re };
        }
    }
    out
}

fn merit(params: &PhysicalParams, f: &StateVector) -> f64 {
    let n = params.atoms.max(1.0);
    (0..DIM).map(|i| if i < idx::ATOMIC { f[i].norm_sqr() / (n * n) } else { f[i].norm_sqr() }).sum::<f64>().sqrt()
}

/// Damped Newton from `guess`. Iterates until the residual stops decreasing
/// and then checks it against `opts.tolerance`.
pub fn newton(
    params: &PhysicalParams,
    guess: &StateVector,
    opts: &SolverOptions,
) -> Result<(StateVector, f64), SolveError> {
    let mut u = to_reduced(guess);
    let mut x = from_reduced(&u);
    let mut f = model::drift(params, &x);
    let mut m = merit(params, &f);
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        if scaled_residual(params, &f) < 1e-3 * opts.tolerance {
            break;
        }
        iterations += 1;
        let rhs: Vec<f64> = REDUCED.iter().map(|&(i, imag)| if imag { -f[i].im } else { -f[i].re }).collect();
        let Ok(step) = linalg::solve_real(reduced_jacobian(params, &x), &rhs) else {
            break;
        };
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial: [f64; DIM] = core::array::from_fn(|k| u[k] + lambda * step[k]);
            let xt = from_reduced(&trial);
            let ft = model::drift(params, &xt);
            let mt = merit(params, &ft);
            if mt.is_finite() && mt < (1.0 - 1e-4 * lambda) * m {
                u = trial;
                x = xt;
                f = ft;
                m = mt;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let residual = scaled_residual(params, &f);
    if residual < opts.tolerance {
        Ok((x, residual))
    } else {
        Err(SolveError::NoConvergence { iterations, residual })
    }
}

fn is_physical(params: &PhysicalParams, x: &StateVector) -> bool {
    let slack = 1e-9 * params.atoms;
    x.populations(params.atoms).iter().all(|&p| p >= -slack && p <= params.atoms + slack)
}

/// Eigenvalues with `|Re λ|` below this are treated as marginal rather than
/// unstable. Uncoupled atoms have exactly-zero modes (ground populations).
pub const MARGINAL: f64 = 1e-10;

impl SteadyState {
    /// Stable, or only marginally stable.
    pub fn is_acceptable(&self) -> bool {
        self.min_decay_rate > -MARGINAL
    }
}

fn finish(params: &PhysicalParams, x: StateVector, residual: f64) -> SteadyState {
    let a = -model::jacobian(params, &x);
    let min_decay_rate = linalg::min_real_eigenvalue(&a).unwrap_or(f64::NAN);
    SteadyState { x, residual, stable: min_decay_rate > MARGINAL, min_decay_rate }
}

/// Starting points: every atom in `|1⟩`, every atom in `|2⟩`, equal mixture.
fn seeds(params: &PhysicalParams) -> [StateVector; 3] {
    let a1 = params.empty_cavity_amplitude(Field::Pump);
    let a2 = params.empty_cavity_amplitude(Field::Probe);
    let n = params.atoms;
    [
        StateVector::ground(n, 1, a1, a2),
        StateVector::ground(n, 2, a1, a2),
        StateVector::from_populations([0.0, 0.5 * n, 0.5 * n], a1, a2),
    ]
}

/// Newton along a coupling ramp `g → g·s`, `s` going from `from` to `to`,
/// bisecting steps that fail.
fn ramp_segment(
    params: &PhysicalParams,
    x: StateVector,
    from: f64,
    to: f64,
    depth: usize,
    opts: &SolverOptions,
) -> Result<(StateVector, f64), SolveError> {
    let target = params.with_couplings_scaled(to);
    match newton(&target, &x, opts) {
        Ok((y, r)) if is_physical(params, &y) => Ok((y, r)),
        Ok((_, r)) | Err(SolveError::NoConvergence { residual: r, .. }) if depth == 0 => {
            Err(SolveError::NoConvergence { iterations: opts.max_iterations, residual: r })
        }
        Err(e) if depth == 0 => Err(e),
        _ => {
            let mid = 0.5 * (from + to);
            let (y, _) = ramp_segment(params, x, from, mid, depth - 1, opts)?;
            ramp_segment(params, y, mid, to, depth - 1, opts)
        }
    }
}

fn ramp(params: &PhysicalParams, opts: &SolverOptions) -> Result<(StateVector, f64), SolveError> {
    let steps = opts.ramp_steps.max(1);
    let mut x = seeds(params)[0];
    let mut r = f64::INFINITY;
    for k in 1..=steps {
        let from = (k - 1) as f64 / steps as f64;
        let to = k as f64 / steps as f64;
        (x, r) = ramp_segment(params, x, from, to, 8, opts)?;
    }
    Ok((x, r))
}

/// Integrates the drift from the empty-cavity state, trying Newton after
/// every stretch.
fn relax(params: &PhysicalParams, opts: &SolverOptions) -> Result<(StateVector, f64), SolveError> {
    let chunk = 100.0 / params.total_decay();
    let tol = Tolerance { rtol: 1e-8, atol: 1e-8, max_steps: 1_000_000 };
    let mut x = seeds(params)[0];
    let mut last = SolveError::NoConvergence { iterations: 0, residual: f64::INFINITY };
    for _ in 0..opts.relaxation_chunks {
        x = match ode::integrate(|y| model::drift(params, &StateVector(*y)).0, x.0, chunk, tol) {
            Ok(y) => StateVector(y),
            Err(_) => break,
        };
        match newton(params, &x, opts) {
            Ok((y, r)) if is_physical(params, &y) => return Ok((y, r)),
            Ok((_, r)) => last = SolveError::NoConvergence { iterations: 0, residual: r },
            Err(e) => last = e,
        }
    }
    Err(last)
}

/// Physical steady state at `params`.
pub fn solve(params: &PhysicalParams) -> Result<SteadyState, SolveError> {
    solve_with(params, &SolverOptions::default())
}

pub fn solve_with(params: &PhysicalParams, opts: &SolverOptions) -> Result<SteadyState, SolveError> {
    params.validate()?;
    let mut marginal: Option<SteadyState> = None;
    let mut unstable: Option<SteadyState> = None;
    let mut last = SolveError::NoConvergence { iterations: 0, residual: f64::INFINITY };
    let ramped = ramp(params, opts).map(|(x, r)| finish(params, x, r));
    let cold = seeds(params).into_iter().map(|seed| {
        newton(params, &seed, opts).and_then(|(x, r)| {
            if is_physical(params, &x) {
                Ok(finish(params, x, r))
            } else {
                Err(SolveError::NoConvergence { iterations: 0, residual: r })
            }
        })
    });
    let relaxed = core::iter::once_with(|| relax(params, opts).map(|(x, r)| finish(params, x, r)));
    for candidate in core::iter::once(ramped).chain(cold).chain(relaxed) {
        match candidate {
            Ok(ss) if ss.stable => return Ok(ss),
            Ok(ss) if ss.is_acceptable() => {
                marginal.get_or_insert(ss);
            }
            Ok(ss) => {
                unstable.get_or_insert(ss);
            }
            Err(e) => last = e,
        }
        if marginal.is_some() {
            break;
        }
    }
    match (marginal, unstable) {
        (Some(ss), _) => Ok(ss),
        (None, Some(ss)) => Err(SolveError::UnstableOnly { min_decay_rate: ss.min_decay_rate }),
        (None, None) => Err(last),
    }
}

/// Steady states along a probe-detuning grid, each point seeded from the
/// previous one. Points where the seeded Newton fails fall back to a cold
/// [`solve`].
pub fn continuation_scan(params: &PhysicalParams, grid: &[f64]) -> Result<Vec<SteadyState>, Error> {
    continuation_scan_with(params, grid, &SolverOptions::default())
}

pub fn continuation_scan_with(
    params: &PhysicalParams,
    grid: &[f64],
    opts: &SolverOptions,
) -> Result<Vec<SteadyState>, Error> {
    check_monotone(grid)?;
    params.validate().map_err(SolveError::from)?;
    let mut out: Vec<SteadyState> = Vec::with_capacity(grid.len());
    for (i, &delta) in grid.iter().enumerate() {
        let p = params.with_probe_detuning(delta);
        let warm = out.last().and_then(|prev| match newton(&p, &prev.x, opts) {
            Ok((x, r)) if is_physical(&p, &x) => Some(finish(&p, x, r)).filter(|s| s.is_acceptable()),
            _ => None,
        });
        let ss = match warm {
            Some(ss) => ss,
            None => solve_with(&p, opts).map_err(|e| Error::at(i, e))?,
        };
        out.push(ss);
    }
    Ok(out)
}

pub(crate) fn check_monotone(grid: &[f64]) -> Result<(), SolveError> {
    let up = grid.windows(2).all(|w| w[1] > w[0]);
    let down = grid.windows(2).all(|w| w[1] < w[0]);
    if grid.iter().all(|v| v.is_finite()) && (up || down) {
        Ok(())
    } else {
        Err(SolveError::NonMonotoneGrid)
    }
}
