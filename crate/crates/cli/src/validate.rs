//! Self-test suite run by `eit-noise validate`.
//!
//! `quick` evaluates the deterministic identities of every stage; `full`
//! adds the stochastic trajectory comparisons.

use std::fmt;
use std::time::Instant;

use eit_noise_core::fluctuations::{self, DriftMatrix};
use eit_noise_core::linalg::{self, frobenius, max_abs, Mat3, PARTNER};
use eit_noise_core::model::{self, atomic_operator, idx, Field, FieldParams, PhysicalParams, StateVector};
use eit_noise_core::ode::{self, Tolerance};
use eit_noise_core::oracle::{self, LangevinSystem, OracleError, TrajectoryConfig};
use eit_noise_core::spectra::{self, SpectraOptions};
use eit_noise_core::steady_state::{self, SteadyState};
use eit_noise_core::{CMatrix, Error, C64};
use nalgebra::SMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Level {
    Quick,
    Full,
}

/// Deliberate defects for negative-control runs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Fixture {
    /// Use `+A` where the fluctuation equations need `−A`.
    pub corrupt_drift_sign: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    AtMost(f64),
    AtLeast(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    /// NaN when the check could not be evaluated; see `note`.
    pub measured: f64,
    pub bound: Bound,
    pub note: Option<String>,
    pub seconds: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        match self.bound {
            Bound::AtMost(t) => self.measured <= t,
            Bound::AtLeast(t) => self.measured >= t,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        let bound = match self.bound {
            Bound::AtMost(t) => format!("<= {t:e}"),
            Bound::AtLeast(t) => format!(">= {t:e}"),
        };
        write!(f, "{verdict}  {:<44} {:>12.4e} (required {bound}, {:.2} s)", self.name, self.measured, self.seconds)?;
        if let Some(note) = &self.note {
            write!(f, "  [{note}]")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed())
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        let failed = self.failures().count();
        write!(f, "{} checks, {} failed", self.checks.len(), failed)
    }
}

fn evaluate(name: &'static str, bound: Bound, f: impl FnOnce() -> Result<f64, String>) -> Check {
    let start = Instant::now();
    let (measured, note) = match f() {
        Ok(v) => (v, None),
        Err(e) => (f64::NAN, Some(e)),
    };
    Check { name, measured, bound, note, seconds: start.elapsed().as_secs_f64() }
}

pub fn run_validate(level: Level, fixture: Fixture, threads: Option<usize>) -> Report {
    let mut checks = vec![
        evaluate("generator preserves the trace", Bound::AtMost(1e-12), generator_trace),
        evaluate("drift vs density-matrix Liouvillian", Bound::AtMost(1e-12), drift_vs_liouvillian),
        evaluate("mean field vs master equation, frozen fields", Bound::AtMost(1e-10), frozen_field_evolution),
        evaluate("Jacobian vs central differences", Bound::AtMost(1e-6), jacobian_vs_differences),
        evaluate("steady-state residual", Bound::AtMost(1e-12), steady_state_residual),
        evaluate("dark-state excited fraction", Bound::AtMost(1e-6), dark_state),
        evaluate("EIT transmission peak ratio", Bound::AtLeast(1.1), transmission_peak),
        evaluate("drift and noise conjugation symmetry", Bound::AtMost(1e-12), conjugation_symmetry),
        evaluate("Lyapunov integral identity", Bound::AtMost(1e-6), || lyapunov_identity(fixture)),
        evaluate("atomic covariance vs density-matrix moments", Bound::AtMost(1e-6), || atomic_covariance(fixture)),
        evaluate("output field commutators", Bound::AtMost(1e-9), || output_commutators(fixture)),
        evaluate("sum/difference splitting identity", Bound::AtMost(1e-12), || splitting_identity(fixture)),
        evaluate("empty cavity is shot-noise limited", Bound::AtMost(1e-10), empty_cavity),
    ];
    if level == Level::Full {
        checks.push(evaluate("Ornstein-Uhlenbeck trajectory PSD", Bound::AtMost(0.05), || ornstein_uhlenbeck(threads)));
        checks.push(evaluate("trajectory PSD vs S(omega), PSD surrogate", Bound::AtMost(0.05), || {
            let errors = surrogate_psd_errors(&SURROGATE_BUDGET, &surrogate_frequencies(), threads)
                .map_err(|e| e.to_string())?;
            Ok(errors.into_iter().fold(0.0, f64::max))
        }));
    }
    Report { checks }
}

pub fn fig1a() -> PhysicalParams {
    RunConfig::preset("fig1a").and_then(|c| Ok(c.params.nondimensionalize()?)).expect("bundled preset is valid")
}

fn solve(p: &PhysicalParams) -> Result<SteadyState, String> {
    steady_state::solve(p).map_err(|e| e.to_string())
}

fn linearize(p: &PhysicalParams, ss: &SteadyState, fixture: Fixture) -> Result<(DriftMatrix, CMatrix), String> {
    let (mut a, noise) = spectra::linearization(p, ss, &SpectraOptions::default()).map_err(|e| e.to_string())?;
    if fixture.corrupt_drift_sign {
        a.0 = -a.0;
    }
    Ok((a, noise))
}

/// The fixed-seed generator behind every sampled check.
pub fn rng() -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0x5eed)
}

fn complex(rng: &mut ChaCha8Rng, scale: f64) -> C64 {
    C64::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale))
}

/// Random parameters with detunings within ±5Γ and moderate saturation.
pub fn random_params(rng: &mut ChaCha8Rng) -> PhysicalParams {
    let (atoms, round_trip): (f64, f64) = (1e4, 1e-3);
    let g = |collective: f64| collective * (round_trip / atoms).sqrt();
    let split = rng.random_range(0.2..0.8);
    let mut p = PhysicalParams {
        pump: FieldParams::coherent(g(rng.random_range(0.5..3.0)), split, C64::new(rng.random_range(1.0..15.0), 0.0)),
        probe: FieldParams::coherent(
            g(rng.random_range(0.5..3.0)),
            1.0 - split,
            C64::new(rng.random_range(1.0..15.0), 0.0),
        ),
        ground_dephasing: rng.random_range(0.0..0.2),
        cavity_linewidth: rng.random_range(0.05..0.3),
        round_trip,
        atoms,
    };
    p.pump.detuning = rng.random_range(-5.0..5.0);
    p.probe.detuning = rng.random_range(-5.0..5.0);
    p.pump.cavity_detuning = rng.random_range(-1.0..1.0);
    p.probe.cavity_detuning = rng.random_range(-1.0..1.0);
    p
}

/// `N` times a random density matrix, with random field amplitudes.
pub fn random_state(rng: &mut ChaCha8Rng, atoms: f64) -> StateVector {
    let m = Mat3::from_fn(|_, _| complex(rng, 1.0));
    let rho = m * m.adjoint();
    let rho = rho / rho.trace() * C64::new(atoms, 0.0);
    let mut x = StateVector::from_populations([0.0; 3], complex(rng, 30.0), complex(rng, 30.0));
    for (mu, v) in oracle::atomic_variables(&rho).into_iter().enumerate() {
        x.0[mu] = v;
    }
    x
}

fn generator_trace() -> Result<f64, String> {
    let mut rng = rng();
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let p = random_params(&mut rng);
        let gen = model::build_generator(&p, complex(&mut rng, 30.0), complex(&mut rng, 30.0));
        let image = gen.adjoint(&Mat3::identity());
        worst = worst.max(image.iter().map(|z| z.norm()).fold(0.0, f64::max));
    }
    Ok(worst)
}

fn drift_vs_liouvillian() -> Result<f64, String> {
    let mut rng = rng();
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let p = random_params(&mut rng);
        let x = random_state(&mut rng, p.atoms);
        let f = model::drift(&p, &x);
        let rates = oracle::atomic_rates(&p, &x);
        let scale = rates.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for mu in 0..idx::ATOMIC {
            worst = worst.max((f[mu] - rates[mu]).norm() / scale);
        }
    }
    Ok(worst)
}

fn frozen_field_evolution() -> Result<f64, String> {
    let mut rng = rng();
    let mut worst: f64 = 0.0;
    let tol = Tolerance { rtol: 1e-12, atol: 1e-10, ..Tolerance::default() };
    for _ in 0..4 {
        let p = random_params(&mut rng);
        let x = random_state(&mut rng, p.atoms);
        let t = rng.random_range(0.5..20.0);
        let mean_field = ode::integrate(
            |y| {
                let mut f = model::drift(&p, &StateVector(*y)).0;
                for i in idx::ATOMIC..linalg::DIM {
                    f[i] = C64::new(0.0, 0.0);
                }
                f
            },
            x.0,
            t,
            tol,
        )
        .map_err(|e| e.to_string())?;
        let master = oracle::integrate_atomic_state(&p, &x, t).map_err(|e| e.to_string())?;
        for mu in 0..idx::ATOMIC {
            worst = worst.max((mean_field[mu] - master[mu]).norm() / p.atoms);
        }
    }
    Ok(worst)
}

fn jacobian_vs_differences() -> Result<f64, String> {
    let mut rng = rng();
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let p = random_params(&mut rng);
        let x = random_state(&mut rng, p.atoms);
        let fd = finite_difference_jacobian(&p, &x, 1e-6);
        worst = worst.max(max_abs(&(model::jacobian(&p, &x) - fd)));
    }
    Ok(worst)
}

/// Central differences with step `rel·max(1, |x_j|)`; atomic variables are
/// O(N), so an absolute step would drown in cancellation.
pub fn finite_difference_jacobian(p: &PhysicalParams, x: &StateVector, rel: f64) -> CMatrix {
    let mut j = CMatrix::zeros();
    for col in 0..linalg::DIM {
        let h = rel * x[col].norm().max(1.0);
        let mut plus = *x;
        let mut minus = *x;
        plus.0[col] += C64::new(h, 0.0);
        minus.0[col] -= C64::new(h, 0.0);
        let diff = (model::drift(p, &plus).0 - model::drift(p, &minus).0) / C64::new(2.0 * h, 0.0);
        j.set_column(col, &diff);
    }
    j
}

fn steady_state_residual() -> Result<f64, String> {
    Ok(solve(&fig1a())?.residual)
}

fn dark_state() -> Result<f64, String> {
    let mut p = fig1a();
    p.ground_dephasing = 0.0;
    let ss = solve(&p)?;
    Ok(ss.excited_population(p.atoms) / p.atoms)
}

fn transmission_peak() -> Result<f64, String> {
    let states = steady_state::continuation_scan(&fig1a(), &[-0.5, 0.0, 0.5]).map_err(|e| e.to_string())?;
    let centre = states[1].intracavity_intensity(Field::Probe);
    let side = states[0].intracavity_intensity(Field::Probe).max(states[2].intracavity_intensity(Field::Probe));
    Ok(centre / side)
}

fn conjugation_symmetry() -> Result<f64, String> {
    let p = fig1a().with_probe_detuning(0.3);
    let ss = solve(&p)?;
    let a = fluctuations::drift_matrix(&p, &ss);
    let d = fluctuations::diffusion_matrix(&p, &ss).map_err(|e| e.to_string())?;
    Ok((a.conjugation_defect() / max_abs(&a.0)).max(d.conjugation_defect() / max_abs(&d.correlation())))
}

fn lyapunov_identity(fixture: Fixture) -> Result<f64, String> {
    let p = fig1a();
    let (a, noise) = linearize(&p, &solve(&p)?, fixture)?;
    spectra::lyapunov_identity_defect(&a, &noise).map_err(|e| e.to_string())
}

/// With the fields frozen the atoms are independent, so the collective
/// covariance is `N` times the single-atom covariance of the steady density
/// matrix.
fn atomic_covariance(fixture: Fixture) -> Result<f64, String> {
    let p = fig1a().with_probe_detuning(0.3);
    let ss = solve(&p)?;
    let (a, noise) = linearize(&p, &ss, fixture)?;
    let mut frozen = CMatrix::identity();
    let mut atomic_noise = CMatrix::zeros();
    for r in 0..idx::ATOMIC {
        for c in 0..idx::ATOMIC {
            frozen[(r, c)] = a.0[(r, c)];
            atomic_noise[(r, c)] = noise[(r, c)];
        }
    }
    let sigma = spectra::lyapunov_covariance(&DriftMatrix(frozen), &atomic_noise).map_err(|e| e.to_string())?;

    let ground = oracle::density_from_state(&StateVector::ground(1.0, 1, C64::default(), C64::default()), 1.0);
    let rho = oracle::integrate_density_matrix(
        &p,
        ss.x.amplitude(Field::Pump),
        ss.x.amplitude(Field::Probe),
        &ground,
        3000.0,
    )
    .map_err(|e| e.to_string())?;
    let mean = |op: &Mat3| (rho * op).trace();
    let mut err = CMatrix::zeros();
    let mut expected = CMatrix::zeros();
    for mu in 0..idx::ATOMIC {
        for nu in 0..idx::ATOMIC {
            let o_mu = atomic_operator(mu);
            let o_nu_dag = atomic_operator(PARTNER[nu]);
            expected[(mu, nu)] = (mean(&(o_mu * o_nu_dag)) - mean(&o_mu) * mean(&o_nu_dag)) * p.atoms;
            err[(mu, nu)] = sigma[(mu, nu)] - expected[(mu, nu)];
        }
    }
    Ok(frobenius(&err) / frobenius(&expected))
}

fn output_commutators(fixture: Fixture) -> Result<f64, String> {
    let p = fig1a().with_probe_detuning(0.3);
    let (a, noise) = linearize(&p, &solve(&p)?, fixture)?;
    let mut worst: f64 = 0.0;
    for omega in [0.05, 0.5, 2.0] {
        let at = |w: f64| {
            spectra::spectral_matrix_from_noise(&a, &noise, w)
                .map(|s| spectra::output_spectral_matrix(&s, &p))
                .map_err(|e| e.to_string())
        };
        let (plus, minus) = (at(omega)?, at(-omega)?);
        for k in 0..2 {
            let commutator = plus[(2 * k, 2 * k)] - minus[(2 * k + 1, 2 * k + 1)];
            worst = worst.max((commutator - C64::new(1.0, 0.0)).norm());
        }
    }
    Ok(worst)
}

fn splitting_identity(fixture: Fixture) -> Result<f64, String> {
    let p = fig1a().with_probe_detuning(0.3);
    let ss = solve(&p)?;
    let (a, noise) = linearize(&p, &ss, fixture)?;
    let s = spectra::spectral_matrix_from_noise(&a, &noise, 1.0 / (6.0 * std::f64::consts::PI))
        .map_err(|e| e.to_string())?;
    let r = spectra::correlation_record(&s, &p, &ss).map_err(|e| e.to_string())?;
    let intensities = Field::BOTH.map(|f| ss.output_amplitude(&p, f).norm_sqr());
    Ok(r.splitting_defect(intensities) / r.s_sum.max(1.0))
}

fn empty_cavity() -> Result<f64, String> {
    let mut rng = rng();
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let mut p = fig1a();
        p.pump.coupling = 0.0;
        p.probe.coupling = 0.0;
        p.pump.cavity_detuning = rng.random_range(-3.0..3.0);
        p.probe.cavity_detuning = rng.random_range(-3.0..3.0);
        let omega = rng.random_range(0.01..5.0);
        let ss = solve(&p)?;
        let r = spectra::record_at(&p, &ss, omega, &SpectraOptions::default()).map_err(|e| e.to_string())?;
        for v in [r.s_pump, r.s_probe, r.s_sum, r.s_diff] {
            worst = worst.max((v - 1.0).abs());
        }
        worst = worst.max(r.correlation_2c.abs());
    }
    Ok(worst)
}

/// Averaged PSD over trajectories run on the worker pool. Trajectories are
/// reduced in index order, so the result equals [`oracle::simulate_psd`]
/// bit for bit whatever the number of workers.
pub fn parallel_psd<const D: usize>(
    system: &LangevinSystem<D>,
    cfg: &TrajectoryConfig,
    omegas: &[f64],
    threads: Option<usize>,
) -> Result<Vec<SMatrix<C64, D, D>>, Error> {
    cfg.validate(oracle::spectral_bound(&system.drift))?;
    let pool = crate::scan::thread_pool(threads)
        .map_err(|_| OracleError::InvalidConfig { reason: "cannot build the worker pool" })?;
    const BATCH: usize = 64;
    let mut total = vec![SMatrix::<C64, D, D>::zeros(); omegas.len()];
    for start in (0..cfg.n_trajectories).step_by(BATCH) {
        let end = (start + BATCH).min(cfg.n_trajectories);
        let batch: Vec<Result<Vec<SMatrix<C64, D, D>>, OracleError>> = pool.install(|| {
            (start..end).into_par_iter().map(|t| oracle::trajectory_periodograms(system, cfg, omegas, t)).collect()
        });
        for periodograms in batch {
            for (acc, m) in total.iter_mut().zip(periodograms?) {
                *acc += m;
            }
        }
    }
    Ok(oracle::finish_psd(total, cfg))
}

fn ornstein_uhlenbeck(threads: Option<usize>) -> Result<f64, String> {
    let one = SMatrix::<C64, 1, 1>::new(C64::new(1.0, 0.0));
    let system = LangevinSystem::new(one, one).with_initial_factor(one * C64::new(0.5f64.sqrt(), 0.0));
    let cfg = TrajectoryConfig { dt: 0.01, n_steps: 1 << 14, n_trajectories: 2000, seed: 11, segments: 4, burn_in: 0 };
    let omegas = [0.0, 1.0, 3.0];
    let psd = parallel_psd(&system, &cfg, &omegas, threads).map_err(|e| e.to_string())?;
    Ok(omegas
        .iter()
        .zip(&psd)
        .map(|(w, s)| {
            let exact = 1.0 / (1.0 + w * w);
            (s[(0, 0)].re - exact).abs() / exact
        })
        .fold(0.0, f64::max))
}

/// Budget of the surrogate-noise comparison at the fig1a working point.
pub const SURROGATE_BUDGET: TrajectoryConfig =
    TrajectoryConfig { dt: 0.005, n_steps: 60_000, n_trajectories: 2000, seed: 7, segments: 3, burn_in: 0 };

/// Ten analysis frequencies between the slow ground-coherence feature and
/// the first resonance of the drift matrix.
pub fn surrogate_frequencies() -> Vec<f64> {
    (0..10).map(|k| 0.6 + 0.3 * k as f64).collect()
}

/// Relative Frobenius error of the trajectory PSD against the analytic
/// spectral matrix at each frequency. The drift is the fig1a linearization
/// at two-photon resonance; the noise is the positive part of its physical
/// noise matrix, and trajectories start from the matching stationary state.
pub fn surrogate_psd_errors(cfg: &TrajectoryConfig, omegas: &[f64], threads: Option<usize>) -> Result<Vec<f64>, Error> {
    let p = fig1a();
    let ss = steady_state::solve(&p)?;
    let (a, noise) = spectra::linearization(&p, &ss, &SpectraOptions::default())?;
    let b = oracle::psd_factor(&noise);
    let surrogate = b * b.adjoint();
    let sigma = spectra::lyapunov_covariance(&a, &surrogate)?;
    let system = LangevinSystem::new(a.0, b).with_initial_factor(oracle::psd_factor(&sigma));
    let psd = parallel_psd(&system, cfg, omegas, threads)?;
    omegas
        .iter()
        .zip(&psd)
        .map(|(&w, estimate)| {
            let s = spectra::spectral_matrix_from_noise(&a, &surrogate, w)?.matrix;
            Ok(frobenius(&(estimate - s)) / frobenius(&s))
        })
        .collect()
}
