//! Detuning scans: sequential continuation for the steady states, then the
//! spectra of every grid point in parallel.

use eit_noise_core::spectra::{self, SpectraOptions};
use eit_noise_core::steady_state::{self, SteadyState};
use eit_noise_core::{CMatrix, Error, PhysicalParams, SpectrumRecord};
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{ConfigError, RunConfig};

/// Linearization at one grid point, in units of Γ.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub drift: CMatrix,
    /// Adjoint-ordered noise matrix `N` entering `A Σ + Σ A† = N`.
    pub noise: CMatrix,
    pub covariance: CMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanPoint {
    pub record: SpectrumRecord,
    pub diagnostics: Option<Diagnostics>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanOutput {
    pub config: RunConfig,
    pub points: Vec<ScanPoint>,
}

#[derive(Debug)]
pub struct PointFailure {
    pub index: usize,
    pub delta_l2: f64,
    pub error: Error,
}

#[derive(Debug, Error)]
pub enum ScanError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{} grid point(s) failed:{}", failures.len(), report(failures))]
    Numerical { failures: Vec<PointFailure> },
    #[error("cannot build the worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

fn report(failures: &[PointFailure]) -> String {
    failures.iter().map(|f| format!("\n  point {} (delta_L2 = {}): {}", f.index, f.delta_l2, f.error)).collect()
}

/// Worker cap from `EIT_NOISE_THREADS`; `None` when unset.
pub fn threads_from_env() -> Result<Option<usize>, ConfigError> {
    match std::env::var("EIT_NOISE_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(ConfigError::InvalidValue {
                key: "EIT_NOISE_THREADS".into(),
                value: v,
                reason: "expected a positive integer".into(),
            }),
        },
    }
}

pub fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool, rayon::ThreadPoolBuildError> {
    rayon::ThreadPoolBuilder::new().num_threads(threads.unwrap_or(0)).build()
}

/// Runs the scan described by `config` on at most `threads` workers.
/// Results do not depend on the worker count.
pub fn run(config: &RunConfig, threads: Option<usize>) -> Result<ScanOutput, ScanError> {
    config.validate()?;
    let params = config.params.nondimensionalize().map_err(ConfigError::from)?;
    let grid = config.grid.points();
    let opts = SpectraOptions { force_zero_coherence: config.force_zero_coherence, ..SpectraOptions::default() };

    let states = steady_state::continuation_scan_with(&params, &grid, &opts.solver).map_err(|e| {
        let (index, error) = match e {
            Error::AtGridPoint { index, source } => (index, *source),
            other => (0, other),
        };
        ScanError::Numerical { failures: vec![PointFailure { index, delta_l2: grid[index], error }] }
    })?;

    let pool = thread_pool(threads)?;
    let results: Vec<Result<ScanPoint, Error>> = pool.install(|| {
        grid.par_iter()
            .zip(&states)
            .map(|(&delta, ss)| point(&params.with_probe_detuning(delta), ss, config, &opts))
            .collect()
    });

    let mut points = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (index, r) in results.into_iter().enumerate() {
        match r {
            Ok(p) => points.push(p),
            Err(error) => failures.push(PointFailure { index, delta_l2: grid[index], error }),
        }
    }
    if !failures.is_empty() {
        return Err(ScanError::Numerical { failures });
    }
    Ok(ScanOutput { config: config.clone(), points })
}

fn point(
    params: &PhysicalParams,
    ss: &SteadyState,
    config: &RunConfig,
    opts: &SpectraOptions,
) -> Result<ScanPoint, Error> {
    let (a, noise) = spectra::linearization(params, ss, opts)?;
    let s = spectra::spectral_matrix_from_noise(&a, &noise, config.omega)?;
    let record = spectra::correlation_record(&s, params, ss)?;
    let diagnostics = if config.include_diagnostics {
        let covariance = spectra::lyapunov_covariance(&a, &noise)?;
        Some(Diagnostics { drift: a.0, noise, covariance })
    } else {
        None
    };
    Ok(ScanPoint { record, diagnostics })
}
