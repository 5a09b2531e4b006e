//! Command-line front end for the EIT pump–probe noise model: detuning scans
//! written as CSV or JSON, and a self-validation suite.

pub mod config;
pub mod output;
pub mod scan;
pub mod validate;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use config::{ConfigError, OutputFormat, RunConfig};
use scan::{ScanError, ScanOutput};
use validate::{Fixture, Level, Report};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Scan(ScanError),
    #[error("cannot write {}: {source}", path.display())]
    Write { path: PathBuf, source: io::Error },
    #[error("{failed} validation check(s) failed")]
    Validation { failed: usize },
}

impl From<ScanError> for CliError {
    fn from(e: ScanError) -> Self {
        match e {
            ScanError::Config(c) => CliError::Config(c),
            other => CliError::Scan(other),
        }
    }
}

impl CliError {
    /// 1 configuration, 2 numerical failure, 3 failed validation.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Write { .. } => 1,
            CliError::Scan(_) => 2,
            CliError::Validation { .. } => 3,
        }
    }
}

fn write_to(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> Result<(), CliError> {
    let wrap = |source| CliError::Write { path: path.to_path_buf(), source };
    let mut w = BufWriter::new(File::create(path).map_err(wrap)?);
    f(&mut w).and_then(|_| w.flush()).map_err(wrap)
}

/// Path of the diagnostics sidecar written next to `out`.
pub fn diagnostics_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".diagnostics.json");
    PathBuf::from(name)
}

pub fn write_output(result: &ScanOutput) -> Result<(), CliError> {
    let render = |w: &mut dyn Write| match result.config.format {
        OutputFormat::Csv => output::write_csv(result, w),
        OutputFormat::Json => output::write_json(result, w),
    };
    match &result.config.out {
        Some(path) => {
            write_to(path, |w| render(w))?;
            if result.config.include_diagnostics {
                write_to(&diagnostics_path(path), |w| output::write_diagnostics(result, w))?;
            }
            Ok(())
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            render(&mut lock).map_err(|source| CliError::Write { path: "<stdout>".into(), source })
        }
    }
}

/// Runs the scan and writes its output files.
pub fn run_scan(config: &RunConfig) -> Result<ScanOutput, CliError> {
    let threads = scan::threads_from_env()?;
    let result = scan::run(config, threads)?;
    write_output(&result)?;
    Ok(result)
}

/// Runs the validation suite; the report is returned whether or not it passed.
pub fn run_validate(level: Level, fixture: Fixture) -> Result<Report, CliError> {
    let threads = scan::threads_from_env()?;
    Ok(validate::run_validate(level, fixture, threads))
}
