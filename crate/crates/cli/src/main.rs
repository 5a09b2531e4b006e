use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use eit_noise::config::{OutputFormat, RunConfig};
use eit_noise::validate::{Fixture, Level};
use eit_noise::CliError;

#[derive(Parser)]
#[command(name = "eit-noise", version, about = "Pump and probe noise spectra of Λ atoms in a ring cavity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scan the probe detuning and write one row of spectra per grid point.
    Scan {
        /// Config file, or an earlier output file to re-run.
        #[arg(long, required_unless_present = "preset", conflicts_with = "preset")]
        config: Option<PathBuf>,
        /// Bundled config: fig1a, fig1b or empty_cavity.
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_parser = clap::builder::ValueParser::new(|s: &str| s.parse::<OutputFormat>()))]
        format: Option<OutputFormat>,
        /// Override a config value; may be repeated.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Run the self-test suite.
    Validate {
        #[arg(long, value_enum, default_value_t = Level::Quick)]
        level: Level,
        /// Negative control: flip the sign of the drift matrix.
        #[arg(long, hide = true)]
        corrupt_drift_sign: bool,
    },
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Scan { config, preset, out, format, set } => {
            let mut cfg = match (config, preset) {
                (Some(path), _) => RunConfig::from_path(&path)?,
                (None, Some(name)) => RunConfig::preset(&name)?,
                (None, None) => unreachable!("clap requires one of --config and --preset"),
            };
            cfg.apply_overrides(&set)?;
            if let Some(out) = out {
                cfg.out = Some(out);
            }
            if let Some(format) = format {
                cfg.format = format;
            }
            eit_noise::run_scan(&cfg)?;
            Ok(())
        }
        Command::Validate { level, corrupt_drift_sign } => {
            let report = eit_noise::run_validate(level, Fixture { corrupt_drift_sign })?;
            println!("{report}");
            match report.failures().count() {
                0 => Ok(()),
                failed => Err(CliError::Validation { failed }),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
