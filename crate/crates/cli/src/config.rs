//! Run configuration.
//!
//! A config is a flat text file of `key = value` lines with `#` comments.
//! Output files echo every key on `#@ key = value` header lines (CSV) or in
//! `metadata.config` (JSON), and both forms are accepted back as configs.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use eit_noise_core::model::{FieldParams, ModelError};
use eit_noise_core::{PhysicalParams, C64};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, found `{text}`")]
    Syntax { line: usize, text: String },
    #[error("unknown key `{key}`")]
    UnknownKey { key: String },
    #[error("`{key}` is set twice")]
    Duplicate { key: String },
    #[error("invalid value `{value}` for `{key}`: {reason}")]
    InvalidValue { key: String, value: String, reason: String },
    #[error("`{key}`: {reason}")]
    Invalid { key: &'static str, reason: &'static str },
    #[error("unknown preset `{name}` (available: {})", PRESETS.iter().map(|p| p.0).collect::<Vec<_>>().join(", "))]
    UnknownPreset { name: String },
    #[error("cannot read {}: {source}", path.display())]
    Read { path: PathBuf, source: std::io::Error },
    #[error("JSON metadata: {reason}")]
    Metadata { reason: String },
}

impl From<ModelError> for ConfigError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::InvalidParameter { name, reason } => ConfigError::Invalid { key: name, reason },
            ModelError::ZeroTotalDecay => {
                ConfigError::Invalid { key: "Gamma1", reason: "Gamma1 + Gamma2 must be positive" }
            }
        }
    }
}

/// Bundled configurations, addressable by name.
pub const PRESETS: [(&str, &str); 3] = [
    ("fig1a", include_str!("../configs/fig1a.conf")),
    ("fig1b", include_str!("../configs/fig1b.conf")),
    ("empty_cavity", include_str!("../configs/empty_cavity.conf")),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        })
    }
}

impl FromStr for OutputFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err("expected csv or json".into()),
        }
    }
}

/// Probe-detuning grid in units of Γ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanGrid {
    pub min: f64,
    pub max: f64,
    pub n_points: usize,
}

impl ScanGrid {
    pub fn points(&self) -> Vec<f64> {
        if self.n_points == 1 {
            return vec![self.min];
        }
        let last = (self.n_points - 1) as f64;
        (0..self.n_points).map(|k| self.min + (self.max - self.min) * k as f64 / last).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// As written in the config; the probe detuning is replaced by the grid.
    pub params: PhysicalParams,
    pub grid: ScanGrid,
    /// Analysis frequency in units of Γ.
    pub omega: f64,
    /// `None` writes to standard output.
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    pub include_diagnostics: bool,
    pub force_zero_coherence: bool,
    /// Recorded in the metadata; scans themselves draw no random numbers.
    pub seed: u64,
}

/// Every accepted key, in the order they are echoed.
pub const KEYS: [&str; 25] = [
    "g1",
    "g2",
    "Gamma1",
    "Gamma2",
    "gamma12",
    "gamma",
    "tau",
    "Delta_c1",
    "Delta_c2",
    "delta_L1",
    "N",
    "alpha1_in",
    "alpha2_in",
    "fano1_in",
    "fano2_in",
    "delta_L2_min",
    "delta_L2_max",
    "n_points",
    "omega",
    "seed",
    "force_zero_coherence",
    "include_diagnostics",
    "format",
    "out",
    "version",
];

impl Default for RunConfig {
    fn default() -> Self {
        let g = 3.0 * (1e-3f64 / 1e4).sqrt();
        RunConfig {
            params: PhysicalParams {
                pump: FieldParams::coherent(g, 0.5, C64::new(18.0, 0.0)),
                probe: FieldParams::coherent(g, 0.5, C64::new(6.0, 0.0)),
                ground_dephasing: 0.0,
                cavity_linewidth: 0.1,
                round_trip: 1e-3,
                atoms: 1e4,
            },
            grid: ScanGrid { min: -2.0, max: 2.0, n_points: 401 },
            omega: 1.0 / (6.0 * std::f64::consts::PI),
            out: None,
            format: OutputFormat::Csv,
            include_diagnostics: false,
            force_zero_coherence: false,
            seed: 0,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value.parse::<T>().map_err(|e| ConfigError::InvalidValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: e.to_string(),
    })
}

impl RunConfig {
    /// Defaults overridden by `text`, which may be a config file or a
    /// previous output file.
    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
        Self::from_text(&text)
    }

    pub fn preset(name: &str) -> Result<Self, ConfigError> {
        let text = PRESETS
            .iter()
            .find(|p| p.0 == name)
            .map(|p| p.1)
            .ok_or_else(|| ConfigError::UnknownPreset { name: name.to_string() })?;
        Self::from_text(text)
    }

    fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        if text.trim_start().starts_with('{') {
            return self.apply_json(text);
        }
        let echoed = text.lines().any(|l| l.starts_with("#@"));
        let mut seen: Vec<String> = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = if echoed {
                match raw.strip_prefix("#@") {
                    Some(rest) => rest,
                    None => continue,
                }
            } else {
                raw.split('#').next().unwrap_or("")
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) =
                line.split_once('=').ok_or_else(|| ConfigError::Syntax { line: n + 1, text: raw.to_string() })?;
            let key = key.trim();
            if seen.iter().any(|k| k == key) {
                return Err(ConfigError::Duplicate { key: key.to_string() });
            }
            seen.push(key.to_string());
            self.set(key, value.trim())?;
        }
        Ok(())
    }

    fn apply_json(&mut self, text: &str) -> Result<(), ConfigError> {
        let doc: serde_json::Value =
            serde_json::from_str(text).map_err(|e| ConfigError::Metadata { reason: e.to_string() })?;
        let config = doc
            .pointer("/metadata/config")
            .and_then(|v| v.as_object())
            .ok_or_else(|| ConfigError::Metadata { reason: "missing metadata.config object".into() })?;
        for (key, value) in config {
            let value =
                value.as_str().ok_or_else(|| ConfigError::Metadata { reason: format!("`{key}` is not a string") })?;
            self.set(key, value)?;
        }
        Ok(())
    }

    /// Applies `key=value` overrides, as given to `--set`.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<(), ConfigError> {
        for o in overrides {
            let o = o.as_ref();
            let (key, value) = o.split_once('=').ok_or_else(|| ConfigError::Syntax { line: 0, text: o.to_string() })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let p = &mut self.params;
        match key {
            "g1" => p.pump.coupling = parse(key, value)?,
            "g2" => p.probe.coupling = parse(key, value)?,
            "Gamma1" => p.pump.decay = parse(key, value)?,
            "Gamma2" => p.probe.decay = parse(key, value)?,
            "gamma12" => p.ground_dephasing = parse(key, value)?,
            "gamma" => p.cavity_linewidth = parse(key, value)?,
            "tau" => p.round_trip = parse(key, value)?,
            "Delta_c1" => p.pump.cavity_detuning = parse(key, value)?,
            "Delta_c2" => p.probe.cavity_detuning = parse(key, value)?,
            "delta_L1" => p.pump.detuning = parse(key, value)?,
            "N" => p.atoms = parse(key, value)?,
            "alpha1_in" => p.pump.drive = parse(key, value)?,
            "alpha2_in" => p.probe.drive = parse(key, value)?,
            "fano1_in" => p.pump.input_fano = parse(key, value)?,
            "fano2_in" => p.probe.input_fano = parse(key, value)?,
            "delta_L2_min" => self.grid.min = parse(key, value)?,
            "delta_L2_max" => self.grid.max = parse(key, value)?,
            "n_points" => self.grid.n_points = parse(key, value)?,
            "omega" => self.omega = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "force_zero_coherence" => self.force_zero_coherence = parse(key, value)?,
            "include_diagnostics" => self.include_diagnostics = parse(key, value)?,
            "format" => self.format = parse(key, value)?,
            "out" => self.out = (!value.is_empty()).then(|| PathBuf::from(value)),
            // informational: echoed into output, ignored on input
            "version" => {}
            _ => return Err(ConfigError::UnknownKey { key: key.to_string() }),
        }
        Ok(())
    }

    /// The value of `key` formatted so that [`set`](Self::set) reads it back
    /// exactly.
    pub fn get(&self, key: &str) -> Option<String> {
        let p = &self.params;
        Some(match key {
            "g1" => p.pump.coupling.to_string(),
            "g2" => p.probe.coupling.to_string(),
            "Gamma1" => p.pump.decay.to_string(),
            "Gamma2" => p.probe.decay.to_string(),
            "gamma12" => p.ground_dephasing.to_string(),
            "gamma" => p.cavity_linewidth.to_string(),
            "tau" => p.round_trip.to_string(),
            "Delta_c1" => p.pump.cavity_detuning.to_string(),
            "Delta_c2" => p.probe.cavity_detuning.to_string(),
            "delta_L1" => p.pump.detuning.to_string(),
            "N" => p.atoms.to_string(),
            "alpha1_in" => p.pump.drive.to_string(),
            "alpha2_in" => p.probe.drive.to_string(),
            "fano1_in" => p.pump.input_fano.to_string(),
            "fano2_in" => p.probe.input_fano.to_string(),
            "delta_L2_min" => self.grid.min.to_string(),
            "delta_L2_max" => self.grid.max.to_string(),
            "n_points" => self.grid.n_points.to_string(),
            "omega" => self.omega.to_string(),
            "seed" => self.seed.to_string(),
            "force_zero_coherence" => self.force_zero_coherence.to_string(),
            "include_diagnostics" => self.include_diagnostics.to_string(),
            "format" => self.format.to_string(),
            "out" => self.out.as_ref().map(|o| o.display().to_string()).unwrap_or_default(),
            "version" => env!("CARGO_PKG_VERSION").to_string(),
            _ => return None,
        })
    }

    /// `(key, value)` for every key in [`KEYS`].
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        KEYS.iter().map(|&k| (k, self.get(k).unwrap_or_default())).collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.params.validate()?;
        if self.grid.n_points == 0 {
            return Err(ConfigError::Invalid { key: "n_points", reason: "must be at least 1" });
        }
        if !self.grid.min.is_finite() {
            return Err(ConfigError::Invalid { key: "delta_L2_min", reason: "must be finite" });
        }
        if !self.grid.max.is_finite() {
            return Err(ConfigError::Invalid { key: "delta_L2_max", reason: "must be finite" });
        }
        if self.grid.min > self.grid.max {
            return Err(ConfigError::Invalid { key: "delta_L2_min", reason: "must not exceed delta_L2_max" });
        }
        if self.grid.n_points > 1 && self.grid.min == self.grid.max {
            return Err(ConfigError::Invalid {
                key: "n_points",
                reason: "a grid of several points needs delta_L2_min < delta_L2_max",
            });
        }
        if !self.omega.is_finite() {
            return Err(ConfigError::Invalid { key: "omega", reason: "must be finite" });
        }
        if self.include_diagnostics && self.out.is_none() {
            return Err(ConfigError::Invalid {
                key: "include_diagnostics",
                reason: "needs an output path for the diagnostics sidecar",
            });
        }
        Ok(())
    }
}
