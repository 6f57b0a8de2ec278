//! TOML run configuration.
//!
//! ```toml
//! seed = 1
//!
//! [chain]
//! L = 64
//! J = 1.0
//! Delta = 1.0
//! mu = -0.5
//! phi = "inf"
//! alpha = "inf"
//!
//! [bath]
//! T = 0.5
//! gamma = 0.01
//! delta = 1.0
//! lambda_c = 4000.0
//!
//! [protocol]
//! init = "thermal"
//! mu = { kind = "linear", initial = -5.0, final = 0.0, velocity = 1.0 }
//!
//! [solver]
//! rel_tol = 1e-9
//!
//! [output]
//! format = "csv"
//! samples = 101
//! ```
//!
//! Every section except `[chain]` and `[bath]` is optional. Unknown keys are
//! errors. Exponents accept `inf` either as a TOML float or as a string.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bath::{BathError, BathParams, Spectrum, SpectrumTable};
use crate::dynamics::InitialState;
use crate::model::{ChainParams, ExponentFamily};
use crate::protocols::{self, Evolution, Protocol, RunOptions, Sampling, Schedule};
use crate::solver::SolverOptions;

/// Environment variable naming the config file used when none is given.
pub const CONFIG_ENV: &str = "OPEN_KITAEV_CONFIG";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(String),
    #[error("[{section}] {message}")]
    Invalid { section: &'static str, message: String },
    #[error("bad override {0:?}: expected section.key=value")]
    Override(String),
}

fn invalid(section: &'static str, message: impl ToString) -> ConfigError {
    ConfigError::Invalid {
        section,
        message: message.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumKind {
    #[default]
    Ohmic,
    Flat,
    Tabulated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathConfig {
    #[serde(rename = "T")]
    pub temperature: f64,
    pub gamma: f64,
    #[serde(default = "one")]
    pub delta: f64,
    #[serde(default = "default_cutoff")]
    pub lambda_c: f64,
    #[serde(default)]
    pub spectrum: SpectrumKind,
    /// Two-column `lambda J(lambda)` file for the tabulated spectrum.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<PathBuf>,
}

fn one() -> f64 {
    1.0
}

fn default_cutoff() -> f64 {
    f64::INFINITY
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    #[serde(default = "default_init")]
    pub init: InitialState,
    /// Defaults to the constant `[chain] mu`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<Schedule>,
    /// Defaults to the constant `[bath] T`.
    #[serde(default, rename = "T", skip_serializing_if = "Option::is_none")]
    pub temperature: Option<Schedule>,
    /// Required unless a schedule is a linear ramp.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
    #[serde(default)]
    pub evolution: Evolution,
}

fn default_init() -> InitialState {
    InitialState::Thermal(None)
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            init: default_init(),
            mu: None,
            temperature: None,
            t_final: None,
            evolution: Evolution::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Standard output when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub sampling: Sampling,
    /// Also write per-mode occupations (`<path stem>_modes.<ext>`).
    #[serde(default)]
    pub per_mode: bool,
}

fn default_samples() -> usize {
    101
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            path: None,
            format: Format::Csv,
            samples: default_samples(),
            sampling: Sampling::UniformTime,
            per_mode: false,
        }
    }
}

/// Velocity family for the `sweep` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub mu_i: f64,
    pub mu_f: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    /// Explicit velocities; overrides the log-spaced range.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocities: Option<Vec<f64>>,
}

impl SweepConfig {
    pub fn velocities(&self) -> Result<Vec<f64>, ConfigError> {
        let v = match (&self.velocities, self.v_min, self.v_max) {
            (Some(v), _, _) => v.clone(),
            (None, Some(lo), Some(hi)) => protocols::log_spaced(lo, hi, self.points.unwrap_or(9)),
            _ => return Err(invalid("sweep", "give either velocities or v_min and v_max")),
        };
        if v.is_empty() || v.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
            return Err(invalid("sweep", "velocities must be positive and finite"));
        }
        Ok(v)
    }
}

/// Exponent grid for the `phase-diagram` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseDiagramConfig {
    #[serde(default = "default_family")]
    pub family: ExponentFamily,
    #[serde(default = "default_zeta_min")]
    pub zeta_min: f64,
    #[serde(default = "default_zeta_max")]
    pub zeta_max: f64,
    #[serde(default = "default_zeta_points")]
    pub points: usize,
}

fn default_family() -> ExponentFamily {
    ExponentFamily::Hopping
}
fn default_zeta_min() -> f64 {
    1.05
}
fn default_zeta_max() -> f64 {
    5.0
}
fn default_zeta_points() -> usize {
    80
}

impl Default for PhaseDiagramConfig {
    fn default() -> Self {
        PhaseDiagramConfig {
            family: default_family(),
            zeta_min: default_zeta_min(),
            zeta_max: default_zeta_max(),
            points: default_zeta_points(),
        }
    }
}

impl PhaseDiagramConfig {
    /// Evenly spaced exponents from `zeta_min` to `zeta_max`.
    pub fn grid(&self) -> Vec<f64> {
        let n = self.points.max(1);
        if n == 1 {
            return vec![self.zeta_min];
        }
        (0..n)
            .map(|i| {
                if i == n - 1 {
                    self.zeta_max
                } else {
                    self.zeta_min + (self.zeta_max - self.zeta_min) * i as f64 / (n - 1) as f64
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub chain: ChainParams,
    pub bath: BathConfig,
    #[serde(default)]
    pub protocol: ProtocolConfig,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub phase_diagram: PhaseDiagramConfig,
}

impl RunConfig {
    pub fn bath_params(&self) -> Result<BathParams, ConfigError> {
        let b = &self.bath;
        let spectrum = match (b.spectrum, &b.table) {
            (SpectrumKind::Ohmic, None) => Spectrum::Ohmic,
            (SpectrumKind::Flat, None) => Spectrum::Flat,
            (SpectrumKind::Tabulated, Some(path)) => {
                Spectrum::Tabulated(SpectrumTable::load(path).map_err(|e| invalid("bath", e))?)
            }
            (SpectrumKind::Tabulated, None) => return Err(invalid("bath", "spectrum = \"tabulated\" needs table")),
            (_, Some(_)) => return Err(invalid("bath", "table is only used with spectrum = \"tabulated\"")),
        };
        let params = BathParams {
            temperature: b.temperature,
            gamma: b.gamma,
            delta: b.delta,
            cutoff: b.lambda_c,
            spectrum,
        };
        params.validate().map_err(|e: BathError| invalid("bath", e))?;
        Ok(params)
    }

    pub fn protocol(&self) -> Result<Protocol, ConfigError> {
        let p = &self.protocol;
        let mu = p.mu.unwrap_or(Schedule::constant(self.chain.chemical_potential));
        let temperature = p.temperature.unwrap_or(Schedule::constant(self.bath.temperature));
        Protocol::new(mu, temperature, p.t_final).map_err(|e| invalid("protocol", e))
    }

    pub fn run_options(&self) -> RunOptions {
        RunOptions {
            evolution: self.protocol.evolution,
            sampling: self.output.sampling,
            samples: self.output.samples,
        }
    }

    /// Checks every nested invariant.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.chain.validate().map_err(|e| invalid("chain", e))?;
        self.bath_params()?;
        self.protocol()?;
        self.solver.validate().map_err(|e| invalid("solver", e))?;
        if self.output.samples < 2 {
            return Err(invalid("output", "samples must be at least 2"));
        }
        if let Some(s) = &self.sweep {
            s.velocities()?;
        }
        let pd = &self.phase_diagram;
        if !(pd.zeta_min > 1.0) || !(pd.zeta_max >= pd.zeta_min) || pd.points == 0 {
            return Err(invalid("phase_diagram", "need 1 < zeta_min <= zeta_max and points >= 1"));
        }
        if let Some(path) = &self.output.path {
            let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
            if !dir.is_dir() {
                return Err(invalid("output", format!("directory {} does not exist", dir.display())));
            }
        }
        Ok(())
    }

    /// The config as TOML text; parsing it back gives an equal config.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }
}

/// Parses and validates a config document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    parse_with_overrides(text, &[])
}

/// Parses a config after applying `section.key=value` overrides. Values are
/// read as TOML (`inf`, numbers, inline tables) and fall back to strings.
pub fn parse_with_overrides(text: &str, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let mut doc: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    let config: RunConfig = doc.try_into().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

fn apply_override(doc: &mut toml::Table, item: &str) -> Result<(), ConfigError> {
    let (key, raw) = item.split_once('=').ok_or_else(|| ConfigError::Override(item.into()))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(ConfigError::Override(item.into()));
    }
    let value = format!("v = {}", raw.trim())
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()));
    let mut table = doc;
    for part in &path[..path.len() - 1] {
        let entry = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry.as_table_mut().ok_or_else(|| ConfigError::Override(item.into()))?;
    }
    table.insert(path[path.len() - 1].to_string(), value);
    Ok(())
}

pub fn load_config(path: &Path, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_with_overrides(&text, overrides)
}

/// Recovers the config echoed in the `# ` comment block at the top of an
/// emitted CSV file.
pub fn config_from_metadata(text: &str) -> Result<RunConfig, ConfigError> {
    let mut body = String::new();
    let mut inside = false;
    for line in text.lines() {
        let Some(rest) = line.strip_prefix('#') else { break };
        let rest = rest.strip_prefix(' ').unwrap_or(rest);
        match rest {
            "--- config ---" => inside = true,
            "--- end config ---" => break,
            _ if inside => {
                body.push_str(rest);
                body.push('\n');
            }
            _ => {}
        }
    }
    if !inside {
        return Err(ConfigError::Parse("no config block found".into()));
    }
    parse_config(&body)
}
