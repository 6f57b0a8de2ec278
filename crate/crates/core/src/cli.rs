//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or config error, 2 numerical failure,
//! 3 oracle mismatch.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::config::{self, ConfigError, Format, RunConfig, CONFIG_ENV};
use crate::model::{self, ChainParams, Exponent, ExponentFamily, GapClosure};
use crate::oracle::{self, OracleError};
use crate::output::{self, Table};
use crate::protocols::{self, ProtocolError};
use crate::thirdq::{self, ThirdQuantError};
use crate::{bath, dynamics::InitialState};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_MISMATCH: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "open-kitaev", version, about = "Open long-range Kitaev chain simulator")]
pub struct Cli {
    /// Config file; defaults to $OPEN_KITAEV_CONFIG.
    #[arg(long, short, global = true)]
    pub config: Option<PathBuf>,
    /// Override a config key, e.g. `--set chain.L=256` or `--set bath.T=0.2`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,
    /// Output file (overrides `output.path`).
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Output format (overrides `output.format`).
    #[arg(long, value_enum, global = true)]
    pub format: Option<FormatArg>,
    /// Worker threads; 1 gives the reference ordering of every reduction.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Critical mu/J of the k=0 and k=pi gap closures against the decay exponent.
    PhaseDiagram {
        /// Chain length used in the coupling sums (default: `chain.L` or 1500).
        #[arg(long)]
        length: Option<usize>,
    },
    /// Rapidities and steady-state occupations of every mode.
    SteadyState,
    /// Evolve the chain through `[protocol]` and record the excitation density.
    Ramp {
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Final excitation density against ramp velocity for the three branches.
    Sweep,
    /// Compare the dense Lindblad oracle with the factorized evolution.
    OracleCheck {
        /// Seed for the random configurations (default: config `seed` or 0).
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1e-6)]
        tolerance: f64,
    },
    /// Parse and validate the config, then print it in normalized form.
    ValidateConfig,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Mismatch(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Mismatch(_) => EXIT_MISMATCH,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<ProtocolError> for CliError {
    fn from(e: ProtocolError) -> Self {
        match e {
            ProtocolError::Solver { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::TooLarge(_) | OracleError::Invalid(_) | OracleError::Model(_) | OracleError::Bath(_) => {
                CliError::Usage(e.to_string())
            }
            OracleError::Protocol(p) => p.into(),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

fn io_error(path: Option<&Path>, e: std::io::Error) -> CliError {
    let target = path.map_or("standard output".to_string(), |p| p.display().to_string());
    CliError::Usage(format!("cannot write {target}: {e}"))
}

impl Cli {
    fn config_path(&self) -> Option<PathBuf> {
        self.config
            .clone()
            .or_else(|| std::env::var_os(CONFIG_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
    }

    fn all_overrides(&self) -> Vec<String> {
        let mut o = self.overrides.clone();
        if let Some(p) = &self.output {
            o.push(format!("output.path={}", toml::Value::String(p.display().to_string())));
        }
        if let Some(f) = self.format {
            let name = match f {
                FormatArg::Csv => "csv",
                FormatArg::Json => "json",
            };
            o.push(format!("output.format=\"{name}\""));
        }
        if let Command::Ramp { samples: Some(n) } = self.command {
            o.push(format!("output.samples={n}"));
        }
        o
    }

    /// The config, or `None` when no file is given and none is required.
    fn load(&self, required: bool) -> Result<Option<RunConfig>, CliError> {
        match self.config_path() {
            Some(path) => Ok(Some(config::load_config(&path, &self.all_overrides())?)),
            None if required => Err(CliError::Usage(format!(
                "no config file: pass --config or set {CONFIG_ENV}"
            ))),
            None => Ok(None),
        }
    }

    fn emit(&self, table: &Table, command: &str, config: Option<&RunConfig>) -> Result<(), CliError> {
        let (format, path) = match config {
            Some(c) => (c.output.format, c.output.path.clone()),
            None => (
                match self.format {
                    Some(FormatArg::Json) => Format::Json,
                    _ => Format::Csv,
                },
                self.output.clone(),
            ),
        };
        let text = output::render(table, format, command, config);
        output::write(&text, path.as_deref()).map_err(|e| io_error(path.as_deref(), e))
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    match cli.threads {
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(e.to_string()))?
            .install(|| dispatch(cli)),
        None => dispatch(cli),
    }
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::ValidateConfig => {
            let c = cli.load(true)?.expect("required");
            print!("{}", c.to_toml());
            eprintln!("config ok");
            Ok(())
        }
        Command::PhaseDiagram { length } => {
            let c = cli.load(false)?;
            let length = length.or(c.as_ref().map(|c| c.chain.length)).unwrap_or(1500);
            let grid = c.as_ref().map(|c| c.phase_diagram.clone()).unwrap_or_default();
            let table = phase_table(&grid.grid(), grid.family, length)?;
            cli.emit(&table, "phase-diagram", c.as_ref())
        }
        Command::SteadyState => {
            let c = cli.load(true)?.expect("required");
            let table = steady_state_table(&c)?;
            cli.emit(&table, "steady-state", Some(&c))
        }
        Command::Ramp { .. } => {
            let c = cli.load(true)?.expect("required");
            let result = protocols::run_protocol(
                &c.chain,
                &c.bath_params()?,
                &c.protocol()?,
                c.protocol.init,
                &c.solver,
                &c.run_options(),
            )?;
            cli.emit(&output::ramp_table(&result), "ramp", Some(&c))?;
            if c.output.per_mode {
                let path = c
                    .output
                    .path
                    .as_deref()
                    .ok_or_else(|| CliError::Usage("output.per_mode needs output.path".into()))?;
                let modes = output::modes_path(path);
                let text = output::render(&output::modes_table(&result), c.output.format, "ramp", Some(&c));
                output::write(&text, Some(&modes)).map_err(|e| io_error(Some(&modes), e))?;
            }
            Ok(())
        }
        Command::Sweep => {
            let c = cli.load(true)?.expect("required");
            let sweep = c
                .sweep
                .as_ref()
                .ok_or_else(|| CliError::Usage("the sweep command needs a [sweep] section".into()))?;
            let result = protocols::sweep_velocities(
                &c.chain,
                &c.bath_params()?,
                sweep.mu_i,
                sweep.mu_f,
                &sweep.velocities()?,
                c.protocol.init,
                &c.solver,
            )?;
            let table = output::sweep_table(&result);
            for (k, v) in &table.footer {
                eprintln!("{k}: {v}");
            }
            cli.emit(&table, "sweep", Some(&c))
        }
        Command::OracleCheck { seed, tolerance } => {
            let c = cli.load(false)?;
            let seed = seed.or(c.as_ref().map(|c| c.seed)).unwrap_or(0);
            oracle_check(seed, *tolerance)
        }
    }
}

/// `zeta, mu_c_over_J_k0, mu_c_over_J_kpi` rows.
pub fn phase_table(zetas: &[f64], family: ExponentFamily, length: usize) -> Result<Table, CliError> {
    let mut t = Table::new(&["zeta", "mu_c_over_J_k0", "mu_c_over_J_kpi"]);
    for &z in zetas {
        let zeta = Exponent::from(z);
        let b = |which| model::phase_boundary(zeta, which, family, length).map_err(|e| CliError::Usage(e.to_string()));
        t.push(vec![z, b(GapClosure::ZeroMomentum)?, b(GapClosure::PiMomentum)?]);
    }
    Ok(t)
}

/// One row per mode and rapidity branch: `k, lambda, branch, re_r, im_r, occupation`.
pub fn steady_state_table(c: &RunConfig) -> Result<Table, CliError> {
    let bath_params = c.bath_params()?;
    let params: &ChainParams = &c.chain;
    let modes = model::CouplingTable::new(params).modes(params);
    let mut t = Table::new(&["k", "lambda", "branch", "re_r", "im_r", "occupation"]);
    for m in &modes {
        let rates = bath::rates(m.lambda, &bath_params).map_err(|e| CliError::Usage(e.to_string()))?;
        let r = thirdq::rapidities(m, &rates, bath_params.gamma);
        let occupation = match thirdq::ness_correlation(m, &rates, bath_params.gamma) {
            Ok(block) => block.occupation(),
            Err(ThirdQuantError::UnsupportedRates { .. }) => thirdq::ness_occupation(m, bath_params.temperature),
            Err(e) => return Err(CliError::Numerical(e.to_string())),
        };
        for (branch, rap) in [(1.0, r.plus), (-1.0, r.minus)] {
            t.push(vec![m.k, m.lambda, branch, rap.re, rap.im, occupation]);
        }
    }
    Ok(t)
}

fn oracle_check(seed: u64, tolerance: f64) -> Result<(), CliError> {
    let mut failed = Vec::new();
    for length in [2, 4] {
        for case in oracle::equivalence_suite(length, seed)? {
            let ok = case.max_deviation <= tolerance;
            println!(
                "L={} {:<12} max_deviation={:.3e} {}",
                case.length,
                case.name,
                case.max_deviation,
                if ok { "ok" } else { "FAIL" }
            );
            if !ok {
                failed.push(format!("L={} {}", case.length, case.name));
            }
        }
    }
    let bath = bath::BathParams::ohmic(0.3, 0.1, 1.0, 10.0).map_err(|e| CliError::Usage(e.to_string()))?;
    let times: Vec<f64> = (0..=40).map(|i| 0.5 * i as f64).collect();
    let (pair, combined) = oracle::zero_mode_series(&bath, InitialState::Vacuum, &times)?;
    let dev = pair.iter().zip(&combined).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
    let ok = dev <= 1e-8;
    println!("L=2 zero-mode    max_deviation={dev:.3e} {}", if ok { "ok" } else { "FAIL" });
    if !ok {
        failed.push("zero-mode".into());
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Mismatch(format!("oracle mismatch: {}", failed.join(", "))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn help_and_bad_usage_codes() {
        assert_eq!(run(["open-kitaev", "--help"]), EXIT_OK);
        assert_eq!(run(["open-kitaev", "no-such-command"]), EXIT_USAGE);
        assert_eq!(run(["open-kitaev", "ramp", "--threads", "x"]), EXIT_USAGE);
    }

    #[test]
    fn phase_table_nearest_neighbour_lines() {
        let t = phase_table(&[2.0], ExponentFamily::Pairing, 64).unwrap();
        assert_eq!(t.rows[0], vec![2.0, -1.0, 1.0]);
    }

    #[test]
    fn error_classes_map_to_exit_codes() {
        assert_eq!(CliError::from(ConfigError::Parse("x".into())).exit_code(), EXIT_USAGE);
        assert_eq!(CliError::from(OracleError::TraceDrift { t: 1.0, drift: 1.0 }).exit_code(), EXIT_NUMERICAL);
        assert_eq!(CliError::Mismatch("m".into()).exit_code(), EXIT_MISMATCH);
    }
}
