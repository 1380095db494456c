//! Command-line front end: parameter sweeps written as CSV or JSON, and a
//! self-validation suite.

pub mod commands;
pub mod config;
pub mod validate;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{FrameworkChoice, OutputFormat, RunConfig, SweepVar, TailMapChoice};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or parameters outside a framework's domain.
    Usage(String),
    /// A computation or I/O step failed.
    Failed(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Usage(s) | Self::Failed(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "nhresponse", version, about = "Linear response of non-Hermitian quasiparticle Hamiltonians")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Spectral function A(omega, k) and the complex band energies.
    Spectral,
    /// Optical conductivity sigma(omega).
    Sigma,
    /// DC conductivity, numerically and in closed form where one exists.
    SigmaDc,
    /// Optical sum rule -pi chi(0).
    Osr,
    /// Zero-temperature occupation matrix <c_i^dagger c_j>(k).
    Occupation,
    /// Runs the built-in checks and reports one line per check.
    Validate,
}

/// Flags override the config file field of the same name.
#[derive(Debug, Default, Args)]
pub struct Overrides {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub framework: Option<FrameworkChoice>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub format: Option<OutputFormat>,
    #[arg(long, global = true)]
    pub v_f: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub delta: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub m: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub mu: Option<f64>,
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    /// Positive stand-in for 0+ when gamma = 0.
    #[arg(long, global = true)]
    pub delta0: Option<f64>,
    #[arg(long, global = true)]
    pub temperature: Option<f64>,
    #[arg(long, global = true)]
    pub sweep: Option<SweepVar>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub start: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub stop: Option<f64>,
    #[arg(long, global = true)]
    pub points: Option<usize>,
    /// Frequency used when omega is not the sweep variable.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub omega: Option<f64>,
    /// Momentum used when k is not the sweep variable.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub k: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub omega_start: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub omega_stop: Option<f64>,
    #[arg(long, global = true)]
    pub omega_points: Option<usize>,
    #[arg(long, global = true)]
    pub rel_tol: Option<f64>,
    #[arg(long, global = true)]
    pub abs_tol: Option<f64>,
    #[arg(long, global = true)]
    pub max_subdivisions: Option<usize>,
    #[arg(long, global = true)]
    pub tail_map: Option<TailMapChoice>,
}

impl Overrides {
    fn apply(&self, cfg: &mut RunConfig) {
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field.clone() { cfg.$field = v; })*
            };
        }
        set!(
            framework, format, v_f, delta, m, mu, gamma, delta0, temperature, omega, k, omega_start,
            omega_stop, omega_points, rel_tol, abs_tol, max_subdivisions, tail_map
        );
        if self.out.is_some() {
            cfg.out = self.out.clone();
        }
        if self.sweep.is_some() {
            cfg.sweep = self.sweep;
        }
        if self.start.is_some() {
            cfg.start = self.start;
        }
        if self.stop.is_some() {
            cfg.stop = self.stop;
        }
        if self.points.is_some() {
            cfg.points = self.points;
        }
    }
}

/// Config file, then flags, then validation.
pub fn resolve(overrides: &Overrides) -> Result<RunConfig, CliError> {
    let mut cfg = match &overrides.config {
        Some(path) => config::load(path)?,
        None => RunConfig::default(),
    };
    overrides.apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<bool, CliError> {
    let cfg = resolve(&cli.overrides)?;
    let table = match cli.command {
        Command::Spectral => commands::spectral(&cfg)?,
        Command::Sigma => commands::sigma(&cfg)?,
        Command::SigmaDc => commands::sigma_dc_cmd(&cfg)?,
        Command::Osr => commands::osr(&cfg)?,
        Command::Occupation => commands::occupation_cmd(&cfg)?,
        Command::Validate => {
            let checks = validate::run_suite(&cfg);
            let report = validate::render(&checks);
            print!("{report}");
            if let Some(path) = &cfg.out {
                let text = match cfg.format {
                    OutputFormat::Csv => report,
                    OutputFormat::Json => serde_json::to_string_pretty(&checks)
                        .map_err(|e| CliError::Failed(format!("cannot serialize report: {e}")))?,
                };
                std::fs::write(path, text)
                    .map_err(|e| CliError::Failed(format!("cannot write {}: {e}", path.display())))?;
            }
            return Ok(checks.iter().all(|c| c.status != validate::Status::Fail));
        }
    };
    table.emit(&cfg)?;
    Ok(true)
}

/// Exit codes: 0 success, 1 computation or validation failure, 2 usage error.
pub fn run() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Failed(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
