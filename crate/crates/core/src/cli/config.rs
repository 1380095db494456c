//! Run configuration: a flat JSON file whose field names match the command
//! line flags, with flags taking precedence.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::greens::{Framework, FrameworkKind, DEFAULT_DELTA0};
use crate::response::{QuadratureSpec, TailMap};
use crate::tachyon::{TachyonCurrent, TachyonParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum FrameworkChoice {
    Standard,
    PhqmJ,
    PhqmTilde,
    Postselected,
}

impl FrameworkChoice {
    pub fn kind(self) -> FrameworkKind {
        match self {
            Self::Standard => FrameworkKind::Standard,
            Self::PhqmJ | Self::PhqmTilde => FrameworkKind::Phqm,
            Self::Postselected => FrameworkKind::Postselected,
        }
    }

    pub fn current(self) -> TachyonCurrent {
        match self {
            Self::PhqmTilde => TachyonCurrent::Tilde,
            _ => TachyonCurrent::J,
        }
    }
}

impl fmt::Display for FrameworkChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Self::Standard => "standard",
            Self::PhqmJ => "phqm-j",
            Self::PhqmTilde => "phqm-tilde",
            Self::Postselected => "postselected",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SweepVar {
    Omega,
    K,
    M,
    Gamma,
}

impl fmt::Display for SweepVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Self::Omega => "omega",
            Self::K => "k",
            Self::M => "m",
            Self::Gamma => "gamma",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum TailMapChoice {
    Tangent,
    Exponential,
}

/// Everything a subcommand needs. Missing fields take the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub v_f: f64,
    pub delta: f64,
    pub m: f64,
    pub mu: f64,
    pub gamma: f64,
    pub framework: FrameworkChoice,
    pub delta0: f64,
    pub temperature: f64,
    pub sweep: Option<SweepVar>,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub points: Option<usize>,
    /// Fixed frequency when the sweep variable is not `omega`.
    pub omega: f64,
    /// Fixed momentum when the sweep variable is not `k`.
    pub k: f64,
    /// Frequency axis of the spectral-function grid.
    pub omega_start: f64,
    pub omega_stop: f64,
    pub omega_points: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    pub tail_map: TailMapChoice,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        let p = TachyonParams::default();
        let q = QuadratureSpec::default();
        Self {
            v_f: p.v_f,
            delta: p.delta,
            m: p.m,
            mu: p.mu,
            gamma: p.gamma,
            framework: FrameworkChoice::Standard,
            delta0: DEFAULT_DELTA0,
            temperature: 0.0,
            sweep: None,
            start: None,
            stop: None,
            points: None,
            omega: 1.0,
            k: 0.0,
            omega_start: -4.0,
            omega_stop: 4.0,
            omega_points: 161,
            // Tighter than needed for plotting would only cost time.
            rel_tol: 1e-6,
            abs_tol: q.abs_tol,
            max_subdivisions: q.max_subdivisions,
            tail_map: TailMapChoice::Tangent,
            out: None,
            format: OutputFormat::Csv,
        }
    }
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

impl From<crate::error::Error> for ConfigError {
    fn from(e: crate::error::Error) -> Self {
        Self(e.to_string())
    }
}

pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| ConfigError(format!("invalid config {}: {e}", path.display())))
}

/// A resolved one-dimensional sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub var: SweepVar,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.points - 1) as f64;
        (0..self.points)
            .map(|i| if i + 1 == self.points { self.stop } else { self.start + step * i as f64 })
            .collect()
    }
}

impl RunConfig {
    pub fn params(&self) -> TachyonParams {
        TachyonParams { v_f: self.v_f, delta: self.delta, m: self.m, mu: self.mu, gamma: self.gamma }
    }

    pub fn framework_for(&self, p: &TachyonParams) -> Framework {
        Framework { kind: self.framework.kind(), gamma: p.gamma, delta0: self.delta0 }
    }

    pub fn quadrature(&self) -> QuadratureSpec {
        QuadratureSpec {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_subdivisions: self.max_subdivisions,
            tail_map: match self.tail_map {
                TailMapChoice::Tangent => TailMap::TangentMap,
                TailMapChoice::Exponential => TailMap::ExponentialMap,
            },
            scale: self.delta.abs().max(self.gamma.abs()).max(f64::MIN_POSITIVE),
        }
    }

    /// The configured sweep, or the single configured point of `default.var`
    /// when no sweep flag is set at all.
    pub fn sweep_or_point(&self, default: Sweep) -> Result<Sweep, ConfigError> {
        if self.sweep.is_some() || self.start.is_some() || self.stop.is_some() || self.points.is_some() {
            return self.sweep_or(default);
        }
        let x = match default.var {
            SweepVar::M => self.m,
            SweepVar::Gamma => self.gamma,
            SweepVar::Omega => self.omega,
            SweepVar::K => self.k,
        };
        Ok(Sweep { var: default.var, start: x, stop: x, points: 1 })
    }

    /// The configured sweep, falling back to `default` where unset.
    pub fn sweep_or(&self, default: Sweep) -> Result<Sweep, ConfigError> {
        let var = self.sweep.unwrap_or(default.var);
        let same_var = var == default.var;
        let sweep = Sweep {
            var,
            start: self.start.or(same_var.then_some(default.start)).ok_or_else(|| missing("start", var))?,
            stop: self.stop.or(same_var.then_some(default.stop)).ok_or_else(|| missing("stop", var))?,
            points: self.points.unwrap_or(default.points),
        };
        if sweep.points < 2 {
            return Err(ConfigError(format!("sweep needs points >= 2 (got {})", sweep.points)));
        }
        if !(sweep.start.is_finite() && sweep.stop.is_finite() && sweep.start < sweep.stop) {
            return Err(ConfigError(format!("sweep needs finite start < stop (got {} .. {})", sweep.start, sweep.stop)));
        }
        Ok(sweep)
    }

    /// Parameters at one sweep point.
    pub fn params_at(&self, sweep: &Sweep, x: f64) -> TachyonParams {
        let mut p = self.params();
        match sweep.var {
            SweepVar::M => p.m = x,
            SweepVar::Gamma => p.gamma = x,
            SweepVar::Omega | SweepVar::K => {}
        }
        p
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (v, name) in [
            (self.v_f, "v_f"),
            (self.delta, "delta"),
            (self.m, "m"),
            (self.mu, "mu"),
            (self.gamma, "gamma"),
            (self.omega, "omega"),
            (self.k, "k"),
        ] {
            if !v.is_finite() {
                return Err(ConfigError(format!("{name} must be finite")));
            }
        }
        if !(self.v_f > 0.0) {
            return Err(ConfigError(format!("v_f must be > 0 (got {})", self.v_f)));
        }
        if !(self.gamma >= 0.0) {
            return Err(ConfigError(format!("gamma must be >= 0 (got {})", self.gamma)));
        }
        if !(self.delta0 >= 0.0) {
            return Err(ConfigError(format!("delta0 must be >= 0 (got {})", self.delta0)));
        }
        if !(self.temperature >= 0.0) || !self.temperature.is_finite() {
            return Err(ConfigError(format!("temperature must be >= 0 (got {})", self.temperature)));
        }
        self.quadrature().validate()?;
        Ok(())
    }

    /// Framework constraints on the model parameters.
    pub fn check_constraints(&self, p: &TachyonParams) -> Result<(), ConfigError> {
        let gapped = p.delta * p.delta > p.m * p.m;
        match self.framework {
            FrameworkChoice::Standard if !(p.gamma > p.m.abs()) => Err(ConfigError(format!(
                "standard framework requires gamma > |m| (gamma = {}, m = {})",
                p.gamma, p.m
            ))),
            FrameworkChoice::PhqmJ | FrameworkChoice::PhqmTilde if !gapped => Err(ConfigError(format!(
                "phqm frameworks require Delta^2 > m^2 (Delta = {}, m = {})",
                p.delta, p.m
            ))),
            _ => Ok(()),
        }
    }

    /// `# key=value` lines recording everything that determines the output.
    pub fn metadata(&self, command: &str, sweep: Option<&Sweep>) -> Vec<(String, String)> {
        let mut out = vec![
            ("command".to_string(), command.to_string()),
            ("framework".to_string(), self.framework.to_string()),
            ("v_f".to_string(), fmt_num(self.v_f)),
            ("delta".to_string(), fmt_num(self.delta)),
            ("m".to_string(), fmt_num(self.m)),
            ("mu".to_string(), fmt_num(self.mu)),
            ("gamma".to_string(), fmt_num(self.gamma)),
            ("delta0".to_string(), fmt_num(self.delta0)),
            ("temperature".to_string(), fmt_num(self.temperature)),
            ("rel_tol".to_string(), fmt_num(self.rel_tol)),
            ("abs_tol".to_string(), fmt_num(self.abs_tol)),
            ("max_subdivisions".to_string(), self.max_subdivisions.to_string()),
            (
                "tail_map".to_string(),
                match self.tail_map {
                    TailMapChoice::Tangent => "tangent".to_string(),
                    TailMapChoice::Exponential => "exponential".to_string(),
                },
            ),
        ];
        if let Some(s) = sweep {
            out.push(("sweep".to_string(), s.var.to_string()));
            out.push(("start".to_string(), fmt_num(s.start)));
            out.push(("stop".to_string(), fmt_num(s.stop)));
            out.push(("points".to_string(), s.points.to_string()));
        }
        out
    }
}

fn missing(what: &str, var: SweepVar) -> ConfigError {
    ConfigError(format!("sweep over {var} needs an explicit --{what}"))
}

/// Twelve significant digits, locale independent.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.11e}")
    }
}
