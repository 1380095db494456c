//! Data-emitting subcommands. Every command evaluates its sweep points in
//! parallel and assembles rows in sweep order, so output is deterministic.

use std::io::Write;

use rayon::prelude::*;
use serde_json::{json, Map, Value};

use super::config::{fmt_num, ConfigError, FrameworkChoice, OutputFormat, RunConfig, Sweep, SweepVar};
use super::CliError;
use crate::error::Error;
use crate::greens::spectral_function;
use crate::matrix::ComplexMatrix;
use crate::observables::occupation;
use crate::response::{optical_sum, sigma_dc, sigma_optical, ResponseResult};
use crate::spectral::{eig_biortho, eigenvalues, pseudo_metric};
use crate::tachyon::{
    hamiltonian, osr_closed, sigma_dc_closed, DcFormula, OsrForm, TachyonModel, TachyonParams,
};

pub struct Table {
    pub metadata: Vec<(String, String)>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.metadata {
            s.push_str(&format!("# {k}={v}\n"));
        }
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&x| fmt_num(x)).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    pub fn to_json(&self) -> String {
        let metadata: Map<String, Value> =
            self.metadata.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect();
        // Numbers go through the same 12-digit formatting as the CSV.
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                Value::Array(
                    r.iter()
                        .map(|&x| if x.is_finite() { fmt_num(x).parse::<f64>().map(Value::from).unwrap() } else { Value::Null })
                        .collect(),
                )
            })
            .collect();
        let doc = json!({ "metadata": metadata, "columns": self.columns, "rows": rows });
        let mut s = serde_json::to_string_pretty(&doc).expect("JSON serialization of plain values");
        s.push('\n');
        s
    }

    pub fn emit(&self, cfg: &RunConfig) -> Result<(), CliError> {
        let text = match cfg.format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Json => self.to_json(),
        };
        match &cfg.out {
            Some(path) => std::fs::write(path, text)
                .map_err(|e| CliError::Failed(format!("cannot write {}: {e}", path.display()))),
            None => std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| CliError::Failed(format!("cannot write to stdout: {e}"))),
        }
    }
}

/// Parameter-dependent failures are configuration problems; anything else is
/// a numerical failure.
pub fn classify(e: Error) -> CliError {
    match e {
        Error::FrameworkViolation(_)
        | Error::Regime(_)
        | Error::ComplexSpectrum { .. }
        | Error::NotPositiveDefinite { .. }
        | Error::ExceptionalPoint { .. }
        | Error::Unsupported(_)
        | Error::Domain { .. }
        | Error::MissingMetric => CliError::Usage(e.to_string()),
        other => CliError::Failed(other.to_string()),
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Usage(e.0)
    }
}

fn require_sweep_var(sweep: &Sweep, allowed: &[SweepVar], command: &str) -> Result<(), CliError> {
    if allowed.contains(&sweep.var) {
        return Ok(());
    }
    let names: Vec<String> = allowed.iter().map(|v| v.to_string()).collect();
    Err(CliError::Usage(format!("{command} sweeps one of {{{}}}, not {}", names.join(", "), sweep.var)))
}

fn check_all_points(cfg: &RunConfig, sweep: &Sweep) -> Result<(), CliError> {
    for x in sweep.values() {
        cfg.check_constraints(&cfg.params_at(sweep, x))?;
    }
    Ok(())
}

/// Value and error of a response integral; a non-converged result is kept
/// and flagged rather than dropped.
fn response_cells(r: crate::error::Result<ResponseResult>) -> Result<(f64, f64, f64, f64), CliError> {
    match r {
        Ok(r) => Ok((r.value.re, r.value.im, r.est_error, 1.0)),
        Err(Error::NonConvergent(r)) => Ok((r.value.re, r.value.im, r.est_error, 0.0)),
        Err(e) => Err(classify(e)),
    }
}

fn model(cfg: &RunConfig, p: TachyonParams) -> TachyonModel {
    TachyonModel::new(p, cfg.framework.current())
}

/// `A(ω, k)` on a grid with the band energies overlaid.
pub fn spectral(cfg: &RunConfig) -> Result<Table, CliError> {
    let sweep = cfg.sweep_or(Sweep { var: SweepVar::K, start: -3.0, stop: 3.0, points: 121 })?;
    require_sweep_var(&sweep, &[SweepVar::K], "spectral")?;
    if cfg.framework == FrameworkChoice::Postselected {
        return Err(CliError::Usage("the postselected framework has no Green's functions".into()));
    }
    if cfg.omega_points < 2 || !(cfg.omega_start < cfg.omega_stop) {
        return Err(CliError::Usage(format!(
            "frequency axis needs omega_points >= 2 and omega_start < omega_stop (got {} points, {} .. {})",
            cfg.omega_points, cfg.omega_start, cfg.omega_stop
        )));
    }
    let p = cfg.params();
    cfg.check_constraints(&p)?;
    let fw = cfg.framework_for(&p);
    let omegas = Sweep { var: SweepVar::Omega, start: cfg.omega_start, stop: cfg.omega_stop, points: cfg.omega_points }.values();
    let blocks: Result<Vec<Vec<Vec<f64>>>, CliError> = sweep
        .values()
        .par_iter()
        .map(|&k| {
            let h = hamiltonian(k, &p);
            let eta = match cfg.framework {
                FrameworkChoice::Standard => None,
                _ => Some(pseudo_metric(&eig_biortho(&h).map_err(classify)?).map_err(classify)?),
            };
            let mut xi = eigenvalues(&h).map_err(classify)?;
            xi.sort_by(|a, b| a.re.total_cmp(&b.re).then(b.im.total_cmp(&a.im)));
            omegas
                .iter()
                .map(|&w| {
                    let a = spectral_function(&h, eta.as_ref(), &fw, w).map_err(classify)?;
                    Ok(vec![w, k, a, xi[0].re, xi[0].im, xi[1].re, xi[1].im])
                })
                .collect()
        })
        .collect();
    let mut meta = cfg.metadata("spectral", Some(&sweep));
    meta.push(("omega_start".into(), fmt_num(cfg.omega_start)));
    meta.push(("omega_stop".into(), fmt_num(cfg.omega_stop)));
    meta.push(("omega_points".into(), cfg.omega_points.to_string()));
    meta.push(("units".into(), "A in 1/Delta; energies in Delta".into()));
    Ok(Table {
        metadata: meta,
        columns: vec!["omega", "k", "A", "re_xi_minus", "im_xi_minus", "re_xi_plus", "im_xi_plus"],
        rows: blocks?.into_iter().flatten().collect(),
    })
}

/// Optical conductivity over a frequency sweep, or at fixed `omega` over `m`
/// or `gamma`.
pub fn sigma(cfg: &RunConfig) -> Result<Table, CliError> {
    let sweep = cfg.sweep_or(Sweep { var: SweepVar::Omega, start: 0.05, stop: 6.0, points: 120 })?;
    require_sweep_var(&sweep, &[SweepVar::Omega, SweepVar::M, SweepVar::Gamma], "sigma")?;
    if cfg.framework == FrameworkChoice::Postselected {
        return Err(CliError::Usage("the postselected framework has no Kubo response".into()));
    }
    check_all_points(cfg, &sweep)?;
    let spec = cfg.quadrature();
    let rows: Result<Vec<Vec<f64>>, CliError> = sweep
        .values()
        .par_iter()
        .map(|&x| {
            let p = cfg.params_at(&sweep, x);
            let omega = if sweep.var == SweepVar::Omega { x } else { cfg.omega };
            let r = sigma_optical(&model(cfg, p), &cfg.framework_for(&p), omega, cfg.temperature, &spec);
            let (re, im, err, ok) = response_cells(r)?;
            Ok(vec![x, omega, re, im, err, ok])
        })
        .collect();
    let mut meta = cfg.metadata("sigma", Some(&sweep));
    if sweep.var != SweepVar::Omega {
        meta.push(("omega".into(), fmt_num(cfg.omega)));
    }
    meta.push(("units".into(), "e^2 v_F/(2 pi)".into()));
    Ok(Table {
        metadata: meta,
        columns: vec![sweep_column(sweep.var), "omega", "sigma_re", "sigma_im", "est_error", "converged"],
        rows: rows?,
    })
}

fn sweep_column(var: SweepVar) -> &'static str {
    match var {
        SweepVar::Omega => "x_omega",
        SweepVar::K => "x_k",
        SweepVar::M => "x_m",
        SweepVar::Gamma => "x_gamma",
    }
}

fn dc_formula(choice: FrameworkChoice) -> DcFormula {
    match choice {
        FrameworkChoice::Standard => DcFormula::Standard,
        FrameworkChoice::PhqmJ => DcFormula::PhqmJ,
        FrameworkChoice::PhqmTilde => DcFormula::IsospectralExact,
        FrameworkChoice::Postselected => DcFormula::Postselected,
    }
}

/// DC conductivity, numeric and closed form, over `m` or `gamma`.
pub fn sigma_dc_cmd(cfg: &RunConfig) -> Result<Table, CliError> {
    let sweep = cfg.sweep_or_point(Sweep { var: SweepVar::M, start: 0.0, stop: 0.9, points: 10 })?;
    require_sweep_var(&sweep, &[SweepVar::M, SweepVar::Gamma], "sigma-dc")?;
    check_all_points(cfg, &sweep)?;
    let spec = cfg.quadrature();
    let rows: Result<Vec<Vec<f64>>, CliError> = sweep
        .values()
        .par_iter()
        .map(|&x| {
            let p = cfg.params_at(&sweep, x);
            // The closed forms hold at T = 0 and mu = 0.
            let closed = if cfg.temperature == 0.0 && p.mu == 0.0 {
                sigma_dc_closed(dc_formula(cfg.framework), &p).unwrap_or(f64::NAN)
            } else {
                f64::NAN
            };
            if cfg.framework == FrameworkChoice::Postselected {
                return Ok(vec![x, f64::NAN, f64::NAN, closed, 0.0]);
            }
            let r = sigma_dc(&model(cfg, p), &cfg.framework_for(&p), cfg.temperature, &spec);
            let (re, _, err, ok) = response_cells(r)?;
            Ok(vec![x, re, err, closed, ok])
        })
        .collect();
    let mut meta = cfg.metadata("sigma-dc", Some(&sweep));
    meta.push(("units".into(), "e^2 v_F/(2 pi)".into()));
    Ok(Table {
        metadata: meta,
        columns: vec![sweep_column(sweep.var), "sigma_dc", "est_error", "closed_form", "converged"],
        rows: rows?,
    })
}

/// Optical sum `−π Re χ(0)` at `T = 0`, numeric and closed form.
pub fn osr(cfg: &RunConfig) -> Result<Table, CliError> {
    let sweep = cfg.sweep_or_point(Sweep { var: SweepVar::M, start: 0.0, stop: 0.9, points: 10 })?;
    require_sweep_var(&sweep, &[SweepVar::M, SweepVar::Gamma], "osr")?;
    if cfg.framework == FrameworkChoice::Postselected {
        return Err(CliError::Usage("the postselected framework has no Kubo response".into()));
    }
    if cfg.temperature != 0.0 {
        return Err(CliError::Usage("the optical sum is evaluated at temperature 0".into()));
    }
    check_all_points(cfg, &sweep)?;
    let spec = cfg.quadrature();
    let rows: Result<Vec<Vec<f64>>, CliError> = sweep
        .values()
        .par_iter()
        .map(|&x| {
            let p = cfg.params_at(&sweep, x);
            let closed = match (cfg.framework, p.mu == 0.0) {
                (_, false) => f64::NAN,
                (FrameworkChoice::PhqmTilde, true) => osr_closed(&p, OsrForm::Exact).unwrap_or(f64::NAN),
                _ => 1.0,
            };
            let r = optical_sum(&model(cfg, p), &cfg.framework_for(&p), &spec);
            let (re, _, err, ok) = response_cells(r)?;
            Ok(vec![x, re, err, closed, ok])
        })
        .collect();
    let mut meta = cfg.metadata("osr", Some(&sweep));
    meta.push(("units".into(), "e^2 v_F".into()));
    Ok(Table {
        metadata: meta,
        columns: vec![sweep_column(sweep.var), "optical_sum", "est_error", "closed_form", "converged"],
        rows: rows?,
    })
}

/// Zero-temperature occupation matrix `⟨c†_i c_j⟩` of `H(k)`.
pub fn occupation_cmd(cfg: &RunConfig) -> Result<Table, CliError> {
    let sweep = cfg.sweep_or(Sweep { var: SweepVar::K, start: -3.0, stop: 3.0, points: 61 })?;
    require_sweep_var(&sweep, &[SweepVar::K, SweepVar::M, SweepVar::Gamma], "occupation")?;
    check_all_points(cfg, &sweep)?;
    let sz = ComplexMatrix::sigma_z();
    let rows: Result<Vec<Vec<f64>>, CliError> = sweep
        .values()
        .par_iter()
        .map(|&x| {
            let p = cfg.params_at(&sweep, x);
            let k = if sweep.var == SweepVar::K { x } else { cfg.k };
            let occ = occupation(&hamiltonian(k, &p), &cfg.framework_for(&p)).map_err(classify)?;
            let n = &occ.entries;
            let number = occ.particle_number();
            let s = occ.expectation(&sz);
            Ok(vec![
                x,
                k,
                n[(0, 0)].re,
                n[(0, 0)].im,
                n[(0, 1)].re,
                n[(0, 1)].im,
                n[(1, 0)].re,
                n[(1, 0)].im,
                n[(1, 1)].re,
                n[(1, 1)].im,
                number.re,
                number.im,
                s.re,
                s.im,
            ])
        })
        .collect();
    let mut meta = cfg.metadata("occupation", Some(&sweep));
    if sweep.var != SweepVar::K {
        meta.push(("k".into(), fmt_num(cfg.k)));
    }
    Ok(Table {
        metadata: meta,
        columns: vec![
            sweep_column(sweep.var),
            "k",
            "n00_re",
            "n00_im",
            "n01_re",
            "n01_im",
            "n10_re",
            "n10_im",
            "n11_re",
            "n11_im",
            "number_re",
            "number_im",
            "sigma_z_re",
            "sigma_z_im",
        ],
        rows: rows?,
    })
}
