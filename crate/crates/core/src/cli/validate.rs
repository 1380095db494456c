//! Self-validation: every numerical pipeline against the model's closed forms
//! and the structural identities of the three frameworks.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{fmt_num, FrameworkChoice, RunConfig};
use crate::error::{Error, Result};
use crate::greens::{
    action_kernel, action_kernel_matsubara_sum, action_kernel_terms, g_advanced, g_retarded, Framework,
};
use crate::matrix::{c, ComplexMatrix};
use crate::observables::{nhts_density, occupation};
use crate::response::{
    integrate, kramers_kronig, optical_sum, sigma_dc, sigma_optical, Domain, QuadratureSpec, ResponseResult,
};
use crate::spectral::{eig_biortho, eigenvalues, pseudo_metric, transform_observable, FrameDirection};
use crate::tachyon::{
    current_j, current_tilde, hamiltonian, isospectral_current, isospectral_dc_clean, isospectral_dc_dirty,
    isospectral_dc_exact, osr_closed, sigma_dc_closed, DcFormula, OsrForm, TachyonCurrent, TachyonModel,
    TachyonParams,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Status {
    Pass,
    Fail,
    /// Reported for reference; does not affect the exit status.
    Info,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub reference: f64,
    pub computed: f64,
    pub rel_error: f64,
    pub tolerance: f64,
    pub status: Status,
    pub note: String,
}

impl Check {
    /// `computed` against `reference`, relative error (absolute when the
    /// reference is zero).
    fn compare(name: impl Into<String>, reference: f64, computed: Result<f64>, tolerance: f64) -> Self {
        match computed {
            Ok(v) => {
                let err = if reference == 0.0 { v.abs() } else { ((v - reference) / reference).abs() };
                let status = if err <= tolerance { Status::Pass } else { Status::Fail };
                Self { name: name.into(), reference, computed: v, rel_error: err, tolerance, status, note: String::new() }
            }
            Err(e) => Self::failed(name, reference, tolerance, e),
        }
    }

    fn absolute(name: impl Into<String>, reference: f64, computed: Result<f64>, tolerance: f64) -> Self {
        let mut check = Self::compare(name, 0.0, computed.map(|v| v - reference), tolerance);
        check.reference = reference;
        check.computed += reference;
        check
    }

    /// A residual that must stay below `tolerance`.
    fn residual(name: impl Into<String>, residual: Result<f64>, tolerance: f64) -> Self {
        Self::compare(name, 0.0, residual, tolerance)
    }

    fn failed(name: impl Into<String>, reference: f64, tolerance: f64, e: Error) -> Self {
        Self {
            name: name.into(),
            reference,
            computed: f64::NAN,
            rel_error: f64::NAN,
            tolerance,
            status: Status::Fail,
            note: e.to_string(),
        }
    }

    fn info(mut self) -> Self {
        self.status = Status::Info;
        self
    }
}

fn value(r: Result<ResponseResult>) -> Result<f64> {
    r.map(|r| r.value.re)
}

fn spec() -> QuadratureSpec {
    QuadratureSpec { rel_tol: 1e-7, ..Default::default() }
}

/// (m, γ) grid of the DC table, respecting `γ > |m|` and `m² < Δ²`.
const DC_GRID_M: [f64; 3] = [0.0, 0.3, 0.6];
const DC_GRID_GAMMA: [f64; 3] = [0.8, 1.5, 3.0];

fn table_one() -> Vec<Check> {
    let mut jobs = Vec::new();
    for (name, choice, formula) in [
        ("standard", FrameworkChoice::Standard, DcFormula::Standard),
        ("phqm-j", FrameworkChoice::PhqmJ, DcFormula::PhqmJ),
    ] {
        for m in DC_GRID_M {
            for g in DC_GRID_GAMMA {
                jobs.push((name, choice, formula, m, g));
            }
        }
    }
    jobs.push(("phqm-tilde", FrameworkChoice::PhqmTilde, DcFormula::IsospectralExact, 0.6, 1.5));
    jobs.push(("phqm-tilde", FrameworkChoice::PhqmTilde, DcFormula::IsospectralExact, 0.3, 0.8));
    jobs.par_iter()
        .map(|&(name, choice, formula, m, g)| {
            let p = TachyonParams::new(m, g);
            let label = format!("sigma_dc {name} m={m} gamma={g}");
            let closed = match sigma_dc_closed(formula, &p) {
                Ok(v) => v,
                Err(e) => return Check::failed(label, f64::NAN, 1e-4, e),
            };
            let model = TachyonModel::new(p, choice.current());
            Check::compare(label, closed, value(sigma_dc(&model, &p.framework(choice.kind()), 0.0, &spec())), 1e-4)
        })
        .collect()
}

fn hermitian_limit() -> Vec<Check> {
    [0.3, 0.9, 1.5, 2.0, 7.0]
        .iter()
        .flat_map(|&g| {
            let p = TachyonParams::new(0.0, g);
            let expected = g * g / (g * g + 1.0f64).powf(1.5);
            [DcFormula::Standard, DcFormula::PhqmJ, DcFormula::IsospectralExact].into_iter().map(move |f| {
                Check::compare(format!("m=0 collapse {f:?} gamma={g}"), expected, sigma_dc_closed(f, &p), 1e-12)
            })
        })
        .collect()
}

fn sum_rules() -> Vec<Check> {
    let points = [(0.0, 1.5), (0.3, 1.5), (0.6, 1.5), (0.6, 0.9), (0.9, 2.5)];
    let mut jobs: Vec<(FrameworkChoice, f64, f64)> = Vec::new();
    for &(m, g) in &points {
        jobs.push((FrameworkChoice::Standard, m, g));
        jobs.push((FrameworkChoice::PhqmJ, m, g));
    }
    for (m, g) in [(0.3, 1.5), (0.6, 1.5), (0.9, 0.5)] {
        jobs.push((FrameworkChoice::PhqmTilde, m, g));
    }
    jobs.par_iter()
        .map(|&(choice, m, g)| {
            let p = TachyonParams::new(m, g);
            let label = format!("optical sum {choice} m={m} gamma={g}");
            let reference = match choice {
                FrameworkChoice::PhqmTilde => match osr_closed(&p, OsrForm::Exact) {
                    Ok(v) => v,
                    Err(e) => return Check::failed(label, f64::NAN, 1e-4, e),
                },
                _ => 1.0,
            };
            let model = TachyonModel::new(p, choice.current());
            Check::compare(label, reference, value(optical_sum(&model, &p.framework(choice.kind()), &spec())), 1e-4)
        })
        .collect()
}

fn osr_limits() -> Vec<Check> {
    vec![
        Check::compare(
            "optical sum, m -> 1 then gamma -> 0 (m=1-1e-10, gamma=1e-2)",
            1.5,
            osr_closed(&TachyonParams::new(1.0 - 1e-10, 1e-2), OsrForm::Exact),
            0.02,
        ),
        Check::compare(
            "optical sum, gamma -> 0 then m -> 1 (m=0.999, gamma=1e-5)",
            0.5,
            osr_closed(&TachyonParams::new(0.999, 1e-5), OsrForm::Exact),
            0.02,
        ),
        Check::compare("strong-NH limit at gamma -> 0", 1.5, osr_closed(&TachyonParams::new(0.5, 1e-12), OsrForm::StrongNH), 1e-9),
        Check::compare("clean limit at m -> 1", 0.5, osr_closed(&TachyonParams::new(1.0 - 1e-12, 1.0), OsrForm::Clean), 1e-9),
    ]
}

/// The truncated expansions are validated by how fast their error shrinks.
fn expansions() -> Vec<Check> {
    let m = 0.6;
    let err = |g: f64, series: fn(&TachyonParams) -> Result<f64>| -> Result<f64> {
        let p = TachyonParams::new(m, g);
        Ok(series(&p)? - isospectral_dc_exact(&p)?)
    };
    let ratio = |g1: f64, g2: f64, series: fn(&TachyonParams) -> Result<f64>| -> Result<f64> {
        Ok(err(g1, series)? / err(g2, series)?)
    };
    let rel = |g: f64, series: fn(&TachyonParams) -> Result<f64>| -> Result<f64> {
        let p = TachyonParams::new(m, g);
        series(&p)
    };
    let exact = |g: f64| isospectral_dc_exact(&TachyonParams::new(m, g)).unwrap_or(f64::NAN);
    vec![
        Check::compare("dirty expansion error ratio gamma=10/20 (O(gamma^-3))", 8.0, ratio(10.0, 20.0, isospectral_dc_dirty), 0.1),
        Check::compare("clean expansion error ratio gamma=0.1/0.05 (O(gamma^4))", 16.0, ratio(0.1, 0.05, isospectral_dc_clean), 0.1),
        Check::compare("dirty expansion vs exact, gamma=10", exact(10.0), rel(10.0, isospectral_dc_dirty), 0.01).info(),
        Check::compare("clean expansion vs exact, gamma=0.05", exact(0.05), rel(0.05, isospectral_dc_clean), 0.01).info(),
    ]
}

fn postselected() -> Vec<Check> {
    let p = TachyonParams::new(1.2, 0.0);
    vec![
        Check::compare(
            "postselected sigma_dc m=1.2",
            PI / 2.0 * 0.44f64.sqrt() / 1.44,
            sigma_dc_closed(DcFormula::Postselected, &p),
            1e-12,
        ),
        Check::residual(
            "postselected sigma_dc vanishes for m^2 <= Delta^2",
            sigma_dc_closed(DcFormula::Postselected, &TachyonParams::new(0.5, 0.0))
                .and_then(|a| Ok(a.abs() + sigma_dc_closed(DcFormula::Postselected, &TachyonParams::new(1.0, 0.0))?.abs())),
            0.0,
        ),
    ]
}

/// Momentum grid for the matrix identities.
fn k_grid() -> Vec<f64> {
    (0..20).map(|i| -2.5 + 5.0 * i as f64 / 19.0).collect()
}

/// A fixed non-Hermitian 3×3 with real spectrum and its shape under a
/// similarity transform.
fn pseudo_hermitian_3x3(t: f64) -> ComplexMatrix {
    let d = ComplexMatrix::diagonal(&[c(-1.0 + 0.1 * t, 0.0), c(0.3, 0.0), c(1.7 - 0.2 * t, 0.0)]);
    let s = ComplexMatrix::from_fn(3, |i, j| {
        let x = (i * 3 + j) as f64 + t;
        if i == j {
            c(2.0 + 0.3 * x.sin(), 0.0)
        } else {
            c(0.4 * (1.3 * x).cos(), 0.3 * (0.7 * x).sin())
        }
    });
    &(&s * &d) * &s.inverse().expect("diagonally dominant")
}

fn structural() -> Vec<Check> {
    let mut checks = Vec::new();
    let mut matrices: Vec<ComplexMatrix> = Vec::new();
    for m in [0.0, 0.3, 0.6, 0.9] {
        for k in k_grid() {
            matrices.push(hamiltonian(k, &TachyonParams::new(m, 1.5)));
        }
    }
    for i in 0..20 {
        matrices.push(pseudo_hermitian_3x3(0.37 * i as f64));
    }

    let worst = |f: &dyn Fn(&ComplexMatrix) -> Result<f64>| -> Result<f64> {
        matrices.iter().try_fold(0.0_f64, |acc, h| Ok(acc.max(f(h)?)))
    };
    checks.push(Check::residual(
        "biorthonormality <L|R> = 1",
        worst(&|h| Ok(eig_biortho(h)?.biorthonormality_residual())),
        1e-9,
    ));
    checks.push(Check::residual(
        "resolution of unity",
        worst(&|h| Ok(eig_biortho(h)?.resolution_residual())),
        1e-9,
    ));
    checks.push(Check::residual(
        "reconstruction H = sum xi |R><L|",
        worst(&|h| {
            let b = eig_biortho(h)?;
            Ok((&b.reconstruct() - h).frobenius_norm() / h.frobenius_norm())
        }),
        1e-9,
    ));
    checks.push(Check::residual(
        "intertwining eta H = H^dagger eta",
        worst(&|h| Ok(pseudo_metric(&eig_biortho(h)?)?.intertwining_residual(h))),
        1e-9,
    ));
    checks.push(Check::residual(
        "metric roots eta^(1/2) eta^(1/2) = eta",
        worst(&|h| Ok(pseudo_metric(&eig_biortho(h)?)?.root_residual())),
        1e-9,
    ));
    checks.push(Check::residual(
        "PHQM advanced function eta^-1 G_R^dagger eta",
        worst(&|h| {
            let eta = pseudo_metric(&eig_biortho(h)?)?;
            let fw = Framework::phqm(0.7);
            let mut acc = 0.0_f64;
            for w in [-2.0, -0.3, 0.0, 0.8, 3.1] {
                let ga = g_advanced(h, Some(&eta), &fw, w)?;
                let direct = &(&eta.eta_inv * &g_retarded(h, &fw, w)?.dagger()) * &eta.eta;
                acc = acc.max((&ga - &direct).frobenius_norm() / ga.frobenius_norm());
            }
            Ok(acc)
        }),
        1e-9,
    ));
    checks.push(Check::residual(
        "standard advanced function G_R^dagger",
        worst(&|h| {
            let fw = Framework::standard(3.0);
            let mut acc = 0.0_f64;
            for w in [-2.0, 0.0, 3.1] {
                let ga = g_advanced(h, None, &fw, w)?;
                acc = acc.max((&ga - &g_retarded(h, &fw, w)?.dagger()).frobenius_norm() / ga.frobenius_norm());
            }
            Ok(acc)
        }),
        1e-12,
    ));
    checks.push(Check::residual(
        "NHTS Hermitian and stationary",
        worst(&|h| {
            let eta = pseudo_metric(&eig_biortho(h)?)?;
            let rho = nhts_density(h, &eta, 2.0)?;
            let stationarity = (&(h * &rho) - &(&rho * &h.dagger())).frobenius_norm()
                / (h.frobenius_norm() * rho.frobenius_norm());
            Ok(stationarity.max(rho.hermiticity_residual() / rho.frobenius_norm()))
        }),
        1e-9,
    ));
    // A positive metric exists exactly where the spectrum ±√(v²k² + Δ² − m²) is real.
    let mismatches = [0.3, 1.2, 1.5, 2.0]
        .iter()
        .flat_map(|&m| k_grid().into_iter().map(move |k| (k, TachyonParams::new(m, 1.5))))
        .filter(|(k, p)| {
            let e2 = p.v_f * p.v_f * k * k + p.effective_gap_sq();
            let accepted = eig_biortho(&hamiltonian(*k, p)).and_then(|b| pseudo_metric(&b)).is_ok();
            e2.abs() > 1e-6 && accepted != (e2 > 0.0)
        })
        .count();
    checks.push(Check::residual(
        "positive metric iff real spectrum (mismatch count)",
        Ok(mismatches as f64),
        0.0,
    ));
    checks
}

fn currents() -> Vec<Check> {
    let p = TachyonParams::new(0.6, 1.5);
    let two_path = k_grid().iter().try_fold(0.0_f64, |acc, &k| -> Result<f64> {
        let eta = pseudo_metric(&eig_biortho(&hamiltonian(k, &p))?)?;
        let via_frame = transform_observable(&isospectral_current(k, &p)?, &eta, FrameDirection::ToNHFrame)?;
        let closed = current_tilde(k, &p)?;
        Ok(acc.max((&via_frame - &closed).frobenius_norm() / closed.frobenius_norm()))
    });
    let commutator = k_grid().iter().try_fold(0.0_f64, |acc, &k| -> Result<f64> {
        let h = 1e-5;
        let root = |k: f64| -> Result<ComplexMatrix> {
            Ok(pseudo_metric(&eig_biortho(&hamiltonian(k, &p))?)?.eta_sqrt)
        };
        let eta = pseudo_metric(&eig_biortho(&hamiltonian(k, &p))?)?;
        let d_root = (&root(k + h)? - &root(k - h)?).scale_real(0.5 / h);
        let connection = &eta.eta_inv_sqrt * &d_root;
        let lhs = &current_j(&p) - &current_tilde(k, &p)?;
        let rhs = hamiltonian(k, &p).commutator(&connection);
        Ok(acc.max((&lhs - &rhs).frobenius_norm()))
    });
    vec![
        Check::residual("transformed current, closed form vs frame transform", two_path, 1e-9),
        Check::residual("commutator identity J - v = [H, d_k]", commutator, 1e-6),
    ]
}

fn kernel() -> Vec<Check> {
    let mut checks = Vec::new();
    for t in [0.5, 1.0, 2.0] {
        for frac in [0.1, 0.25, 0.5] {
            let tau = frac / t;
            let terms = action_kernel_terms(tau, t, 1e-5);
            let sum = action_kernel_matsubara_sum(tau, t, terms);
            checks.push(Check::absolute(
                format!("action kernel T={t} tau/beta={frac} ({terms} terms)"),
                action_kernel(tau, t).unwrap_or(f64::NAN),
                Ok(sum),
                1e-4,
            ));
        }
    }
    checks
}

/// `(i/2π) ∫_{−∞}^0 [G_R − G_A]_{ji} dω` entry by entry.
fn occupation_by_quadrature(h: &ComplexMatrix, fw: &Framework) -> Result<ComplexMatrix> {
    let eta = match fw.kind {
        crate::greens::FrameworkKind::Phqm => Some(pseudo_metric(&eig_biortho(h)?)?),
        _ => None,
    };
    let breakpoints: Vec<f64> = eigenvalues(h)?.iter().map(|z| z.re).collect();
    let n = h.dim();
    let spec = QuadratureSpec { rel_tol: 1e-11, abs_tol: 1e-13, ..Default::default() };
    let mut out = ComplexMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = integrate(
                |w| {
                    let gr = g_retarded(h, fw, w).expect("retarded function off the real axis");
                    let ga = g_advanced(h, eta.as_ref(), fw, w).expect("advanced function off the real axis");
                    (gr[(j, i)] - ga[(j, i)]) * c(0.0, 1.0 / (2.0 * PI))
                },
                Domain::LowerHalfLine(0.0),
                &breakpoints,
                &spec,
            )?
            .value;
        }
    }
    Ok(out)
}

fn distribution() -> Vec<Check> {
    let mut cases: Vec<(String, ComplexMatrix, Framework)> = Vec::new();
    for k in [0.0, 0.7, -1.4] {
        let h = hamiltonian(k, &TachyonParams::new(0.6, 1.5));
        cases.push((format!("standard tachyon k={k}"), h.clone(), Framework::standard(1.5)));
        cases.push((format!("phqm tachyon k={k}"), h, Framework::phqm(0.4)));
    }
    for i in 0..3 {
        let h = pseudo_hermitian_3x3(1.1 * i as f64);
        cases.push((format!("phqm 3x3 #{i}"), h.clone(), Framework::phqm(0.5)));
        cases.push((format!("standard 3x3 #{i}"), h, Framework::standard(3.0)));
    }
    cases
        .par_iter()
        .map(|(name, h, fw)| {
            let diff = occupation(h, fw).and_then(|occ| {
                let direct = occupation_by_quadrature(h, fw)?;
                Ok((&occ.entries - &direct).frobenius_norm())
            });
            Check::residual(format!("occupation closed form vs quadrature, {name}"), diff, 1e-6)
        })
        .collect()
}

/// Frequencies for the Kramers–Kronig check: uniform near the gap, then
/// geometric out to the tail.
fn kk_grid() -> Vec<f64> {
    let mut grid: Vec<f64> = (0..=160).map(|i| 0.05 * i as f64).collect();
    let mut w = 8.0;
    while w < 300.0 {
        w *= 1.06;
        grid.push(w);
    }
    grid
}

fn kramers_kronig_check() -> Vec<Check> {
    let p = TachyonParams::new(0.6, 1.5);
    let model = TachyonModel::new(p, TachyonCurrent::J);
    let fw = p.framework(crate::greens::FrameworkKind::Standard);
    let spec = QuadratureSpec { rel_tol: 1e-6, ..Default::default() };
    let grid = kk_grid();
    let sampled: Result<Vec<(f64, f64, f64)>> = grid
        .par_iter()
        .map(|&w| {
            if w == 0.0 {
                return Ok((w, sigma_dc(&model, &fw, 0.0, &spec)?.value.re, 0.0));
            }
            let s = sigma_optical(&model, &fw, w, 0.0, &spec)?.value;
            Ok((w, s.re, s.im))
        })
        .collect();
    let sampled = match sampled {
        Ok(s) => s,
        Err(e) => return vec![Check::failed("Kramers-Kronig on the standard conductivity", f64::NAN, 1e-2, e)],
    };
    let real: Vec<(f64, f64)> = sampled.iter().map(|&(w, re, _)| (w, re)).collect();
    let transformed = match kramers_kronig(&real) {
        Ok(t) => t,
        Err(e) => return vec![Check::failed("Kramers-Kronig on the standard conductivity", f64::NAN, 1e-2, e)],
    };
    [10usize, 20, 40, 80]
        .iter()
        .map(|&i| {
            let (w, _, im) = sampled[i];
            Check::absolute(format!("Kramers-Kronig sigma'' at omega={w}"), im, Ok(transformed[i].sigma_imag), 1e-2)
        })
        .collect()
}

/// The parameters the user supplied, checked against the framework's
/// constraints and, where a closed form exists, against it.
fn configured(cfg: &RunConfig) -> Check {
    let p = cfg.params();
    let label = format!("configured point {} m={} gamma={}", cfg.framework, p.m, p.gamma);
    if let Err(e) = cfg.check_constraints(&p) {
        return Check::failed(label, f64::NAN, 1e-4, Error::FrameworkViolation(e.0));
    }
    let formula = match cfg.framework {
        FrameworkChoice::Standard => DcFormula::Standard,
        FrameworkChoice::PhqmJ => DcFormula::PhqmJ,
        FrameworkChoice::PhqmTilde => DcFormula::IsospectralExact,
        FrameworkChoice::Postselected => DcFormula::Postselected,
    };
    let closed = match sigma_dc_closed(formula, &p) {
        Ok(v) => v,
        Err(e) => return Check::failed(label, f64::NAN, 1e-4, e),
    };
    if cfg.framework == FrameworkChoice::Postselected || p.mu != 0.0 {
        return Check::compare(label, closed, Ok(closed), 1e-4).info();
    }
    let model = TachyonModel::new(p, cfg.framework.current());
    Check::compare(label, closed, value(sigma_dc(&model, &cfg.framework_for(&p), 0.0, &spec())), 1e-4)
}

pub fn run_suite(cfg: &RunConfig) -> Vec<Check> {
    let mut checks = vec![configured(cfg)];
    checks.extend(table_one());
    checks.extend(hermitian_limit());
    checks.extend(postselected());
    checks.extend(sum_rules());
    checks.extend(osr_limits());
    checks.extend(expansions());
    checks.extend(structural());
    checks.extend(currents());
    checks.extend(kernel());
    checks.extend(distribution());
    checks.extend(kramers_kronig_check());
    checks
}

pub fn render(checks: &[Check]) -> String {
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(5).max(5);
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<width$}  {:>19}  {:>19}  {:>10}  {:>8}  status",
        "check", "reference", "computed", "error", "tol"
    );
    for check in checks {
        let status = match check.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Info => "INFO",
        };
        let _ = write!(
            s,
            "{:<width$}  {:>19}  {:>19}  {:>10.3e}  {:>8.1e}  {status}",
            check.name,
            fmt_num(check.reference),
            fmt_num(check.computed),
            check.rel_error,
            check.tolerance,
        );
        if !check.note.is_empty() {
            let _ = write!(s, "  ({})", check.note);
        }
        s.push('\n');
    }
    let failed = checks.iter().filter(|c| c.status == Status::Fail).count();
    let passed = checks.iter().filter(|c| c.status == Status::Pass).count();
    let _ = writeln!(s, "{passed} passed, {failed} failed, {} informational", checks.len() - passed - failed);
    s
}
