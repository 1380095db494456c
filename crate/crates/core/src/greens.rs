//! Retarded, advanced and Matsubara Green's functions under each framework.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{c, ComplexMatrix, I};
use crate::spectral::{eigenvalues, PseudoMetric, TOL_REAL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FrameworkKind {
    /// Non-Hermitian terms are a dissipative self-energy; `G_A = G_R†`.
    Standard,
    /// Pseudo-Hermitian dynamics; `G_A = η⁻¹ G_R† η`.
    Phqm,
    /// Postselected (no-jump) dynamics; expectation values only.
    Postselected,
}

pub const DEFAULT_DELTA0: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Framework {
    pub kind: FrameworkKind,
    /// Uniform decay rate added as `H → H − iγ`.
    pub gamma: f64,
    /// Stand-in for `0⁺` whenever `gamma` is zero.
    pub delta0: f64,
}

impl Framework {
    pub fn standard(gamma: f64) -> Self {
        Self { kind: FrameworkKind::Standard, gamma, delta0: DEFAULT_DELTA0 }
    }

    pub fn phqm(gamma: f64) -> Self {
        Self { kind: FrameworkKind::Phqm, gamma, delta0: DEFAULT_DELTA0 }
    }

    pub fn postselected() -> Self {
        Self { kind: FrameworkKind::Postselected, gamma: 0.0, delta0: DEFAULT_DELTA0 }
    }

    pub fn with_delta0(mut self, delta0: f64) -> Self {
        self.delta0 = delta0;
        self
    }

    /// `gamma`, or `delta0` in the clean limit.
    pub fn broadening(&self) -> f64 {
        if self.gamma > 0.0 {
            self.gamma
        } else {
            self.delta0
        }
    }

    /// Checks the framework's precondition on `H`.
    ///
    /// Standard: the anti-Hermitian part of `H − iγ` must be negative definite.
    /// PHQM: the spectrum of `H` must be real.
    pub fn check(&self, h: &ComplexMatrix) -> Result<()> {
        if !(self.gamma >= 0.0) || !(self.delta0 >= 0.0) {
            return Err(Error::FrameworkViolation(format!(
                "gamma and delta0 must be >= 0 (got gamma = {}, delta0 = {})",
                self.gamma, self.delta0
            )));
        }
        match self.kind {
            FrameworkKind::Standard => {
                let gamma_matrix = h.anti_hermitian_part();
                let top = -(-&gamma_matrix).min_hermitian_eigenvalue();
                if top - self.gamma >= 0.0 {
                    return Err(Error::FrameworkViolation(format!(
                        "standard framework requires a negative-definite anti-Hermitian part: \
                         largest decay-rate eigenvalue {top:.6} is not below gamma = {}",
                        self.gamma
                    )));
                }
                Ok(())
            }
            FrameworkKind::Phqm => {
                let ev = eigenvalues(h)?;
                let scale = ev.iter().fold(0.0_f64, |s, z| s.max(z.norm()));
                match ev.iter().find(|z| z.im.abs() > TOL_REAL * scale) {
                    Some(z) => Err(Error::ComplexSpectrum { eigenvalue: *z }),
                    None => Ok(()),
                }
            }
            FrameworkKind::Postselected => Ok(()),
        }
    }
}

/// `(z − H)⁻¹`, reporting the nearest eigenvalue when the resolvent is singular.
pub fn resolvent(h: &ComplexMatrix, z: Complex64) -> Result<ComplexMatrix> {
    let shifted = (-h).shift(z);
    shifted.inverse().map_err(|_| {
        let nearest = eigenvalues(h)
            .ok()
            .and_then(|ev| ev.into_iter().min_by(|a, b| (a - z).norm().total_cmp(&(b - z).norm())))
            .unwrap_or(z);
        Error::SingularMatrix { eigenvalue: nearest }
    })
}

/// `G_R(ω) = (ω − H + iγ)⁻¹`, the same for the standard and PHQM readings.
pub fn g_retarded(h: &ComplexMatrix, fw: &Framework, omega: f64) -> Result<ComplexMatrix> {
    if fw.kind == FrameworkKind::Postselected {
        return Err(Error::Unsupported("retarded Green's function"));
    }
    fw.check(h)?;
    resolvent(h, c(omega, fw.gamma))
}

/// Advanced Green's function: `G_R†` (standard) or `η⁻¹ G_R† η` (PHQM).
pub fn g_advanced(
    h: &ComplexMatrix,
    eta: Option<&PseudoMetric>,
    fw: &Framework,
    omega: f64,
) -> Result<ComplexMatrix> {
    match fw.kind {
        FrameworkKind::Standard => Ok(g_retarded(h, fw, omega)?.dagger()),
        FrameworkKind::Phqm => {
            let eta = eta.ok_or(Error::MissingMetric)?;
            if eta.dim() != h.dim() {
                return Err(Error::DimensionMismatch { expected: h.dim(), found: eta.dim() });
            }
            let gr = g_retarded(h, fw, omega)?;
            Ok(&(&eta.eta_inv * &gr.dagger()) * &eta.eta)
        }
        FrameworkKind::Postselected => Err(Error::Unsupported("advanced Green's function")),
    }
}

/// Fermionic Matsubara frequency `(2n+1)πT`.
pub fn matsubara_frequency(n: i64, t: f64) -> f64 {
    (2 * n + 1) as f64 * PI * t
}

/// Matsubara Green's function for `H = h0 + iΓ`.
///
/// Standard: `(iω_n − h0 − i sgn(ω_n)(Γ − γ))⁻¹`, whose continuation
/// `iω_n → ω ± i0⁺` gives `G_R` and `G_R†`.
/// PHQM: `(iω_n − H + i sgn(ω_n) γ)⁻¹`; `H` itself carries no sign factor.
pub fn g_matsubara(
    h0: &ComplexMatrix,
    gamma_op: &ComplexMatrix,
    fw: &Framework,
    n: i64,
    t: f64,
) -> Result<ComplexMatrix> {
    if !(t > 0.0) {
        return Err(Error::Domain { value: t, domain: "T > 0" });
    }
    if h0.dim() != gamma_op.dim() {
        return Err(Error::DimensionMismatch { expected: h0.dim(), found: gamma_op.dim() });
    }
    for (m, what) in [(h0, "h0"), (gamma_op, "Gamma")] {
        let residual = m.hermiticity_residual() / m.frobenius_norm().max(1.0);
        if residual > 1e-12 {
            return Err(Error::NotHermitian { what, residual });
        }
    }
    let wn = matsubara_frequency(n, t);
    let sgn = wn.signum();
    let dim = h0.dim();
    let one = ComplexMatrix::identity(dim);
    let inverse_g = match fw.kind {
        FrameworkKind::Standard => {
            let decay = &gamma_op.scale(I) - &one.scale(c(0.0, fw.gamma));
            (&(-h0) - &decay.scale_real(sgn)).shift(c(0.0, wn))
        }
        FrameworkKind::Phqm => {
            let h = h0 + &gamma_op.scale(I);
            (-&h).shift(c(0.0, wn + sgn * fw.gamma))
        }
        FrameworkKind::Postselected => {
            return Err(Error::Unsupported("Matsubara Green's function"))
        }
    };
    inverse_g.inverse()
}

/// `A(ω) = i tr[G_R(ω) − G_A(ω)]` with the framework's advanced function.
pub fn spectral_function(
    h: &ComplexMatrix,
    eta: Option<&PseudoMetric>,
    fw: &Framework,
    omega: f64,
) -> Result<f64> {
    let gr = g_retarded(h, fw, omega)?;
    let ga = g_advanced(h, eta, fw, omega)?;
    let a = I * (gr.trace() - ga.trace());
    if a.im.abs() > 1e-10 * a.re.abs().max(1.0) {
        return Err(Error::FrameworkViolation(format!(
            "spectral function has imaginary residual {:.3e}",
            a.im
        )));
    }
    Ok(a.re)
}

/// Imaginary-time kernel `T csc(πTτ)`, the transform of `i sgn(ω_n)`.
pub fn action_kernel(tau: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain { value: t, domain: "T > 0" });
    }
    if !(tau > 0.0 && tau < 1.0 / t) {
        return Err(Error::Domain { value: tau, domain: "0 < tau < 1/T" });
    }
    Ok(t / (PI * t * tau).sin())
}

/// The Matsubara side of the kernel pair, `T Σ_n i sgn(ω_n) e^{−iω_n τ}`.
///
/// Partial sums of this series oscillate without converging, so they are
/// Cesàro-averaged: the first `terms` positive frequencies (paired with their
/// negative partners) get Fejér weights `1 − n/terms`. The deviation from the
/// closed form is bounded by `T / (terms · sin²(πTτ))`.
pub fn action_kernel_matsubara_sum(tau: f64, t: f64, terms: usize) -> f64 {
    let x = PI * t * tau;
    let m = terms as f64;
    let mut acc = 0.0;
    for n in 0..terms {
        let weight = 1.0 - n as f64 / m;
        acc += weight * 2.0 * ((2 * n + 1) as f64 * x).sin();
    }
    t * acc
}

/// Number of Fejér terms that brings the kernel sum within `tol` of the
/// closed form.
pub fn action_kernel_terms(tau: f64, t: f64, tol: f64) -> usize {
    let s = (PI * t * tau).sin();
    (t / (tol * s * s)).ceil() as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::ONE;
    use crate::spectral::{eig_biortho, pseudo_metric};

    fn tachyon_k0(m: f64) -> ComplexMatrix {
        ComplexMatrix::from_rows([[c(0.0, -m), -I], [I, c(0.0, m)]])
    }

    #[test]
    fn scalar_resolvent() {
        let g = g_retarded(&ComplexMatrix::zeros(1), &Framework::standard(1.0), 0.0).unwrap();
        assert!((g[(0, 0)] - c(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn tachyon_advanced_functions() {
        let h = tachyon_k0(0.6);
        let eta = pseudo_metric(&eig_biortho(&h).unwrap()).unwrap();
        let gr = g_retarded(&h, &Framework::standard(1.5), 0.0).unwrap();
        let expected_inv = ComplexMatrix::from_rows([[c(0.0, 2.1), I], [-I, c(0.0, 0.9)]]);
        assert!((&gr.inverse().unwrap() - &expected_inv).frobenius_norm() < 1e-14);

        let ga = g_advanced(&h, Some(&eta), &Framework::phqm(1.5), 0.0).unwrap();
        let direct = ComplexMatrix::from_rows([[c(0.0, -0.9), I], [-I, c(0.0, -2.1)]]);
        assert!((&ga.inverse().unwrap() - &direct).frobenius_norm() < 1e-12);
        assert!(matches!(
            g_advanced(&h, None, &Framework::phqm(1.5), 0.0),
            Err(Error::MissingMetric)
        ));
    }

    #[test]
    fn unstable_standard_input_is_rejected() {
        let h = tachyon_k0(0.6);
        assert!(matches!(
            g_retarded(&h, &Framework::standard(0.5), 0.0),
            Err(Error::FrameworkViolation(_))
        ));
    }

    #[test]
    fn singular_clean_resolvent_reports_pole() {
        let h = ComplexMatrix::sigma_z();
        match g_retarded(&h, &Framework::phqm(0.0), 1.0) {
            Err(Error::SingularMatrix { eigenvalue }) => assert!((eigenvalue - ONE).norm() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn scalar_matsubara_standard() {
        let gamma0 = 0.7;
        let g0 = ComplexMatrix::from_rows([[c(gamma0, 0.0)]]);
        let fw = Framework::standard(0.0);
        for n in -3..3 {
            let wn = matsubara_frequency(n, 0.5);
            let g = g_matsubara(&ComplexMatrix::zeros(1), &g0, &fw, n, 0.5).unwrap();
            let expected = 1.0 / c(0.0, wn - wn.signum() * gamma0);
            assert!((g[(0, 0)] - expected).norm() < 1e-14);
        }
    }

    #[test]
    fn kernel_values() {
        assert!((action_kernel(0.5, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((action_kernel(0.25, 1.0).unwrap() - 2f64.sqrt()).abs() < 1e-14);
        assert!(action_kernel(1.0, 1.0).is_err());
        let n = action_kernel_terms(0.25, 1.0, 1e-6);
        assert!((action_kernel_matsubara_sum(0.25, 1.0, n) - 2f64.sqrt()).abs() < 1e-6);
    }
}
