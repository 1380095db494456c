//! The (1+1)-dimensional Dirac model with real mass `Δ` and imaginary mass `m`,
//!
//! `H(k) = v_F k σ_x + Δ σ_y − i m σ_z − μ`,
//!
//! its currents, its isospectral Hermitian counterpart and the closed-form DC
//! conductivities and optical sums used as oracles for the numerics.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::greens::{Framework, FrameworkKind, DEFAULT_DELTA0};
use crate::matrix::{c, ComplexMatrix};
use crate::response::{integrate, BandModel, Domain, QuadratureSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TachyonParams {
    pub v_f: f64,
    pub delta: f64,
    pub m: f64,
    pub mu: f64,
    pub gamma: f64,
}

impl Default for TachyonParams {
    fn default() -> Self {
        Self { v_f: 1.0, delta: 1.0, m: 0.0, mu: 0.0, gamma: 1.5 }
    }
}

impl TachyonParams {
    /// `v_F = Δ = 1`, `μ = 0`.
    pub fn new(m: f64, gamma: f64) -> Self {
        Self { m, gamma, ..Self::default() }
    }

    pub fn effective_gap_sq(&self) -> f64 {
        self.delta * self.delta - self.m * self.m
    }

    /// Framework of the given kind carrying this parameter set's `γ`.
    pub fn framework(&self, kind: FrameworkKind) -> Framework {
        Framework { kind, gamma: self.gamma, delta0: DEFAULT_DELTA0 }
    }

    fn require_finite(&self) -> Result<()> {
        for (v, name) in [
            (self.v_f, "v_F"),
            (self.delta, "Delta"),
            (self.m, "m"),
            (self.mu, "mu"),
            (self.gamma, "gamma"),
        ] {
            if !v.is_finite() {
                return Err(Error::Regime(format!("{name} must be finite")));
            }
        }
        Ok(())
    }

    fn require_gapped(&self) -> Result<()> {
        self.require_finite()?;
        match regime(self).kind {
            RegimeKind::Gapped => Ok(()),
            kind => Err(Error::Regime(format!(
                "the isospectral frame needs Delta^2 > m^2 (Delta = {}, m = {}, {kind:?} phase)",
                self.delta, self.m
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegimeKind {
    Gapped,
    Linear,
    Tachyonic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseRegime {
    pub kind: RegimeKind,
    pub effective_gap_sq: f64,
}

/// Classifies the phase by the sign of `Δ² − m²` (relative tolerance `1e-12`).
pub fn regime(p: &TachyonParams) -> PhaseRegime {
    let gap = p.effective_gap_sq();
    let scale = (p.delta * p.delta).max(p.m * p.m).max(f64::MIN_POSITIVE);
    let kind = if gap.abs() <= 1e-12 * scale {
        RegimeKind::Linear
    } else if gap > 0.0 {
        RegimeKind::Gapped
    } else {
        RegimeKind::Tachyonic
    };
    PhaseRegime { kind, effective_gap_sq: gap }
}

pub fn hamiltonian(k: f64, p: &TachyonParams) -> ComplexMatrix {
    let vk = p.v_f * k;
    ComplexMatrix::from_rows([
        [c(-p.mu, -p.m), c(vk, -p.delta)],
        [c(vk, p.delta), c(-p.mu, p.m)],
    ])
}

/// `J = e ∂_k H = e v_F σ_x`.
pub fn current_j(p: &TachyonParams) -> ComplexMatrix {
    ComplexMatrix::sigma_x().scale_real(p.v_f)
}

fn energies(k: f64, p: &TachyonParams) -> (f64, f64) {
    let vk2 = (p.v_f * k).powi(2);
    ((vk2 + p.effective_gap_sq()).sqrt(), (vk2 + p.delta * p.delta).sqrt())
}

/// `h(k) = (E/E₀)(v_F k σ_x + Δ σ_y) − μ` with `E = √(v_F²k²+Δ²−m²)`, `E₀ = E|_{m=0}`.
pub fn isospectral_closed(k: f64, p: &TachyonParams) -> Result<ComplexMatrix> {
    p.require_gapped()?;
    let (e, e0) = energies(k, p);
    let r = e / e0;
    let vk = p.v_f * k;
    Ok(ComplexMatrix::from_rows([
        [c(-p.mu, 0.0), c(r * vk, -r * p.delta)],
        [c(r * vk, r * p.delta), c(-p.mu, 0.0)],
    ]))
}

/// `j = e ∂_k h`, differentiated analytically.
pub fn isospectral_current(k: f64, p: &TachyonParams) -> Result<ComplexMatrix> {
    p.require_gapped()?;
    let (e, e0) = energies(k, p);
    let v = p.v_f;
    let dr = v * v * k * p.m * p.m / (e * e0.powi(3));
    let r = e / e0;
    let x = dr * v * k + r * v;
    let y = dr * p.delta;
    Ok(ComplexMatrix::from_rows([[c(0.0, 0.0), c(x, -y)], [c(x, y), c(0.0, 0.0)]]))
}

/// Components `(a_x, a_y, a_z)` of the Bloch vector of the transformed current.
pub fn tilde_bloch_vector(k: f64, p: &TachyonParams) -> Result<[Complex64; 3]> {
    p.require_gapped()?;
    let (e, e0) = energies(k, p);
    let v = p.v_f;
    let vk = v * k;
    let d = p.delta;
    Ok([
        c(vk * vk / (e * e) + d * d * e / e0.powi(3), 0.0),
        c(vk * d * (1.0 / (e * e) - e / e0.powi(3)), 0.0),
        c(0.0, -vk * p.m / (e * e)),
    ])
}

/// `ṽ = η^{-1/2} (e ∂_k h) η^{1/2} = e v_F (a·σ)`.
pub fn current_tilde(k: f64, p: &TachyonParams) -> Result<ComplexMatrix> {
    let [ax, ay, az] = tilde_bloch_vector(k, p)?;
    let s = &(&ComplexMatrix::sigma_x().scale(ax) + &ComplexMatrix::sigma_y().scale(ay))
        + &ComplexMatrix::sigma_z().scale(az);
    Ok(s.scale_real(p.v_f))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TachyonCurrent {
    /// `H(k)` with `J = v_F σ_x`.
    J,
    /// `H(k)` with the transformed current `ṽ(k)`.
    Tilde,
    /// `h(k)` with `j = ∂_k h`; trace-equivalent to `Tilde`.
    HermitianFrame,
}

/// The model as a [`BandModel`] for the response integrals. Both vertices are
/// the chosen current.
#[derive(Debug, Clone, Copy)]
pub struct TachyonModel {
    pub params: TachyonParams,
    pub current: TachyonCurrent,
}

impl TachyonModel {
    pub fn new(params: TachyonParams, current: TachyonCurrent) -> Self {
        Self { params, current }
    }
}

impl BandModel for TachyonModel {
    fn hamiltonian(&self, k: f64) -> ComplexMatrix {
        match self.current {
            TachyonCurrent::HermitianFrame => isospectral_closed(k, &self.params)
                .unwrap_or_else(|_| hamiltonian(k, &self.params)),
            _ => hamiltonian(k, &self.params),
        }
    }

    fn vertex_a(&self, k: f64) -> Result<ComplexMatrix> {
        match self.current {
            TachyonCurrent::J => Ok(current_j(&self.params)),
            TachyonCurrent::Tilde => current_tilde(k, &self.params),
            TachyonCurrent::HermitianFrame => isospectral_current(k, &self.params),
        }
    }

    fn vertices_are_constant_velocity(&self) -> bool {
        self.current == TachyonCurrent::J
    }

    fn k_breakpoints(&self) -> Vec<f64> {
        let p = &self.params;
        let gap = p.effective_gap_sq().abs().sqrt() / p.v_f;
        let mut out = vec![0.0];
        if gap > 0.0 && gap < p.delta.abs() / p.v_f {
            out.extend([-gap, gap]);
        }
        out
    }

    fn k_scale(&self) -> f64 {
        let s = self.params.delta.abs().max(self.params.gamma.abs()) / self.params.v_f;
        if s > 0.0 {
            s
        } else {
            1.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DcFormula {
    Standard,
    PhqmJ,
    Postselected,
    /// Exact closed form for the transformed current.
    IsospectralExact,
    /// Leading terms of the dirty (`γ̄ > 1`) or clean (`γ̄ ≤ 1`) expansion.
    IsospectralExpansion,
}

/// Closed-form DC conductivity in units `e²v_F/(2π)`.
pub fn sigma_dc_closed(formula: DcFormula, p: &TachyonParams) -> Result<f64> {
    p.require_finite()?;
    let (d2, m2, g2) = (p.delta * p.delta, p.m * p.m, p.gamma * p.gamma);
    match formula {
        DcFormula::Standard => {
            if !(p.gamma > p.m.abs()) {
                return Err(Error::Regime(format!(
                    "standard framework needs gamma > |m| (gamma = {}, m = {})",
                    p.gamma, p.m
                )));
            }
            Ok((g2 - m2) / (g2 + d2 - m2).powf(1.5))
        }
        DcFormula::PhqmJ => {
            p.require_gapped()?;
            Ok(g2 / (g2 + d2 - m2).powf(1.5))
        }
        DcFormula::Postselected => {
            if m2 > d2 {
                Ok(0.5 * PI * (m2 - d2).sqrt() / m2)
            } else {
                Ok(0.0)
            }
        }
        DcFormula::IsospectralExact => isospectral_dc_exact(p),
        DcFormula::IsospectralExpansion => {
            if p.gamma > p.delta.abs() {
                isospectral_dc_dirty(p)
            } else {
                isospectral_dc_clean(p)
            }
        }
    }
}

fn require_isospectral_dc(p: &TachyonParams) -> Result<()> {
    p.require_gapped()?;
    if !(p.gamma > 0.0) {
        return Err(Error::Regime(format!("the isospectral DC conductivity needs gamma > 0 (gamma = {})", p.gamma)));
    }
    Ok(())
}

/// `γ⁻¹ + (2|Δ| − m²/|Δ| − 2√(Δ²−m²)) γ⁻²`.
pub fn isospectral_dc_dirty(p: &TachyonParams) -> Result<f64> {
    require_isospectral_dc(p)?;
    let d = p.delta.abs();
    let m2 = p.m * p.m;
    Ok(1.0 / p.gamma + (2.0 * d - m2 / d - 2.0 * (d * d - m2).sqrt()) / (p.gamma * p.gamma))
}

/// `[(8Δ⁴ − 8Δ²m² + m⁴)/(4m⁴(Δ²−m²)^{3/2}) − (m² + 2Δ²)/(m⁴|Δ|)] γ²`.
pub fn isospectral_dc_clean(p: &TachyonParams) -> Result<f64> {
    require_isospectral_dc(p)?;
    let (d2, m2) = (p.delta * p.delta, p.m * p.m);
    if m2 == 0.0 {
        // The bracket tends to 1/|Δ|³ as m → 0.
        return Ok(p.gamma * p.gamma / p.delta.abs().powi(3));
    }
    let m4 = m2 * m2;
    let bracket = (8.0 * d2 * d2 - 8.0 * d2 * m2 + m4) / (4.0 * m4 * (d2 - m2).powf(1.5))
        - (m2 + 2.0 * d2) / (m4 * p.delta.abs());
    Ok(bracket * p.gamma * p.gamma)
}

/// Momentum integrand of the isospectral DC conductivity, units `e²v_F/(2π)`
/// after `∫dk` (with `v_F = 1` momentum).
fn isospectral_dc_integrand(x: f64, p: &TachyonParams) -> f64 {
    let (d2, m2, g2) = (p.delta * p.delta, p.m * p.m, p.gamma * p.gamma);
    let e0sq = x * x + d2;
    let esq = e0sq - m2;
    let num = e0sq.powi(3) - 2.0 * d2 * m2 * e0sq + d2 * m2 * m2;
    let den = e0sq * e0sq * esq * (esq + g2).powi(2);
    2.0 * g2 / PI * num / den
}

/// Exact DC conductivity for the transformed current, `e²v_F/(2π)`.
///
/// The rational closed form has a removable singularity at `γ² = m²`; near it
/// the momentum integral is evaluated instead.
pub fn isospectral_dc_exact(p: &TachyonParams) -> Result<f64> {
    require_isospectral_dc(p)?;
    let (d2, m2, g2) = (p.delta * p.delta, p.m * p.m, p.gamma * p.gamma);
    let d = p.delta.abs();
    if (g2 - m2).abs() < 0.05 * g2.max(d2) {
        let spec = QuadratureSpec { rel_tol: 1e-13, abs_tol: 1e-15, ..Default::default() }.with_scale(d);
        let r = integrate(|x| c(isospectral_dc_integrand(x, p), 0.0), Domain::RealLine(0.0), &[0.0], &spec)?;
        return Ok(r.value.re);
    }
    let (m4, g4) = (m2 * m2, g2 * g2);
    let t1 = g4 * (g2 * (2.0 * d2 - m2) + 2.0 * d2 * m2 + m4) / d;
    let t2 = -2.0 * (d2 - m2).sqrt() * (g2 - m2).powi(3);
    let poly = g4 * g4 * g2 + m4 * m4 * (9.0 * g2 + 4.0 * d2)
        - m4 * m2 * (16.0 * g4 + 15.0 * g2 * d2 + 2.0 * d2 * d2)
        + g2 * m4 * (14.0 * g4 + 23.0 * g2 * d2 + 6.0 * d2 * d2)
        - 2.0 * g4 * m2 * (3.0 * g4 + 6.0 * g2 * d2 + 4.0 * d2 * d2)
        - 2.0 * m4 * m4 * m2;
    let t3 = poly / (g2 + d2 - m2).powf(1.5);
    Ok((t1 + t2 + t3) / (g2 * (g2 - m2).powi(3)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OsrForm {
    Exact,
    WeakNH,
    StrongNH,
    Clean,
}

/// Real part of `artanh` continued past `|x| = 1`: `½ ln|(1+x)/(1−x)|`.
fn artanh_re(x: f64) -> f64 {
    if x.abs() < 1.0 {
        x.atanh()
    } else {
        0.5 * ((1.0 + x) / (1.0 - x)).abs().ln()
    }
}

/// Optical sum for the transformed current, in units `e²v_F`, with
/// `m̄ = m/Δ`, `γ̄ = γ/Δ`.
pub fn osr_closed(p: &TachyonParams, which: OsrForm) -> Result<f64> {
    p.require_finite()?;
    if !(p.delta > 0.0) {
        return Err(Error::Regime(format!("the optical-sum closed forms assume Delta > 0 (Delta = {})", p.delta)));
    }
    let mb = (p.m / p.delta).abs();
    let gb = p.gamma / p.delta;
    match which {
        OsrForm::Clean => {
            if !(mb < 1.0) {
                return Err(Error::Regime(format!("clean optical sum needs |m/Delta| < 1 (got {mb})")));
            }
            if mb == 0.0 {
                return Ok(1.0);
            }
            Ok(0.5 * (1.0 + (1.0 / mb - mb) * mb.atanh()))
        }
        OsrForm::StrongNH => {
            if !(gb > 0.0) {
                return Err(Error::Regime(format!("optical sum needs gamma > 0 (gamma = {})", p.gamma)));
            }
            Ok(1.0 + 1.0 / (2.0 * (1.0 + gb)))
        }
        OsrForm::WeakNH => {
            if !(gb > 0.0) {
                return Err(Error::Regime(format!("optical sum needs gamma > 0 (gamma = {})", p.gamma)));
            }
            let r = (gb * gb + 1.0).sqrt();
            Ok(1.0 + (2.0 - 2.0 * r + gb * gb * (r - gb)) * mb * mb / (3.0 * gb.powi(3)))
        }
        OsrForm::Exact => {
            if !(gb > 0.0) {
                return Err(Error::Regime(format!("optical sum needs gamma > 0 (gamma = {})", p.gamma)));
            }
            if !(mb < 1.0) {
                return Err(Error::Regime(format!("isospectral optical sum needs |m/Delta| < 1 (got {mb})")));
            }
            if mb < 1e-6 {
                return osr_closed(p, OsrForm::WeakNH);
            }
            Ok(osr_exact_reduced(mb, gb))
        }
    }
}

/// Exact optical sum with `Δ = 1`.
fn osr_exact_reduced(m: f64, g: f64) -> f64 {
    let gap = (1.0 - m * m).sqrt();
    let s = (g * g + 1.0 - m * m).sqrt();
    let rational = g * (2.0 / (gap + s) - 1.0 / (1.0 + s));
    // artanh(m/γ) − artanh(mS/γ) evaluated as one logarithm ratio, which stays
    // finite through γ = m where both terms diverge.
    let x = m / g;
    let y = m * s / g;
    let ratio_minus = (g + m) * (1.0 - m * m) / (g + m * s);
    let difference = 0.5 * ((1.0 + x) / (1.0 + y)).abs().ln() + 0.5 * ratio_minus.abs().ln();
    let logs = difference + artanh_re(m);
    0.5 * (1.0 + rational + (1.0 / m - m) * logs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::eigenvalues;

    #[test]
    fn hamiltonian_spectrum() {
        let h = hamiltonian(0.0, &TachyonParams::new(0.0, 1.5));
        assert!((&h - &ComplexMatrix::sigma_y()).frobenius_norm() < 1e-15);
        let ev = eigenvalues(&hamiltonian(0.0, &TachyonParams::new(1.2, 1.5))).unwrap();
        assert!((ev[0] - c(0.0, 0.44f64.sqrt())).norm() < 1e-14, "{ev:?}");
        assert!((ev[1] - c(0.0, -(0.44f64.sqrt()))).norm() < 1e-14);
    }

    #[test]
    fn regimes() {
        assert_eq!(regime(&TachyonParams::new(0.5, 1.0)).kind, RegimeKind::Gapped);
        assert_eq!(regime(&TachyonParams::new(1.0, 1.0)).kind, RegimeKind::Linear);
        assert_eq!(regime(&TachyonParams::new(1.5, 1.0)).kind, RegimeKind::Tachyonic);
    }

    #[test]
    fn hermitian_limit_of_closed_forms() {
        for g in [0.3, 0.9, 1.5, 2.0, 7.0] {
            let p = TachyonParams::new(0.0, g);
            let expected = g * g / (g * g + 1.0f64).powf(1.5);
            for f in [DcFormula::Standard, DcFormula::PhqmJ, DcFormula::IsospectralExact] {
                assert!((sigma_dc_closed(f, &p).unwrap() - expected).abs() < 1e-13, "{f:?} {g}");
            }
            assert_eq!(sigma_dc_closed(DcFormula::Postselected, &p).unwrap(), 0.0);
        }
    }

    #[test]
    fn osr_limits() {
        assert_eq!(osr_closed(&TachyonParams::new(0.0, 1.0), OsrForm::Clean).unwrap(), 1.0);
        let exact_m0 = osr_closed(&TachyonParams::new(0.0, 1.3), OsrForm::Exact).unwrap();
        assert!((exact_m0 - 1.0).abs() < 1e-15);
        let tiny = osr_closed(&TachyonParams::new(1e-3, 1.3), OsrForm::Exact).unwrap();
        let weak = osr_closed(&TachyonParams::new(1e-3, 1.3), OsrForm::WeakNH).unwrap();
        assert!((tiny - weak).abs() < 1e-11, "{tiny} {weak}");
    }

    #[test]
    fn removable_singularity_is_smooth() {
        let below = isospectral_dc_exact(&TachyonParams::new(0.6, 0.6 * 1.2)).unwrap();
        let at = isospectral_dc_exact(&TachyonParams::new(0.6, 0.6)).unwrap();
        let above = isospectral_dc_exact(&TachyonParams::new(0.6, 0.6 / 1.2)).unwrap();
        assert!(at.is_finite() && at > 0.0);
        assert!((below - at).signum() == (at - above).signum());
    }
}
