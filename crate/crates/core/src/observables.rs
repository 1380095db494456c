//! Zero-temperature distribution functions and expectation values, and the
//! non-Hermitian thermal state of postselected dynamics.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::greens::{Framework, FrameworkKind};
use crate::matrix::{c, inner, ComplexMatrix, ZERO};
use crate::spectral::{eig_biortho, BiorthoSystem, PseudoMetric, TOL_REAL};

/// Poles closer than this (relative) to the negative real axis make the
/// principal logarithm ambiguous.
const BRANCH_TOL: f64 = 1e-6;

/// `⟨c†_i c_j⟩` stored at `(i, j)`.
#[derive(Debug, Clone)]
pub struct OccupationMatrix {
    pub entries: ComplexMatrix,
}

impl OccupationMatrix {
    /// `⟨O⟩ = Σ_ij O_ij ⟨c†_i c_j⟩`.
    pub fn expectation(&self, o: &ComplexMatrix) -> Complex64 {
        let n = o.dim();
        let mut acc = ZERO;
        for i in 0..n {
            for j in 0..n {
                acc += o[(i, j)] * self.entries[(i, j)];
            }
        }
        acc
    }

    pub fn particle_number(&self) -> Complex64 {
        self.entries.trace()
    }
}

/// Retarded poles `ξ_α − iγ` (with `δ₀` standing in for `γ = 0`) and the
/// biorthogonal system of `H`.
fn shifted_system(h: &ComplexMatrix, fw: &Framework) -> Result<(BiorthoSystem, Vec<Complex64>)> {
    fw.check(h)?;
    let sys = eig_biortho(h)?;
    let scale = sys.eigenvalues.iter().fold(0.0_f64, |s, z| s.max(z.norm())).max(f64::MIN_POSITIVE);
    for a in 0..sys.dim() {
        for b in (a + 1)..sys.dim() {
            if (sys.eigenvalues[a] - sys.eigenvalues[b]).norm() <= 1e-9 * scale {
                return Err(Error::DegenerateSpectrum(sys.eigenvalues[a], sys.eigenvalues[b]));
            }
        }
    }
    let g = fw.broadening();
    let poles: Vec<Complex64> = sys.eigenvalues.iter().map(|z| z - c(0.0, g)).collect();
    for &p in &poles {
        if p.im >= 0.0 && p.re < 0.0 && p.arg().abs() > PI - BRANCH_TOL {
            return Err(Error::BranchAmbiguity(p));
        }
    }
    Ok((sys, poles))
}

/// Zero-temperature occupation matrix
/// `(i/2π) Σ_α [Π^R_α log ξ_α − Π^A_α log ξ*_α]` (transposed into
/// `⟨c†_i c_j⟩` order). Postselected: the normalized ground-state projector.
pub fn occupation(h: &ComplexMatrix, fw: &Framework) -> Result<OccupationMatrix> {
    if fw.kind == FrameworkKind::Postselected {
        let sys = eig_biortho(h)?;
        let r0 = &sys.right_vectors[select_ground_state(&sys)?];
        let rho = ComplexMatrix::outer(r0, r0).scale_real(1.0 / inner(r0, r0).re);
        return Ok(OccupationMatrix { entries: transpose(&rho) });
    }
    let (sys, poles) = shifted_system(h, fw)?;
    let n = sys.dim();
    let mut m = ComplexMatrix::zeros(n);
    let prefactor = c(0.0, 1.0 / (2.0 * PI));
    for alpha in 0..n {
        let (r, l) = (&sys.right_vectors[alpha], &sys.left_vectors[alpha]);
        let log_xi = poles[alpha].ln();
        let log_xi_conj = poles[alpha].conj().ln();
        let pi_r = ComplexMatrix::outer(r, l);
        let pi_a = match fw.kind {
            FrameworkKind::Standard => ComplexMatrix::outer(l, r),
            _ => pi_r.clone(),
        };
        m = &m + &(&pi_r.scale(log_xi) - &pi_a.scale(log_xi_conj)).scale(prefactor);
    }
    Ok(OccupationMatrix { entries: transpose(&m) })
}

fn transpose(m: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::from_fn(m.dim(), |i, j| m[(j, i)])
}

/// Zero-temperature expectation value of a single-particle observable.
///
/// Standard: `(i/2π) Σ_α [log ξ_α ⟨L_α|O|R_α⟩ − log ξ*_α ⟨R_α|O|L_α⟩]`.
/// PHQM: `−(1/π) Σ_α arg ξ_α ⟨L_α|O|R_α⟩`.
/// Postselected: `⟨R_0|O|R_0⟩ / ⟨R_0|R_0⟩`.
pub fn expectation(o: &ComplexMatrix, h: &ComplexMatrix, fw: &Framework) -> Result<Complex64> {
    if o.dim() != h.dim() {
        return Err(Error::DimensionMismatch { expected: h.dim(), found: o.dim() });
    }
    if fw.kind == FrameworkKind::Postselected {
        let sys = eig_biortho(h)?;
        let r0 = &sys.right_vectors[select_ground_state(&sys)?];
        return Ok(o.sandwich(r0, r0) / inner(r0, r0));
    }
    let (sys, poles) = shifted_system(h, fw)?;
    let mut acc = ZERO;
    for (alpha, xi) in poles.iter().enumerate() {
        let (r, l) = (&sys.right_vectors[alpha], &sys.left_vectors[alpha]);
        match fw.kind {
            FrameworkKind::Standard => {
                acc += c(0.0, 1.0 / (2.0 * PI)) * (xi.ln() * o.sandwich(l, r) - xi.conj().ln() * o.sandwich(r, l));
            }
            _ => acc += -xi.arg() / PI * o.sandwich(l, r),
        }
    }
    Ok(acc)
}

/// PHQM occupation weights `−arg(ξ_α)/π` of the shifted poles.
pub fn phqm_weights(h: &ComplexMatrix, fw: &Framework) -> Result<Vec<f64>> {
    let (_, poles) = shifted_system(h, fw)?;
    Ok(poles.iter().map(|z| -z.arg() / PI).collect())
}

/// Ground state of postselected dynamics: maximum `Im ξ`, ties broken by
/// minimum `Re ξ`.
pub fn select_ground_state(b: &BiorthoSystem) -> Result<usize> {
    let scale = b.eigenvalues.iter().fold(0.0_f64, |s, z| s.max(z.norm())).max(f64::MIN_POSITIVE);
    let tol = TOL_REAL * scale;
    let top_im = b.eigenvalues.iter().map(|z| z.im).fold(f64::NEG_INFINITY, f64::max);
    let mut candidates: Vec<usize> = (0..b.dim()).filter(|&i| b.eigenvalues[i].im >= top_im - tol).collect();
    candidates.sort_by(|&x, &y| b.eigenvalues[x].re.total_cmp(&b.eigenvalues[y].re));
    if candidates.len() > 1 {
        let (z0, z1) = (b.eigenvalues[candidates[0]], b.eigenvalues[candidates[1]]);
        if (z1.re - z0.re).abs() <= tol {
            return Err(Error::DegenerateSelection(z0, z1));
        }
    }
    Ok(candidates[0])
}

/// Non-Hermitian thermal state `ρ = e^{−βH} η⁻¹ / tr(·)`.
pub fn nhts_density(h: &ComplexMatrix, eta: &PseudoMetric, beta: f64) -> Result<ComplexMatrix> {
    if !(beta > 0.0) {
        return Err(Error::Domain { value: beta, domain: "beta > 0" });
    }
    if h.dim() != eta.dim() {
        return Err(Error::DimensionMismatch { expected: h.dim(), found: eta.dim() });
    }
    let sys = eig_biortho(h)?;
    if !sys.has_real_spectrum(TOL_REAL) {
        let z = sys.eigenvalues.iter().max_by(|a, b| a.im.abs().total_cmp(&b.im.abs())).unwrap();
        return Err(Error::ComplexSpectrum { eigenvalue: *z });
    }
    // Shift by the lowest level so the Boltzmann factors stay in range.
    let e_min = sys.eigenvalues.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    let boltzmann = sys.matrix_function(|z| c((-beta * (z.re - e_min)).exp(), 0.0));
    let rho = &boltzmann * &eta.eta_inv;
    let rho = rho.scale(1.0 / rho.trace());
    let norm = rho.frobenius_norm();
    let residual = rho.hermiticity_residual() / norm;
    if residual > 1e-10 {
        return Err(Error::NotHermitian { what: "thermal state", residual });
    }
    let stationarity = (&(h * &rho) - &(&rho * &h.dagger())).frobenius_norm();
    let bound = 1e-9 * h.frobenius_norm() * norm;
    if stationarity > bound {
        return Err(Error::MetricInconsistent { what: "thermal-state stationarity", residual: stationarity / (h.frobenius_norm() * norm) });
    }
    Ok(rho.hermitize())
}
