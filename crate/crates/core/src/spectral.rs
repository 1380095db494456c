//! Biorthogonal eigendecomposition, the pseudo-metric and the isospectral frame.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::{c, inner, norm, ComplexMatrix, ZERO};

/// Relative tolerance for biorthonormality and reconstruction.
pub const TOL_BIORTHO: f64 = 1e-10;
/// Relative tolerance for the metric identities.
pub const TOL_METRIC: f64 = 1e-10;
/// Relative tolerance on imaginary parts when a spectrum is declared real.
pub const TOL_REAL: f64 = 1e-9;
/// Eigenvector condition number above which a matrix is treated as sitting at
/// an exceptional point.
pub const COND_MAX: f64 = 1e8;

#[derive(Debug, Clone)]
pub struct BiorthoSystem {
    pub eigenvalues: Vec<Complex64>,
    /// Unit-norm right eigenvectors.
    pub right_vectors: Vec<Vec<Complex64>>,
    /// Left eigenvectors scaled so that `⟨L_α|R_β⟩ = δ_αβ`.
    pub left_vectors: Vec<Vec<Complex64>>,
    /// 2-norm condition number of the right-eigenvector matrix.
    pub condition: f64,
}

impl BiorthoSystem {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `|R_α⟩⟨L_α|`.
    pub fn projector(&self, alpha: usize) -> ComplexMatrix {
        ComplexMatrix::outer(&self.right_vectors[alpha], &self.left_vectors[alpha])
    }

    /// `Σ_α f(ξ_α) |R_α⟩⟨L_α|`.
    pub fn matrix_function(&self, f: impl Fn(Complex64) -> Complex64) -> ComplexMatrix {
        let n = self.dim();
        let mut out = ComplexMatrix::zeros(n);
        for alpha in 0..n {
            let w = f(self.eigenvalues[alpha]);
            let (r, l) = (&self.right_vectors[alpha], &self.left_vectors[alpha]);
            for i in 0..n {
                for j in 0..n {
                    out[(i, j)] += w * r[i] * l[j].conj();
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.matrix_function(|z| z)
    }

    /// `exp(−iHt)` from the spectral decomposition.
    pub fn evolution(&self, t: f64) -> ComplexMatrix {
        self.matrix_function(|z| (c(0.0, -t) * z).exp())
    }

    /// Overlap matrix `S_αβ = ⟨u_α|v_β⟩` between two vector families.
    pub fn overlap(us: &[Vec<Complex64>], vs: &[Vec<Complex64>]) -> ComplexMatrix {
        ComplexMatrix::from_fn(us.len(), |a, b| inner(&us[a], &vs[b]))
    }

    /// `‖S^{LR} − 1‖_F`.
    pub fn biorthonormality_residual(&self) -> f64 {
        let s = Self::overlap(&self.left_vectors, &self.right_vectors);
        (&s - &ComplexMatrix::identity(self.dim())).frobenius_norm()
    }

    /// `‖Σ_α |R_α⟩⟨L_α| − 1‖_F`.
    pub fn resolution_residual(&self) -> f64 {
        let unit = self.matrix_function(|_| c(1.0, 0.0));
        (&unit - &ComplexMatrix::identity(self.dim())).frobenius_norm()
    }

    fn spectral_scale(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
    }

    /// True when every `|Im ξ| ≤ tol · max|ξ|`.
    pub fn has_real_spectrum(&self, tol: f64) -> bool {
        let scale = self.spectral_scale();
        self.eigenvalues.iter().all(|z| z.im.abs() <= tol * scale)
    }
}

/// Lexicographic order: real part ascending, then imaginary part descending.
/// Real parts closer than a relative `1e-12` count as equal.
fn spectral_order(a: Complex64, b: Complex64, scale: f64) -> std::cmp::Ordering {
    if (a.re - b.re).abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
        b.im.total_cmp(&a.im)
    } else {
        a.re.total_cmp(&b.re)
    }
}

/// Eigenvalues only, sorted by the same rule as [`eig_biortho`]. Works at
/// exceptional points where the eigenvectors are undefined.
pub fn eigenvalues(m: &ComplexMatrix) -> Result<Vec<Complex64>> {
    if !m.is_finite() {
        return Err(Error::NonFinite);
    }
    let mut values = match m.dim() {
        1 => vec![m[(0, 0)]],
        2 => {
            let (l0, l1) = eigenvalues_2x2(m);
            vec![l0, l1]
        }
        _ => {
            let schur = nalgebra::Schur::new(m.to_nalgebra());
            let (_, t) = schur.unpack();
            (0..m.dim()).map(|i| t[(i, i)]).collect()
        }
    };
    let scale = values.iter().fold(0.0_f64, |s, z| s.max(z.norm()));
    values.sort_by(|a, b| spectral_order(*a, *b, scale));
    Ok(values)
}

fn eigenvalues_2x2(m: &ComplexMatrix) -> (Complex64, Complex64) {
    let (a, b, cc, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let half_tr = 0.5 * (a + d);
    let half_diff = 0.5 * (a - d);
    let root = (half_diff * half_diff + b * cc).sqrt();
    (half_tr - root, half_tr + root)
}

/// Right eigenvector of a 2x2 matrix for eigenvalue `lambda`, choosing the
/// better conditioned of the two row-derived candidates.
fn eigenvector_2x2(m: &ComplexMatrix, lambda: Complex64) -> Vec<Complex64> {
    let (a, b, cc, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let from_row0 = [b, lambda - a];
    let from_row1 = [lambda - d, cc];
    let v = if norm(&from_row0) >= norm(&from_row1) { from_row0 } else { from_row1 };
    let n = norm(&v);
    vec![v[0] / n, v[1] / n]
}

/// Eigenvalues and biorthonormal eigenvectors of a square matrix.
///
/// The 2x2 case is solved in closed form. Larger matrices go through a complex
/// Schur factorization followed by back substitution on the triangular factor.
/// Left vectors are the conjugated rows of the inverse right-eigenvector
/// matrix, so `⟨L_α|R_β⟩ = δ_αβ` holds to rounding.
pub fn eig_biortho(m: &ComplexMatrix) -> Result<BiorthoSystem> {
    if !m.is_finite() {
        return Err(Error::NonFinite);
    }
    let n = m.dim();
    let scale = m.frobenius_norm();
    let (values, rights): (Vec<Complex64>, Vec<Vec<Complex64>>) = match n {
        1 => (vec![m[(0, 0)]], vec![vec![c(1.0, 0.0)]]),
        2 => {
            let off = m[(0, 1)].norm() + m[(1, 0)].norm();
            if off <= 1e-15 * scale {
                // Already diagonal: the formula-based vectors would vanish for
                // equal diagonal entries.
                (
                    vec![m[(0, 0)], m[(1, 1)]],
                    vec![vec![c(1.0, 0.0), ZERO], vec![ZERO, c(1.0, 0.0)]],
                )
            } else {
                let (l0, l1) = eigenvalues_2x2(m);
                (vec![l0, l1], vec![eigenvector_2x2(m, l0), eigenvector_2x2(m, l1)])
            }
        }
        _ => schur_eigenvectors(m),
    };

    let mut order: Vec<usize> = (0..n).collect();
    let vscale = values.iter().fold(0.0_f64, |s, z| s.max(z.norm()));
    order.sort_by(|&a, &b| spectral_order(values[a], values[b], vscale));
    let eigenvalues: Vec<Complex64> = order.iter().map(|&i| values[i]).collect();
    let right_vectors: Vec<Vec<Complex64>> = order.iter().map(|&i| rights[i].clone()).collect();

    let v = ComplexMatrix::from_columns(&right_vectors);
    let condition = condition_number(&v);
    if !(condition <= COND_MAX) {
        return Err(Error::ExceptionalPoint { condition, limit: COND_MAX });
    }
    let v_inv = v
        .inverse()
        .map_err(|_| Error::ExceptionalPoint { condition: f64::INFINITY, limit: COND_MAX })?;
    let left_vectors = (0..n)
        .map(|alpha| v_inv.row(alpha).into_iter().map(|z| z.conj()).collect())
        .collect();

    Ok(BiorthoSystem { eigenvalues, right_vectors, left_vectors, condition })
}

fn schur_eigenvectors(m: &ComplexMatrix) -> (Vec<Complex64>, Vec<Vec<Complex64>>) {
    let n = m.dim();
    let (q, t) = nalgebra::Schur::new(m.to_nalgebra()).unpack();
    let tscale = t.iter().fold(0.0_f64, |s, z| s.max(z.norm())).max(f64::MIN_POSITIVE);
    let values: Vec<Complex64> = (0..n).map(|i| t[(i, i)]).collect();
    let mut rights = Vec::with_capacity(n);
    for i in 0..n {
        let lambda = values[i];
        let mut y = vec![ZERO; n];
        y[i] = c(1.0, 0.0);
        for j in (0..i).rev() {
            let mut acc = ZERO;
            for l in (j + 1)..=i {
                acc += t[(j, l)] * y[l];
            }
            let mut denom = t[(j, j)] - lambda;
            if denom.norm() < f64::EPSILON * tscale {
                // Repeated eigenvalue: a tiny shift keeps the solve finite and
                // the condition number then exposes the coalescence.
                denom = c(f64::EPSILON * tscale, 0.0);
            }
            y[j] = -acc / denom;
        }
        let x: Vec<Complex64> = (0..n).map(|r| (0..n).map(|s| q[(r, s)] * y[s]).sum()).collect();
        let nx = norm(&x);
        rights.push(x.into_iter().map(|z| z / nx).collect());
    }
    (values, rights)
}

fn condition_number(v: &ComplexMatrix) -> f64 {
    if v.dim() == 1 {
        return 1.0;
    }
    if v.dim() == 2 {
        let g = &v.dagger() * v;
        let lo = g.min_hermitian_eigenvalue();
        let hi = g.trace().re - lo;
        if lo <= 0.0 {
            return f64::INFINITY;
        }
        return (hi / lo).sqrt();
    }
    let svd = v.to_nalgebra().svd(false, false);
    let s = &svd.singular_values;
    let hi = s.iter().cloned().fold(0.0_f64, f64::max);
    let lo = s.iter().cloned().fold(f64::INFINITY, f64::min);
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

#[derive(Debug, Clone)]
pub struct PseudoMetric {
    pub eta: ComplexMatrix,
    pub eta_sqrt: ComplexMatrix,
    pub eta_inv_sqrt: ComplexMatrix,
    pub eta_inv: ComplexMatrix,
    pub min_eigenvalue: f64,
}

impl PseudoMetric {
    /// Wraps a Hermitian positive-definite matrix, computing its square roots
    /// from the Hermitian eigendecomposition.
    pub fn new(eta: ComplexMatrix) -> Result<Self> {
        let residual = eta.hermiticity_residual() / eta.frobenius_norm().max(f64::MIN_POSITIVE);
        if residual > TOL_METRIC {
            return Err(Error::NotHermitian { what: "metric", residual });
        }
        let eta = eta.hermitize();
        let (values, u) = eta.hermitian_eigen();
        let min_eigenvalue = values[0];
        if !(min_eigenvalue > 0.0) {
            return Err(Error::NotPositiveDefinite { min_eigenvalue });
        }
        let apply = |f: &dyn Fn(f64) -> f64| {
            let d: Vec<Complex64> = values.iter().map(|&x| c(f(x), 0.0)).collect();
            (&(&u * &ComplexMatrix::diagonal(&d)) * &u.dagger()).hermitize()
        };
        let eta_sqrt = apply(&|x| x.sqrt());
        let eta_inv_sqrt = apply(&|x| 1.0 / x.sqrt());
        let eta_inv = apply(&|x| 1.0 / x);
        Ok(Self { eta, eta_sqrt, eta_inv_sqrt, eta_inv, min_eigenvalue })
    }

    pub fn identity(dim: usize) -> Self {
        let one = ComplexMatrix::identity(dim);
        Self {
            eta: one.clone(),
            eta_sqrt: one.clone(),
            eta_inv_sqrt: one.clone(),
            eta_inv: one,
            min_eigenvalue: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.eta.dim()
    }

    /// `‖ηH − H†η‖_F / (‖η‖_F ‖H‖_F)`.
    pub fn intertwining_residual(&self, h: &ComplexMatrix) -> f64 {
        let lhs = &self.eta * h;
        let rhs = &h.dagger() * &self.eta;
        let denom = self.eta.frobenius_norm() * h.frobenius_norm();
        (&lhs - &rhs).frobenius_norm() / denom.max(f64::MIN_POSITIVE)
    }

    /// Largest relative residual among `η^{1/2}η^{1/2} = η`,
    /// `η^{1/2}η^{-1/2} = 1` and `ηη⁻¹ = 1`.
    pub fn root_residual(&self) -> f64 {
        let n = self.dim();
        let one = ComplexMatrix::identity(n);
        let sq = (&(&self.eta_sqrt * &self.eta_sqrt) - &self.eta).frobenius_norm()
            / self.eta.frobenius_norm();
        let inv_sqrt = (&(&self.eta_sqrt * &self.eta_inv_sqrt) - &one).frobenius_norm();
        let inv = (&(&self.eta * &self.eta_inv) - &one).frobenius_norm();
        sq.max(inv_sqrt).max(inv)
    }
}

/// Canonical metric `η = Σ_α |L_α⟩⟨L_α|` of a real-spectrum biorthogonal system.
pub fn pseudo_metric(b: &BiorthoSystem) -> Result<PseudoMetric> {
    let scale = b.spectral_scale();
    if let Some(z) = b.eigenvalues.iter().find(|z| z.im.abs() > TOL_REAL * scale) {
        return Err(Error::ComplexSpectrum { eigenvalue: *z });
    }
    let n = b.dim();
    let mut eta = ComplexMatrix::zeros(n);
    for l in &b.left_vectors {
        eta = &eta + &ComplexMatrix::outer(l, l);
    }
    PseudoMetric::new(eta.hermitize())
}

/// Isospectral Hermitian counterpart `h = η^{1/2} H η^{-1/2}`.
pub fn isospectral_map(h: &ComplexMatrix, eta: &PseudoMetric) -> Result<ComplexMatrix> {
    if h.dim() != eta.dim() {
        return Err(Error::DimensionMismatch { expected: eta.dim(), found: h.dim() });
    }
    let mapped = &(&eta.eta_sqrt * h) * &eta.eta_inv_sqrt;
    let residual = mapped.hermiticity_residual() / mapped.frobenius_norm().max(f64::MIN_POSITIVE);
    if residual > TOL_METRIC {
        return Err(Error::NotHermitian { what: "isospectral Hamiltonian", residual });
    }
    Ok(mapped.hermitize())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameDirection {
    /// `O ↦ η^{-1/2} O η^{1/2}`.
    ToNHFrame,
    /// `O ↦ η^{1/2} O η^{-1/2}`.
    ToHermitianFrame,
}

pub fn transform_observable(
    o: &ComplexMatrix,
    eta: &PseudoMetric,
    direction: FrameDirection,
) -> Result<ComplexMatrix> {
    if o.dim() != eta.dim() {
        return Err(Error::DimensionMismatch { expected: eta.dim(), found: o.dim() });
    }
    Ok(match direction {
        FrameDirection::ToNHFrame => &(&eta.eta_inv_sqrt * o) * &eta.eta_sqrt,
        FrameDirection::ToHermitianFrame => &(&eta.eta_sqrt * o) * &eta.eta_inv_sqrt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::I;

    fn tachyon_k0(m: f64) -> ComplexMatrix {
        ComplexMatrix::from_rows([[c(0.0, -m), -I], [I, c(0.0, m)]])
    }

    #[test]
    fn sigma_z_is_its_own_biorthogonal_system() {
        let b = eig_biortho(&ComplexMatrix::sigma_z()).unwrap();
        assert_eq!(b.eigenvalues, vec![c(-1.0, 0.0), c(1.0, 0.0)]);
        for a in 0..2 {
            for i in 0..2 {
                assert!((b.left_vectors[a][i] - b.right_vectors[a][i]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn tachyon_gap_and_exceptional_point() {
        let b = eig_biortho(&tachyon_k0(0.6)).unwrap();
        assert!((b.eigenvalues[0] - c(-0.8, 0.0)).norm() < 1e-14);
        assert!((b.eigenvalues[1] - c(0.8, 0.0)).norm() < 1e-14);
        assert!(b.biorthonormality_residual() < 1e-14);
        assert!(matches!(eig_biortho(&tachyon_k0(1.0)), Err(Error::ExceptionalPoint { .. })));
    }

    #[test]
    fn metric_and_isospectral_frame_at_k0() {
        let h = tachyon_k0(0.6);
        let eta = pseudo_metric(&eig_biortho(&h).unwrap()).unwrap();
        let r = (&(&(&eta.eta * &h) * &eta.eta_inv) - &h.dagger()).frobenius_norm();
        assert!(r < 1e-12 * h.frobenius_norm());
        let iso = isospectral_map(&h, &eta).unwrap();
        let expected = ComplexMatrix::sigma_y().scale_real(0.8);
        assert!((&iso - &expected).frobenius_norm() < 1e-12, "{iso:?}");
    }

    #[test]
    fn tachyonic_phase_has_no_metric() {
        let b = eig_biortho(&tachyon_k0(1.2)).unwrap();
        assert!(matches!(
            pseudo_metric(&b),
            Err(Error::ComplexSpectrum { .. } | Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn schur_path_handles_3x3() {
        let m = ComplexMatrix::from_rows([
            [c(1.0, 0.2), c(0.5, 0.0), c(0.0, -0.3)],
            [c(0.1, 0.0), c(-2.0, 0.0), c(0.4, 0.4)],
            [c(0.0, 1.0), c(0.2, 0.0), c(0.5, -0.1)],
        ]);
        let b = eig_biortho(&m).unwrap();
        assert!(b.biorthonormality_residual() < 1e-12);
        assert!((&b.reconstruct() - &m).frobenius_norm() < 1e-12);
        let ev = eigenvalues(&m).unwrap();
        for (x, y) in ev.iter().zip(&b.eigenvalues) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn defective_3x3_is_exceptional() {
        let m = ComplexMatrix::from_rows([
            [c(1.0, 0.0), c(1.0, 0.0), ZERO],
            [ZERO, c(1.0, 0.0), ZERO],
            [ZERO, ZERO, c(2.0, 0.0)],
        ]);
        assert!(matches!(eig_biortho(&m), Err(Error::ExceptionalPoint { .. })));
    }

    #[test]
    fn round_trip_between_frames() {
        let h = tachyon_k0(0.6);
        let eta = pseudo_metric(&eig_biortho(&h).unwrap()).unwrap();
        let o = ComplexMatrix::sigma_z();
        let there = transform_observable(&o, &eta, FrameDirection::ToNHFrame).unwrap();
        let back = transform_observable(&there, &eta, FrameDirection::ToHermitianFrame).unwrap();
        assert!((&back - &o).frobenius_norm() < 1e-12);
        assert!(transform_observable(&ComplexMatrix::identity(3), &eta, FrameDirection::ToNHFrame).is_err());
    }
}
