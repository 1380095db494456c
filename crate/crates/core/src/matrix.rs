//! Dense square complex matrices.
//!
//! Storage is row-major and inline for dimensions up to four, so the 2x2
//! resolvent products that dominate the response integrals never touch the
//! heap. Decompositions that have no closed form are delegated to `nalgebra`.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use smallvec::SmallVec;

use crate::error::{Error, Result};

pub const I: Complex64 = Complex64::new(0.0, 1.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: SmallVec<[Complex64; 16]>,
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries, rejecting non-square or
    /// non-finite input.
    pub fn new(dim: usize, entries: Vec<Complex64>) -> Result<Self> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(Error::NotSquare(entries.len()));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { dim, data: SmallVec::from_vec(entries) })
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        assert!(dim > 0, "matrix dimension must be positive");
        let mut data = SmallVec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    pub fn from_rows<const N: usize>(rows: [[Complex64; N]; N]) -> Self {
        Self::from_fn(N, |i, j| rows[i][j])
    }

    /// Columns become the columns of the matrix.
    pub fn from_columns(columns: &[Vec<Complex64>]) -> Self {
        let dim = columns.len();
        Self::from_fn(dim, |i, j| columns[j][i])
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_fn(dim, |_, _| ZERO)
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| if i == j { ONE } else { ZERO })
    }

    pub fn diagonal(values: &[Complex64]) -> Self {
        Self::from_fn(values.len(), |i, j| if i == j { values[i] } else { ZERO })
    }

    pub fn sigma_x() -> Self {
        Self::from_rows([[ZERO, ONE], [ONE, ZERO]])
    }

    pub fn sigma_y() -> Self {
        Self::from_rows([[ZERO, -I], [I, ZERO]])
    }

    pub fn sigma_z() -> Self {
        Self::from_rows([[ONE, ZERO], [ZERO, -ONE]])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.dim).map(|i| self[(i, j)]).collect()
    }

    pub fn row(&self, i: usize) -> Vec<Complex64> {
        self.data[i * self.dim..(i + 1) * self.dim].to_vec()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn dagger(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|z| z * s).collect() }
    }

    /// `self + s * 1`.
    pub fn shift(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        for i in 0..self.dim {
            out[(i, i)] += s;
        }
        out
    }

    /// `‖M − M†‖_F`.
    pub fn hermiticity_residual(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += (self[(i, j)] - self[(j, i)].conj()).norm_sqr();
            }
        }
        acc.sqrt()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_residual() <= tol
    }

    /// `(M + M†) / 2`.
    pub fn hermitize(&self) -> Self {
        Self::from_fn(self.dim, |i, j| 0.5 * (self[(i, j)] + self[(j, i)].conj()))
    }

    /// Hermitian matrix `(M − M†) / 2i`, so that `M = herm + i * anti`.
    pub fn anti_hermitian_part(&self) -> Self {
        Self::from_fn(self.dim, |i, j| (self[(i, j)] - self[(j, i)].conj()) / (2.0 * I))
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    /// `⟨u| M |v⟩`.
    pub fn sandwich(&self, u: &[Complex64], v: &[Complex64]) -> Complex64 {
        let mut acc = ZERO;
        for i in 0..self.dim {
            let mut row = ZERO;
            for j in 0..self.dim {
                row += self[(i, j)] * v[j];
            }
            acc += u[i].conj() * row;
        }
        acc
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    /// `|u⟩⟨v|`.
    pub fn outer(u: &[Complex64], v: &[Complex64]) -> Self {
        Self::from_fn(u.len(), |i, j| u[i] * v[j].conj())
    }

    pub fn inverse(&self) -> Result<Self> {
        if self.dim == 2 {
            let [a, b, cc, d] = [self.data[0], self.data[1], self.data[2], self.data[3]];
            let det = a * d - b * cc;
            let scale = self.frobenius_norm().powi(2);
            if det.norm() <= f64::EPSILON * scale || !det.is_finite() {
                return Err(Error::SingularMatrix { eigenvalue: ZERO });
            }
            let inv_det = det.inv();
            return Ok(Self::from_rows([[d * inv_det, -b * inv_det], [-cc * inv_det, a * inv_det]]));
        }
        self.gauss_jordan_inverse()
    }

    fn gauss_jordan_inverse(&self) -> Result<Self> {
        let n = self.dim;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        let scale = self.data.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&p, &q| a[(p, col)].norm().total_cmp(&a[(q, col)].norm()))
                .unwrap();
            if a[(pivot, col)].norm() <= 1e3 * f64::EPSILON * scale.max(f64::MIN_POSITIVE) {
                return Err(Error::SingularMatrix { eigenvalue: ZERO });
            }
            if pivot != col {
                for j in 0..n {
                    a.data.swap(pivot * n + j, col * n + j);
                    inv.data.swap(pivot * n + j, col * n + j);
                }
            }
            let p = a[(col, col)].inv();
            for j in 0..n {
                a[(col, j)] *= p;
                inv[(col, j)] *= p;
            }
            for row in 0..n {
                if row == col {
                    continue;
                }
                let factor = a[(row, col)];
                if factor == ZERO {
                    continue;
                }
                for j in 0..n {
                    let (acj, icj) = (a[(col, j)], inv[(col, j)]);
                    a[(row, j)] -= factor * acj;
                    inv[(row, j)] -= factor * icj;
                }
            }
        }
        Ok(inv)
    }

    pub fn to_nalgebra(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self[(i, j)])
    }

    pub fn from_nalgebra(m: &DMatrix<Complex64>) -> Self {
        assert_eq!(m.nrows(), m.ncols());
        Self::from_fn(m.nrows(), |i, j| m[(i, j)])
    }

    /// Eigendecomposition of a Hermitian matrix: eigenvalues ascending and the
    /// unitary whose columns are the matching eigenvectors.
    pub fn hermitian_eigen(&self) -> (Vec<f64>, Self) {
        let h = self.hermitize();
        let eig = nalgebra::SymmetricEigen::new(h.to_nalgebra());
        let mut order: Vec<usize> = (0..self.dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = Self::from_fn(self.dim, |i, j| eig.eigenvectors[(i, order[j])]);
        (values, vectors)
    }

    /// Smallest eigenvalue of the Hermitian part, closed form for 2x2.
    pub fn min_hermitian_eigenvalue(&self) -> f64 {
        let h = self.hermitize();
        if self.dim == 2 {
            let a = h[(0, 0)].re;
            let d = h[(1, 1)].re;
            let b = h[(0, 1)].norm();
            return 0.5 * (a + d) - (0.25 * (a - d).powi(2) + b * b).sqrt();
        }
        h.hermitian_eigen().0[0]
    }

    /// `U f(Λ) U†` for a Hermitian matrix with spectral decomposition `U Λ U†`.
    pub fn hermitian_function(&self, f: impl Fn(f64) -> f64) -> Self {
        let (values, u) = self.hermitian_eigen();
        let fd: Vec<Complex64> = values.iter().map(|&x| c(f(x), 0.0)).collect();
        &(&u * &Self::diagonal(&fd)) * &u.dagger()
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.dim + j]
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{})", self.dim, self.dim)?;
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|j| format!("{:+.6e}{:+.6e}i", self[(i, j)].re, self[(i, j)].im))
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in addition");
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(rhs.data.iter()).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in subtraction");
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(rhs.data.iter()).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in product");
        let n = self.dim;
        if n == 2 {
            let (a, b) = (&self.data, &rhs.data);
            return ComplexMatrix::from_rows([
                [a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3]],
                [a[2] * b[0] + a[3] * b[2], a[2] * b[1] + a[3] * b[3]],
            ]);
        }
        ComplexMatrix::from_fn(n, |i, j| (0..n).map(|k| self[(i, k)] * rhs[(k, j)]).sum())
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.scale_real(-1.0)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $method:ident) => {
        impl $tr for ComplexMatrix {
            type Output = ComplexMatrix;
            fn $method(self, rhs: ComplexMatrix) -> ComplexMatrix {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&ComplexMatrix> for ComplexMatrix {
            type Output = ComplexMatrix;
            fn $method(self, rhs: &ComplexMatrix) -> ComplexMatrix {
                (&self).$method(rhs)
            }
        }
        impl $tr<ComplexMatrix> for &ComplexMatrix {
            type Output = ComplexMatrix;
            fn $method(self, rhs: ComplexMatrix) -> ComplexMatrix {
                self.$method(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        -&self
    }
}

/// `tr(A B)` without forming the product.
pub fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Complex64 {
    let n = a.dim();
    let mut acc = ZERO;
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn inner(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
