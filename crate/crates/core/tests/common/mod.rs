#![allow(dead_code)]

use std::f64::consts::PI;

use nhresponse::greens::{g_advanced, g_retarded, Framework, FrameworkKind};
use nhresponse::matrix::{c, ComplexMatrix};
use nhresponse::response::{integrate, Domain, QuadratureSpec};
use nhresponse::spectral::{eig_biortho, eigenvalues, pseudo_metric};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, |_, _| c(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale)))
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    gaussian_matrix(rng, n, 1.0).hermitize()
}

/// Real, well separated levels in `[-2, 2]`.
fn separated_levels(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let mut levels: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        levels.sort_by(f64::total_cmp);
        if levels.windows(2).all(|w| w[1] - w[0] > 0.2) && levels.iter().all(|x| x.abs() > 0.05) {
            return levels;
        }
    }
}

/// `S D S⁻¹` with real `D` and a well-conditioned, non-unitary `S`: a
/// non-Hermitian matrix with a real spectrum and a positive metric.
pub fn random_pseudo_hermitian(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    let d: Vec<Complex64> = separated_levels(rng, n).into_iter().map(|x| c(x, 0.0)).collect();
    let s = &ComplexMatrix::identity(n) + &gaussian_matrix(rng, n, 0.35);
    let s_inv = s.inverse().expect("perturbed identity is invertible");
    &(&s * &ComplexMatrix::diagonal(&d)) * &s_inv
}

/// `h₀ + iΓ` with Hermitian `h₀`, `Γ`; stable for the standard prescription
/// once `γ` exceeds the largest eigenvalue of `Γ` (returned alongside).
pub fn random_dissipative(rng: &mut ChaCha8Rng, n: usize) -> (ComplexMatrix, f64) {
    let h0 = random_hermitian(rng, n);
    let gamma_op = gaussian_matrix(rng, n, 0.4).hermitize();
    let (values, _) = gamma_op.hermitian_eigen();
    let top = values[n - 1];
    let h = &h0 + &gamma_op.scale(c(0.0, 1.0));
    (h, top.max(0.0) + rng.gen_range(0.2..1.0))
}

/// `(i/2π) ∫_{−∞}^0 [G_R − G_A]_{ji} dω` entry by entry, stored at `(i, j)`.
pub fn occupation_by_quadrature(h: &ComplexMatrix, fw: &Framework) -> ComplexMatrix {
    let eta = match fw.kind {
        FrameworkKind::Phqm => Some(pseudo_metric(&eig_biortho(h).unwrap()).unwrap()),
        _ => None,
    };
    let breakpoints: Vec<f64> = eigenvalues(h).unwrap().iter().map(|z| z.re).collect();
    let spec = QuadratureSpec { rel_tol: 1e-11, abs_tol: 1e-13, ..Default::default() };
    let n = h.dim();
    let mut out = ComplexMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = integrate(
                |w| {
                    let gr = g_retarded(h, fw, w).unwrap();
                    let ga = g_advanced(h, eta.as_ref(), fw, w).unwrap();
                    (gr[(j, i)] - ga[(j, i)]) * c(0.0, 1.0 / (2.0 * PI))
                },
                Domain::LowerHalfLine(0.0),
                &breakpoints,
                &spec,
            )
            .unwrap()
            .value;
        }
    }
    out
}

pub fn rel_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    (a - b).frobenius_norm() / b.frobenius_norm().max(f64::MIN_POSITIVE)
}
