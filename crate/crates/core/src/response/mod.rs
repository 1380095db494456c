//! Linear-response integrals: Kubo response, optical and DC conductivity,
//! the optical sum, the clean pseudo-Hermitian Lehmann formula and
//! Kramers–Kronig transforms.

mod kk;
mod kubo;
pub mod quadrature;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::matrix::ComplexMatrix;

pub use kk::{kramers_kronig, KkPoint};
pub use kubo::{chi_local, chi_phqm_clean, optical_sum, sigma_dc, sigma_optical};
pub use quadrature::{integrate, integrate_semi_infinite, Domain, QuadratureSpec, TailMap};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponseResult {
    pub value: Complex64,
    pub est_error: f64,
    pub evaluations: usize,
}

/// A momentum-resolved single-particle problem: `H(k)` and the two vertices
/// of the response function.
pub trait BandModel: Sync {
    fn hamiltonian(&self, k: f64) -> ComplexMatrix;

    fn vertex_a(&self, k: f64) -> Result<ComplexMatrix>;

    fn vertex_b(&self, k: f64) -> Result<ComplexMatrix> {
        self.vertex_a(k)
    }

    /// True when both vertices equal the k-independent `∂_k H`. The sea term
    /// of the zero-temperature DC conductivity is then a total k-derivative
    /// and is skipped.
    fn vertices_are_constant_velocity(&self) -> bool {
        false
    }

    /// Momenta where the integrand has structure (band extrema, gaps).
    fn k_breakpoints(&self) -> Vec<f64> {
        vec![0.0]
    }

    /// Momentum scale used by the tail map of the outer integral.
    fn k_scale(&self) -> f64 {
        1.0
    }
}

/// [`BandModel`] assembled from closures.
pub struct ClosureModel<FH, FA, FB> {
    pub hamiltonian: FH,
    pub vertex_a: FA,
    pub vertex_b: FB,
    pub k_scale: f64,
    pub k_breakpoints: Vec<f64>,
}

impl<FH, FA, FB> ClosureModel<FH, FA, FB>
where
    FH: Fn(f64) -> ComplexMatrix + Sync,
    FA: Fn(f64) -> ComplexMatrix + Sync,
    FB: Fn(f64) -> ComplexMatrix + Sync,
{
    pub fn new(hamiltonian: FH, vertex_a: FA, vertex_b: FB) -> Self {
        Self { hamiltonian, vertex_a, vertex_b, k_scale: 1.0, k_breakpoints: vec![0.0] }
    }
}

impl<FH, FA, FB> BandModel for ClosureModel<FH, FA, FB>
where
    FH: Fn(f64) -> ComplexMatrix + Sync,
    FA: Fn(f64) -> ComplexMatrix + Sync,
    FB: Fn(f64) -> ComplexMatrix + Sync,
{
    fn hamiltonian(&self, k: f64) -> ComplexMatrix {
        (self.hamiltonian)(k)
    }

    fn vertex_a(&self, k: f64) -> Result<ComplexMatrix> {
        Ok((self.vertex_a)(k))
    }

    fn vertex_b(&self, k: f64) -> Result<ComplexMatrix> {
        Ok((self.vertex_b)(k))
    }

    fn k_breakpoints(&self) -> Vec<f64> {
        self.k_breakpoints.clone()
    }

    fn k_scale(&self) -> f64 {
        self.k_scale
    }
}
