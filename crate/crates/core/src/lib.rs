//! Linear response of non-Hermitian quasiparticle Hamiltonians.
//!
//! The same effective Hamiltonian `H` can be read in three ways: as a
//! dissipative self-energy (standard interacting theory), as a pseudo-Hermitian
//! operator with unitary dynamics in a modified inner product, or as the
//! generator of postselected dynamics. The modules below build the Green's
//! functions, distribution functions and Kubo conductivities for each reading,
//! and [`tachyon`] provides the (1+1)-dimensional Dirac model with an imaginary
//! mass together with its closed-form results.
//!
//! Units: `e = v_F = 1` internally, energies in units of the real mass `Δ`
//! unless a caller chooses otherwise. Conductivities are reported in
//! `e²v_F/(2π)` and sum rules in `e²v_F`.

pub mod cli;
pub mod error;
pub mod greens;
pub mod matrix;
pub mod observables;
pub mod response;
pub mod spectral;
pub mod tachyon;

pub use error::{Error, Result};
pub use greens::{Framework, FrameworkKind};
pub use matrix::ComplexMatrix;
pub use response::{QuadratureSpec, ResponseResult};
pub use spectral::{BiorthoSystem, PseudoMetric};
pub use tachyon::TachyonParams;
