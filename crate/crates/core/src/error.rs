use num_complex::Complex64;
use thiserror::Error;

use crate::response::ResponseResult;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("matrix contains NaN or infinite entries")]
    NonFinite,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix must have dimension >= 1 and {0} entries do not form a square matrix")]
    NotSquare(usize),

    #[error("singular matrix (offending eigenvalue {eigenvalue})")]
    SingularMatrix { eigenvalue: Complex64 },

    #[error("exceptional point: eigenvector condition number {condition:.3e} exceeds {limit:.1e}")]
    ExceptionalPoint { condition: f64, limit: f64 },

    #[error("spectrum is not real: eigenvalue {eigenvalue} has imaginary part above tolerance")]
    ComplexSpectrum { eigenvalue: Complex64 },

    #[error("metric is not positive definite (minimum eigenvalue {min_eigenvalue:.3e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("{what} is not Hermitian (relative residual {residual:.3e})")]
    NotHermitian { what: &'static str, residual: f64 },

    #[error("metric invariant violated: {what} residual {residual:.3e}")]
    MetricInconsistent { what: &'static str, residual: f64 },

    #[error("the PHQM prescription requires a pseudo-metric")]
    MissingMetric,

    #[error("{0}")]
    FrameworkViolation(String),

    #[error("{0} is not supported by the postselected framework")]
    Unsupported(&'static str),

    #[error("value {value} outside the admissible domain {domain}")]
    Domain { value: f64, domain: &'static str },

    #[error("degenerate spectrum: eigenvalues {0} and {1} coincide")]
    DegenerateSpectrum(Complex64, Complex64),

    #[error("branch ambiguity: pole {0} lies on the negative real axis; supply gamma > 0 or delta0")]
    BranchAmbiguity(Complex64),

    #[error("ground-state selection is degenerate between {0} and {1}")]
    DegenerateSelection(Complex64, Complex64),

    #[error("quadrature did not converge: value {} with error estimate {:.3e} after {} evaluations", .0.value, .0.est_error, .0.evaluations)]
    NonConvergent(ResponseResult),

    #[error("integrand returned a non-finite value at x = {0}")]
    NonFiniteIntegrand(f64),

    #[error("insufficient grid: {0}")]
    InsufficientGrid(String),

    #[error("parameter regime violation: {0}")]
    Regime(String),
}
