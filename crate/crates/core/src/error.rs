use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("Newton iteration for root {root} did not converge within {max_iter} iterations (|rho| = {residual:.3e})")]
    NonConvergence {
        root: usize,
        max_iter: usize,
        residual: f64,
    },

    #[error("roots {first} and {second} converged to the same value")]
    DuplicateRoots { first: usize, second: usize },

    #[error("root {root} is degenerate: |sin(theta)| = {sin_theta:.3e}")]
    DegenerateRoot { root: usize, sin_theta: f64 },

    #[error("zero pivot at row {index} of tridiagonal elimination")]
    ZeroPivot { index: usize },

    #[error("matrix is numerically singular")]
    SingularMatrix,

    #[error("shifted operator is singular for shift {shift} (mode {mode})")]
    SingularShift { shift: Complex64, mode: usize },

    #[error("inner iterative solve stalled after {iterations} iterations (relative residual {residual:.3e})")]
    InnerSolveFailed { iterations: usize, residual: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("overflow while building {0}")]
    Overflow(String),

    #[error("recovered solution has imaginary residue {ratio:.3e} relative to its norm")]
    NonRealSolution { ratio: f64 },

    #[error("simplified Newton iteration did not reach tolerance in {iterations} iterations (residual {residual:.3e})")]
    MaxIterExceeded { iterations: usize, residual: f64 },

    #[error("malformed decomposition dump: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
