//! Spatial operators `A` and the complex-shifted solves `(sigma I + A) w = g`
//! that make up step (b) of the diagonalization solver.

mod benchmark;
mod dense;
mod laplacian;
mod pair;
mod periodic;
mod perturbed;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;

pub use benchmark::{make_benchmark, BenchmarkKind, BenchmarkProblem, Nonlinearity, SemilinearProblem};
pub use dense::DenseOperator;
pub use laplacian::Laplacian2dDirichlet;
pub use pair::FirstOrderPair;
pub use periodic::Periodic1d;
pub use perturbed::DiagonallyPerturbed;

/// Magnitude below which a shifted eigenvalue counts as a collision.
pub const SINGULAR_SHIFT_TOL: f64 = 1e-12;

/// A linear operator on `C^m` with a solver for complex shifts.
///
/// Implementations are immutable after construction and `shifted_solve` only
/// uses per-call scratch, so a single operator serves concurrent solves.
pub trait SpatialOperator: Send + Sync {
    fn dim(&self) -> usize;

    /// `y = A x`.
    fn apply(&self, x: &[Complex64], y: &mut [Complex64]);

    /// Solves `(shift I + A) out = rhs`.
    fn shifted_solve(&self, shift: Complex64, rhs: &[Complex64], out: &mut [Complex64]) -> Result<()>;

    fn apply_real(&self, x: &[f64], y: &mut [f64]) {
        let xc: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let mut yc = vec![Complex64::new(0.0, 0.0); self.dim()];
        self.apply(&xc, &mut yc);
        for (d, s) in y.iter_mut().zip(&yc) {
            *d = s.re;
        }
    }

    /// Dense matrix of the operator, column by column. Meant for small sizes.
    fn to_dense(&self) -> CMatrix {
        let m = self.dim();
        let mut a = CMatrix::zeros(m, m);
        let mut e = vec![Complex64::new(0.0, 0.0); m];
        let mut col = vec![Complex64::new(0.0, 0.0); m];
        for j in 0..m {
            e[j] = Complex64::new(1.0, 0.0);
            self.apply(&e, &mut col);
            e[j] = Complex64::new(0.0, 0.0);
            a.column_mut(j).copy_from_slice(&col);
        }
        a
    }
}

impl<T: SpatialOperator + ?Sized> SpatialOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        (**self).apply(x, y)
    }
    fn shifted_solve(&self, shift: Complex64, rhs: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        (**self).shifted_solve(shift, rhs, out)
    }
    fn apply_real(&self, x: &[f64], y: &mut [f64]) {
        (**self).apply_real(x, y)
    }
}

impl<T: SpatialOperator + ?Sized> SpatialOperator for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        (**self).apply(x, y)
    }
    fn shifted_solve(&self, shift: Complex64, rhs: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        (**self).shifted_solve(shift, rhs, out)
    }
    fn apply_real(&self, x: &[f64], y: &mut [f64]) {
        (**self).apply_real(x, y)
    }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
