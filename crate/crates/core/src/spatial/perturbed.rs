use num_complex::Complex64;

use super::{check_len, SpatialOperator};
use crate::error::{Error, Result};
use crate::linalg::gmres;

/// `A + diag(d)` for a base operator `A` with a fast shifted solve.
///
/// Shifted systems are solved by GMRES preconditioned with the base operator
/// shifted by `sigma + mean(d)`, which is exact when `d` is constant.
#[derive(Debug, Clone)]
pub struct DiagonallyPerturbed<B> {
    base: B,
    diag: Vec<f64>,
    mean: f64,
    rel_tol: f64,
    restart: usize,
    max_iter: usize,
}

impl<B: SpatialOperator> DiagonallyPerturbed<B> {
    pub fn new(base: B, diag: Vec<f64>) -> Result<Self> {
        check_len(base.dim(), diag.len())?;
        if diag.iter().any(|d| !d.is_finite()) {
            return Err(Error::InvalidArgument("diagonal perturbation must be finite".into()));
        }
        let mean = if diag.is_empty() { 0.0 } else { diag.iter().sum::<f64>() / diag.len() as f64 };
        Ok(Self {
            base,
            diag,
            mean,
            rel_tol: 1e-13,
            restart: 40,
            max_iter: 400,
        })
    }

    /// Tolerance and iteration budget of the inner GMRES.
    pub fn with_inner(mut self, rel_tol: f64, restart: usize, max_iter: usize) -> Self {
        self.rel_tol = rel_tol;
        self.restart = restart;
        self.max_iter = max_iter;
        self
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn base(&self) -> &B {
        &self.base
    }
}

impl<B: SpatialOperator> SpatialOperator for DiagonallyPerturbed<B> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        self.base.apply(x, y);
        for ((yi, xi), d) in y.iter_mut().zip(x).zip(&self.diag) {
            *yi += d * xi;
        }
    }

    fn apply_real(&self, x: &[f64], y: &mut [f64]) {
        self.base.apply_real(x, y);
        for ((yi, xi), d) in y.iter_mut().zip(x).zip(&self.diag) {
            *yi += d * xi;
        }
    }

    fn shifted_solve(&self, shift: Complex64, rhs: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        let m = self.dim();
        check_len(m, rhs.len())?;
        check_len(m, out.len())?;
        let pre_shift = shift + self.mean;
        // Initial guess from the preconditioner alone.
        self.base.shifted_solve(pre_shift, rhs, out)?;
        let op = |x: &[Complex64], y: &mut [Complex64]| {
            self.apply(x, y);
            for (yi, xi) in y.iter_mut().zip(x) {
                *yi += shift * xi;
            }
        };
        let precond = |x: &[Complex64], y: &mut [Complex64]| self.base.shifted_solve(pre_shift, x, y);
        gmres(op, precond, rhs, out, self.rel_tol, self.restart, self.max_iter)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{lu_solve, vec_norm};
    use crate::spatial::Laplacian2dDirichlet;

    #[test]
    fn constant_diagonal_is_a_shift() {
        let lap = Laplacian2dDirichlet::new(6, 1.0 / 7.0).unwrap();
        let op = DiagonallyPerturbed::new(&lap, vec![2.5; 36]).unwrap();
        let g: Vec<Complex64> = (0..36).map(|i| Complex64::new(i as f64, 1.0)).collect();
        let sigma = Complex64::new(1.0, -3.0);
        let mut a = vec![Complex64::new(0.0, 0.0); 36];
        let mut b = vec![Complex64::new(0.0, 0.0); 36];
        op.shifted_solve(sigma, &g, &mut a).unwrap();
        lap.shifted_solve(sigma + 2.5, &g, &mut b).unwrap();
        let diff: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        assert!(vec_norm(&diff) <= 1e-12 * vec_norm(&b));
    }

    #[test]
    fn varying_diagonal_matches_dense() {
        let n = 7;
        let lap = Laplacian2dDirichlet::new(n, 2.0 / 8.0).unwrap();
        let diag: Vec<f64> = (0..n * n).map(|i| 3.0 * ((i as f64) * 0.7).sin().powi(2) - 1.0).collect();
        let op = DiagonallyPerturbed::new(&lap, diag).unwrap();
        let g: Vec<Complex64> = (0..n * n).map(|i| Complex64::new((i as f64).cos(), 0.2)).collect();
        let sigma = Complex64::new(0.4, 2.0);
        let mut w = vec![Complex64::new(0.0, 0.0); n * n];
        op.shifted_solve(sigma, &g, &mut w).unwrap();
        let mut a = op.to_dense();
        for i in 0..n * n {
            a[(i, i)] += sigma;
        }
        let reference = lu_solve(a, &g).unwrap();
        let diff: Vec<Complex64> = w.iter().zip(&reference).map(|(x, y)| x - y).collect();
        assert!(vec_norm(&diff) <= 1e-10 * vec_norm(&reference));
    }
}
