use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{check_len, SpatialOperator, SINGULAR_SHIFT_TOL};
use crate::error::{Error, Result};

/// Circulant second difference `(2 u_i - u_{i-1} - u_{i+1}) / h^2` with
/// periodic wrap-around. Mode `k` of the DFT has eigenvalue
/// `(4/h^2) sin^2(pi k / m)`.
#[derive(Clone)]
pub struct Periodic1d {
    m: usize,
    h: f64,
    eig: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Periodic1d {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Periodic1d").field("m", &self.m).field("h", &self.h).finish()
    }
}

impl Periodic1d {
    pub fn new(m: usize, h: f64) -> Result<Self> {
        if m < 3 || !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidArgument(format!("need m >= 3 and h > 0 (got {m}, {h})")));
        }
        let eig = (0..m)
            .map(|k| {
                let s = (PI * k as f64 / m as f64).sin();
                4.0 / (h * h) * s * s
            })
            .collect();
        let mut planner = FftPlanner::new();
        Ok(Self {
            m,
            h,
            eig,
            forward: planner.plan_fft_forward(m),
            inverse: planner.plan_fft_inverse(m),
        })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eig
    }
}

impl SpatialOperator for Periodic1d {
    fn dim(&self) -> usize {
        self.m
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        let m = self.m;
        let inv_h2 = 1.0 / (self.h * self.h);
        for i in 0..m {
            let left = x[(i + m - 1) % m];
            let right = x[(i + 1) % m];
            y[i] = (2.0 * x[i] - left - right) * inv_h2;
        }
    }

    fn shifted_solve(&self, shift: Complex64, rhs: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        check_len(self.m, rhs.len())?;
        check_len(self.m, out.len())?;
        for (k, e) in self.eig.iter().enumerate() {
            if (shift + e).norm() < SINGULAR_SHIFT_TOL {
                return Err(Error::SingularShift { shift, mode: k });
            }
        }
        out.copy_from_slice(rhs);
        self.forward.process(out);
        let scale = 1.0 / self.m as f64;
        for (z, e) in out.iter_mut().zip(&self.eig) {
            *z *= scale / (shift + e);
        }
        self.inverse.process(out);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{lu_solve, vec_norm};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn constants_are_annihilated() {
        let op = Periodic1d::new(10, 0.1).unwrap();
        let mut y = vec![c(1.0); 10];
        op.apply(&[c(3.0); 10], &mut y);
        assert!(y.iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn sine_mode_eigenvalue() {
        let m = 32;
        let h = 1.0 / m as f64;
        let op = Periodic1d::new(m, h).unwrap();
        let x: Vec<Complex64> = (0..m).map(|i| c((2.0 * PI * i as f64 * h).sin())).collect();
        let mut y = vec![c(0.0); m];
        op.apply(&x, &mut y);
        let lam = 4.0 / (h * h) * (PI * h).sin().powi(2);
        let err = x.iter().zip(&y).map(|(a, b)| (lam * a - b).norm()).fold(0.0, f64::max);
        assert!(err <= 1e-10 * lam);
    }

    #[test]
    fn shifted_solve_matches_dense() {
        let m = 16;
        let op = Periodic1d::new(m, 1.0 / 16.0).unwrap();
        let g: Vec<Complex64> = (0..m).map(|i| Complex64::new((i as f64).cos(), (i as f64 * 0.3).sin())).collect();
        let mut w = vec![c(0.0); m];
        op.shifted_solve(c(1.0), &g, &mut w).unwrap();
        let mut a = op.to_dense();
        for i in 0..m {
            a[(i, i)] += c(1.0);
        }
        let reference = lu_solve(a, &g).unwrap();
        let diff: Vec<Complex64> = w.iter().zip(&reference).map(|(a, b)| a - b).collect();
        assert!(vec_norm(&diff) <= 1e-10 * vec_norm(&reference));
    }

    #[test]
    fn zero_shift_hits_constant_mode() {
        let op = Periodic1d::new(8, 0.25).unwrap();
        let mut w = vec![c(0.0); 8];
        let err = op.shifted_solve(c(0.0), &[c(1.0); 8], &mut w).unwrap_err();
        assert!(matches!(err, Error::SingularShift { mode: 0, .. }));
        assert!(Periodic1d::new(2, 1.0).is_err());
    }
}
