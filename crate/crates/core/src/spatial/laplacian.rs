use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{check_len, SpatialOperator, SINGULAR_SHIFT_TOL};
use crate::error::{Error, Result};

/// `-Delta_h` with the 5-point stencil on an `N x N` interior grid with
/// homogeneous Dirichlet data. Unknown `(i, j)` (x index `i`, y index `j`)
/// lives at `j * N + i`.
///
/// Shifted solves diagonalize in the discrete sine basis; each 1D DST-I of
/// length `N` is one FFT of length `2(N + 1)`.
#[derive(Clone)]
pub struct Laplacian2dDirichlet {
    points: usize,
    h: f64,
    eig1d: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Laplacian2dDirichlet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Laplacian2dDirichlet")
            .field("points", &self.points)
            .field("h", &self.h)
            .finish()
    }
}

impl Laplacian2dDirichlet {
    pub fn new(points_per_dim: usize, h: f64) -> Result<Self> {
        if points_per_dim == 0 || !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "need points_per_dim >= 1 and h > 0 (got {points_per_dim}, {h})"
            )));
        }
        let n = points_per_dim;
        let eig1d = (1..=n)
            .map(|k| {
                let s = (k as f64 * PI / (2.0 * (n + 1) as f64)).sin();
                4.0 / (h * h) * s * s
            })
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(2 * (n + 1));
        Ok(Self { points: n, h, eig1d, fft })
    }

    pub fn points_per_dim(&self) -> usize {
        self.points
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Eigenvalue of sine mode `(k, l)`, both 1-based.
    pub fn eigenvalue(&self, k: usize, l: usize) -> f64 {
        self.eig1d[k - 1] + self.eig1d[l - 1]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        2.0 * self.eig1d[0]
    }

    /// In-place unnormalized 2D DST-I: `y_{kl} = sum_{ij} x_{ij} sin(pi i k/(N+1)) sin(pi j l/(N+1))`.
    fn dst2(&self, data: &mut [Complex64]) {
        let n = self.points;
        let len = 2 * (n + 1);
        let mut buf = vec![Complex64::new(0.0, 0.0); n * len];
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        let half_i = Complex64::new(0.0, 0.5);
        // Along x: row j is contiguous.
        for pass in 0..2 {
            buf.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
            for line in 0..n {
                let chunk = &mut buf[line * len..(line + 1) * len];
                for i in 0..n {
                    let v = if pass == 0 { data[line * n + i] } else { data[i * n + line] };
                    chunk[i + 1] = v;
                    chunk[len - 1 - i] = -v;
                }
            }
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            for line in 0..n {
                let chunk = &buf[line * len..(line + 1) * len];
                for k in 0..n {
                    let v = half_i * chunk[k + 1];
                    if pass == 0 {
                        data[line * n + k] = v;
                    } else {
                        data[k * n + line] = v;
                    }
                }
            }
        }
    }
}

impl SpatialOperator for Laplacian2dDirichlet {
    fn dim(&self) -> usize {
        self.points * self.points
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        let n = self.points;
        let inv_h2 = 1.0 / (self.h * self.h);
        for j in 0..n {
            for i in 0..n {
                let c = j * n + i;
                let mut acc = 4.0 * x[c];
                if i > 0 {
                    acc -= x[c - 1];
                }
                if i + 1 < n {
                    acc -= x[c + 1];
                }
                if j > 0 {
                    acc -= x[c - n];
                }
                if j + 1 < n {
                    acc -= x[c + n];
                }
                y[c] = acc * inv_h2;
            }
        }
    }

    fn apply_real(&self, x: &[f64], y: &mut [f64]) {
        let n = self.points;
        let inv_h2 = 1.0 / (self.h * self.h);
        for j in 0..n {
            for i in 0..n {
                let c = j * n + i;
                let mut acc = 4.0 * x[c];
                if i > 0 {
                    acc -= x[c - 1];
                }
                if i + 1 < n {
                    acc -= x[c + 1];
                }
                if j > 0 {
                    acc -= x[c - n];
                }
                if j + 1 < n {
                    acc -= x[c + n];
                }
                y[c] = acc * inv_h2;
            }
        }
    }

    fn shifted_solve(&self, shift: Complex64, rhs: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        let n = self.points;
        check_len(n * n, rhs.len())?;
        check_len(n * n, out.len())?;
        out.copy_from_slice(rhs);
        self.dst2(out);
        let norm = (2.0 / (n + 1) as f64).powi(2);
        for l in 0..n {
            for k in 0..n {
                let d = shift + self.eig1d[k] + self.eig1d[l];
                if d.norm() < SINGULAR_SHIFT_TOL {
                    return Err(Error::SingularShift { shift, mode: l * n + k });
                }
                out[l * n + k] *= norm / d;
            }
        }
        self.dst2(out);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{lu_solve, vec_norm};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn single_point() {
        let op = Laplacian2dDirichlet::new(1, 0.5).unwrap();
        let mut y = [c(0.0, 0.0)];
        op.apply(&[c(1.0, 0.0)], &mut y);
        assert_eq!(y[0], c(16.0, 0.0));
        let mut w = [c(0.0, 0.0)];
        op.shifted_solve(c(4.0, 0.0), &[c(10.0, 0.0)], &mut w).unwrap();
        assert!((w[0] - c(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn sine_mode_is_eigenvector() {
        let n = 12;
        let h = 1.0 / (n + 1) as f64;
        let op = Laplacian2dDirichlet::new(n, h).unwrap();
        let (k, l) = (3, 5);
        let x: Vec<Complex64> = (0..n * n)
            .map(|idx| {
                let (i, j) = (idx % n + 1, idx / n + 1);
                c((k as f64 * PI * i as f64 * h).sin() * (l as f64 * PI * j as f64 * h).sin(), 0.0)
            })
            .collect();
        let mut y = vec![c(0.0, 0.0); n * n];
        op.apply(&x, &mut y);
        let lam = 4.0 / (h * h) * ((k as f64 * PI * h / 2.0).sin().powi(2) + (l as f64 * PI * h / 2.0).sin().powi(2));
        assert!((lam - op.eigenvalue(k, l)).abs() < 1e-10);
        let err = x.iter().zip(&y).map(|(a, b)| (lam * a - b).norm()).fold(0.0, f64::max);
        assert!(err <= 1e-10 * lam, "{err}");
    }

    #[test]
    fn shifted_solve_matches_dense() {
        let n = 8;
        let op = Laplacian2dDirichlet::new(n, 1.0 / 9.0).unwrap();
        let g: Vec<Complex64> = (0..n * n).map(|i| c((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos())).collect();
        let sigma = c(1.0, 1.0);
        let mut w = vec![c(0.0, 0.0); n * n];
        op.shifted_solve(sigma, &g, &mut w).unwrap();
        let mut a = op.to_dense();
        for i in 0..n * n {
            a[(i, i)] += sigma;
        }
        let reference = lu_solve(a, &g).unwrap();
        let diff: Vec<Complex64> = w.iter().zip(&reference).map(|(a, b)| a - b).collect();
        assert!(vec_norm(&diff) <= 1e-10 * vec_norm(&reference));
    }

    #[test]
    fn singular_shift_reported() {
        let op = Laplacian2dDirichlet::new(4, 0.2).unwrap();
        let sigma = c(-op.eigenvalue(2, 3), 0.0);
        let mut w = vec![c(0.0, 0.0); 16];
        let err = op.shifted_solve(sigma, &[c(1.0, 0.0); 16], &mut w).unwrap_err();
        assert!(matches!(err, Error::SingularShift { .. }));
    }
}
