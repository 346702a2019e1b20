//! Dense complex helpers shared by the spectral and solver modules.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Strided view description for [`gemm`]: element `(i, j)` lives at
/// `offset + i * row_stride + j * col_stride`.
#[derive(Debug, Clone, Copy)]
pub struct Layout {
    pub rows: usize,
    pub cols: usize,
    pub row_stride: usize,
    pub col_stride: usize,
}

impl Layout {
    pub fn row_major(rows: usize, cols: usize) -> Self {
        Self { rows, cols, row_stride: cols, col_stride: 1 }
    }

    pub fn col_major(rows: usize, cols: usize) -> Self {
        Self { rows, cols, row_stride: 1, col_stride: rows }
    }

    fn span(&self) -> usize {
        if self.rows == 0 || self.cols == 0 {
            0
        } else {
            (self.rows - 1) * self.row_stride + (self.cols - 1) * self.col_stride + 1
        }
    }
}

/// `c = a * b` for strided complex operands. Summation order depends only on
/// the shapes, never on how callers split the output.
pub fn gemm(a: &[Complex64], la: Layout, b: &[Complex64], lb: Layout, c: &mut [Complex64], lc: Layout) {
    assert_eq!(la.cols, lb.rows, "inner dimensions differ");
    assert_eq!(lc.rows, la.rows);
    assert_eq!(lc.cols, lb.cols);
    assert!(a.len() >= la.span() && b.len() >= lb.span() && c.len() >= lc.span());
    if lc.rows == 0 || lc.cols == 0 {
        return;
    }
    if la.cols == 0 {
        for i in 0..lc.rows {
            for j in 0..lc.cols {
                c[i * lc.row_stride + j * lc.col_stride] = ZERO;
            }
        }
        return;
    }
    // SAFETY: Complex64 is repr(C) with two f64 fields, the same layout as
    // [f64; 2]; spans were checked above.
    unsafe {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            la.rows,
            la.cols,
            lb.cols,
            [1.0, 0.0],
            a.as_ptr() as *const [f64; 2],
            la.row_stride as isize,
            la.col_stride as isize,
            b.as_ptr() as *const [f64; 2],
            lb.row_stride as isize,
            lb.col_stride as isize,
            [0.0, 0.0],
            c.as_mut_ptr() as *mut [f64; 2],
            lc.row_stride as isize,
            lc.col_stride as isize,
        );
    }
}

pub fn matmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(a.nrows(), b.ncols());
    let (la, lb, lc) = (
        Layout::col_major(a.nrows(), a.ncols()),
        Layout::col_major(b.nrows(), b.ncols()),
        Layout::col_major(a.nrows(), b.ncols()),
    );
    gemm(a.as_slice(), la, b.as_slice(), lb, out.as_mut_slice(), lc);
    out
}

pub fn frobenius_norm(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn identity_defect(product: &CMatrix) -> f64 {
    let n = product.nrows();
    let mut acc = 0.0;
    for j in 0..product.ncols() {
        for i in 0..n {
            let target = if i == j { ONE } else { ZERO };
            acc += (product[(i, j)] - target).norm_sqr();
        }
    }
    acc.sqrt()
}

pub fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Inverse via partially pivoted LU.
pub fn lu_inverse(a: &CMatrix) -> Result<CMatrix> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), found: a.ncols() });
    }
    let lu = a.clone().lu();
    let inv = lu.try_inverse().ok_or(Error::SingularMatrix)?;
    if inv.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::SingularMatrix);
    }
    Ok(inv)
}

/// Solves `a x = b` by partially pivoted LU.
pub fn lu_solve(a: CMatrix, b: &[Complex64]) -> Result<Vec<Complex64>> {
    let rhs = nalgebra::DVector::from_column_slice(b);
    let x = a.lu().solve(&rhs).ok_or(Error::SingularMatrix)?;
    if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::SingularMatrix);
    }
    Ok(x.as_slice().to_vec())
}

/// Singular values in descending order.
pub fn singular_values(a: &CMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = a.clone().singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// `||a||_2` by power iteration on `a^H a`.
pub fn spectral_norm_estimate(a: &CMatrix, rel_tol: f64, max_iter: usize) -> f64 {
    let n = a.ncols();
    if n == 0 {
        return 0.0;
    }
    // Deterministic, non-degenerate start vector.
    let mut v = nalgebra::DVector::from_fn(n, |i, _| Complex64::new(1.0 + (i as f64 * 0.618).sin() * 0.5, 0.25));
    let norm = v.norm();
    v /= Complex64::new(norm, 0.0);
    let adj = a.adjoint();
    let mut estimate = 0.0;
    for _ in 0..max_iter {
        let w = a * &v;
        let z = &adj * &w;
        let next = w.norm();
        let zn = z.norm();
        if zn == 0.0 {
            return 0.0;
        }
        v = z / Complex64::new(zn, 0.0);
        if (next - estimate).abs() <= rel_tol * next {
            return next;
        }
        estimate = next;
    }
    estimate
}

/// Restarted GMRES with right preconditioning for `op(x) = b`.
///
/// `x` holds the initial guess on entry and the solution on exit. Returns the
/// number of inner iterations.
pub fn gmres<A, P>(
    op: A,
    precond: P,
    b: &[Complex64],
    x: &mut [Complex64],
    rel_tol: f64,
    restart: usize,
    max_iter: usize,
) -> Result<usize>
where
    A: Fn(&[Complex64], &mut [Complex64]),
    P: Fn(&[Complex64], &mut [Complex64]) -> Result<()>,
{
    let m = b.len();
    let restart = restart.max(1).min(m.max(1));
    let bnorm = vec_norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|z| *z = ZERO);
        return Ok(0);
    }
    let mut total = 0;
    let mut r = vec![ZERO; m];
    let mut tmp = vec![ZERO; m];
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(restart + 1);
    let mut h = vec![vec![ZERO; restart]; restart + 1];
    let mut cs = vec![0.0; restart];
    let mut sn = vec![ZERO; restart];
    let mut g = vec![ZERO; restart + 1];
    loop {
        op(x, &mut tmp);
        for i in 0..m {
            r[i] = b[i] - tmp[i];
        }
        let beta = vec_norm(&r);
        let mut rel = beta / bnorm;
        if rel <= rel_tol {
            return Ok(total);
        }
        if total >= max_iter {
            return Err(Error::InnerSolveFailed { iterations: total, residual: rel });
        }
        basis.clear();
        basis.push(r.iter().map(|z| z / beta).collect());
        g.iter_mut().for_each(|z| *z = ZERO);
        g[0] = Complex64::new(beta, 0.0);
        let mut k_used = 0;
        for k in 0..restart {
            let mut z = vec![ZERO; m];
            precond(&basis[k], &mut z)?;
            let mut w = vec![ZERO; m];
            op(&z, &mut w);
            for i in 0..=k {
                let hik: Complex64 = basis[i].iter().zip(&w).map(|(q, wv)| q.conj() * wv).sum();
                h[i][k] = hik;
                for (wv, q) in w.iter_mut().zip(&basis[i]) {
                    *wv -= hik * q;
                }
            }
            let wn = vec_norm(&w);
            h[k + 1][k] = Complex64::new(wn, 0.0);
            for i in 0..k {
                let (a, bb) = (h[i][k], h[i + 1][k]);
                h[i][k] = cs[i] * a + sn[i] * bb;
                h[i + 1][k] = -sn[i].conj() * a + cs[i] * bb;
            }
            let (a, bb) = (h[k][k], h[k + 1][k]);
            let rho = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            if a.norm() == 0.0 {
                cs[k] = 0.0;
                sn[k] = ONE;
                h[k][k] = bb;
            } else {
                let phase = a / a.norm();
                cs[k] = a.norm() / rho;
                sn[k] = phase * bb.conj() / rho;
                h[k][k] = phase * rho;
            }
            h[k + 1][k] = ZERO;
            g[k + 1] = -sn[k].conj() * g[k];
            g[k] = cs[k] * g[k];
            total += 1;
            k_used = k + 1;
            rel = g[k + 1].norm() / bnorm;
            if rel <= rel_tol || wn == 0.0 || total >= max_iter {
                break;
            }
            basis.push(w.iter().map(|z| z / wn).collect());
        }
        // Back substitution for the Krylov coefficients.
        let mut y = vec![ZERO; k_used];
        for i in (0..k_used).rev() {
            let mut acc = g[i];
            for j in i + 1..k_used {
                acc -= h[i][j] * y[j];
            }
            y[i] = acc / h[i][i];
        }
        let mut update = vec![ZERO; m];
        for (j, yj) in y.iter().enumerate() {
            for (u, q) in update.iter_mut().zip(&basis[j]) {
                *u += yj * q;
            }
        }
        precond(&update, &mut tmp)?;
        for i in 0..m {
            x[i] += tmp[i];
        }
        if !rel.is_finite() {
            return Err(Error::InnerSolveFailed { iterations: total, residual: rel });
        }
    }
}
