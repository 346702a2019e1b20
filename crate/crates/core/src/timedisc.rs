//! Time grids, the hybrid boundary-value time matrix, all-at-once right-hand
//! sides, and the geometric-step trapezoidal baseline with its closed-form
//! diagonalization.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{frobenius_norm, CMatrix};
use crate::spectral::SpectralDecomposition;

/// Uniform grid `t_j = j dt`, `j = 1..=n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub n: usize,
    pub dt: f64,
}

impl TimeGrid {
    pub fn new(n: usize, dt: f64) -> Result<Self> {
        if n == 0 || !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidGrid(format!("need n >= 1 and dt > 0 (n = {n}, dt = {dt})")));
        }
        Ok(Self { n, dt })
    }

    /// Grid with `n` steps covering `[0, horizon]`.
    pub fn covering(n: usize, horizon: f64) -> Result<Self> {
        Self::new(n, horizon / n as f64)
    }

    pub fn horizon(&self) -> f64 {
        self.n as f64 * self.dt
    }

    pub fn points(&self) -> Vec<f64> {
        (1..=self.n).map(|j| j as f64 * self.dt).collect()
    }

    pub fn steps(&self) -> Vec<f64> {
        vec![self.dt; self.n]
    }
}

/// Geometric steps `dt_j = dt_last * tau^(j - n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometricGrid {
    pub n: usize,
    pub tau: f64,
    pub dt_last: f64,
    pub steps: Vec<f64>,
    pub horizon: f64,
}

impl GeometricGrid {
    /// Cumulative time points `t_1, ..., t_n`.
    pub fn points(&self) -> Vec<f64> {
        let mut t = 0.0;
        self.steps
            .iter()
            .map(|dt| {
                t += dt;
                t
            })
            .collect()
    }
}

pub fn geometric_grid(n: usize, tau: f64, dt_last: f64) -> Result<GeometricGrid> {
    if n == 0 {
        return Err(Error::InvalidGrid("n must be at least 1".into()));
    }
    if !(tau > 1.0) || !(dt_last > 0.0) {
        return Err(Error::InvalidGrid(format!("need tau > 1 and dt_last > 0 (tau = {tau}, dt_last = {dt_last})")));
    }
    let steps: Vec<f64> = (1..=n).map(|j| dt_last * tau.powi(j as i32 - n as i32)).collect();
    let horizon = steps.iter().sum();
    Ok(GeometricGrid { n, tau, dt_last, steps, horizon })
}

/// `n` real time blocks of `m` spatial values each, stored block after block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockVector {
    n: usize,
    m: usize,
    data: Vec<f64>,
}

impl BlockVector {
    pub fn zeros(n: usize, m: usize) -> Self {
        Self { n, m, data: vec![0.0; n * m] }
    }

    pub fn from_data(n: usize, m: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * m {
            return Err(Error::DimensionMismatch { expected: n * m, found: data.len() });
        }
        Ok(Self { n, m, data })
    }

    pub fn from_blocks(blocks: &[Vec<f64>]) -> Result<Self> {
        let n = blocks.len();
        let m = blocks.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n * m);
        for b in blocks {
            if b.len() != m {
                return Err(Error::DimensionMismatch { expected: m, found: b.len() });
            }
            data.extend_from_slice(b);
        }
        Ok(Self { n, m, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Block `j`, 0-based.
    pub fn block(&self, j: usize) -> &[f64] {
        &self.data[j * self.m..(j + 1) * self.m]
    }

    pub fn block_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.m..(j + 1) * self.m]
    }

    pub fn norm2(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        self.data.iter().map(|&v| Complex64::new(v, 0.0)).collect()
    }
}

/// Sparse real matrix as a coordinate list.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    pub n: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl SparseMatrix {
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.n, self.n);
        for &(i, j, v) in &self.entries {
            out[(i, j)] += v;
        }
        out
    }

    pub fn to_dense_complex(&self) -> CMatrix {
        self.to_dense().map(|v| Complex64::new(v, 0.0))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.to_dense().norm()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for &(i, j, v) in &self.entries {
            y[i] += v * x[j];
        }
        y
    }

    /// `(S (x) I_m) x` for a block vector with `n` blocks.
    pub fn apply_blocks(&self, x: &BlockVector) -> Result<BlockVector> {
        if x.n() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: x.n() });
        }
        let mut out = BlockVector::zeros(x.n(), x.m());
        for &(i, j, v) in &self.entries {
            let (src, dst) = (x.block(j), out.block_mut(i));
            for (d, s) in dst.iter_mut().zip(src) {
                *d += v * s;
            }
        }
        Ok(out)
    }
}

/// The `n x n` time matrix of the hybrid scheme: centered differences on
/// rows `1..n-1`, backward Euler on the last row.
pub fn assemble_b(n: usize, dt: f64) -> Result<SparseMatrix> {
    TimeGrid::new(n, dt)?;
    let inv = 1.0 / dt;
    let mut entries = Vec::with_capacity(2 * n);
    for i in 0..n.saturating_sub(1) {
        if i >= 1 {
            entries.push((i, i - 1, -0.5 * inv));
        }
        entries.push((i, i + 1, 0.5 * inv));
    }
    if n >= 2 {
        entries.push((n - 1, n - 2, -inv));
    }
    entries.push((n - 1, n - 1, inv));
    Ok(SparseMatrix { n, entries })
}

fn check_space(expected: usize, v: &[f64]) -> Result<()> {
    if v.len() != expected {
        return Err(Error::DimensionMismatch { expected, found: v.len() });
    }
    Ok(())
}

fn source_blocks(g: &[Vec<f64>], m: usize) -> Result<BlockVector> {
    for gj in g {
        check_space(m, gj)?;
    }
    let mut out = BlockVector::zeros(g.len(), m);
    for (j, gj) in g.iter().enumerate() {
        out.block_mut(j).copy_from_slice(gj);
    }
    Ok(out)
}

/// Right-hand side `(u0 / (2 dt) + g_1, g_2, ..., g_n)` for `u' + A u = g`.
pub fn rhs_first_order(u0: &[f64], g: &[Vec<f64>], dt: f64) -> Result<BlockVector> {
    let n = g.len();
    TimeGrid::new(n, dt)?;
    let m = u0.len();
    let mut out = source_blocks(g, m)?;
    for (b, u) in out.block_mut(0).iter_mut().zip(u0) {
        *b += u / (2.0 * dt);
    }
    Ok(out)
}

/// Right-hand side for `u'' + A u = g` in the squared-time-matrix form.
///
/// Equals `b_2 + B b_1 + G` with `b_1 = (u0 / (2 dt), 0, ...)` and
/// `b_2 = (u0dot / (2 dt), 0, ...)`, i.e. blocks
/// `(u0dot / (2 dt) + g_1, -u0 / (4 dt^2) + g_2, g_3, ..., g_n)` for `n >= 3`.
/// For `n = 2` the second row of `B` is the backward-Euler row, which gives
/// `-u0 / (2 dt^2)` in the second block instead.
pub fn rhs_second_order(u0: &[f64], u0dot: &[f64], g: &[Vec<f64>], dt: f64) -> Result<BlockVector> {
    let n = g.len();
    if n < 2 {
        return Err(Error::InvalidGrid("second-order problems need n >= 2".into()));
    }
    TimeGrid::new(n, dt)?;
    let m = u0.len();
    check_space(m, u0dot)?;
    let mut out = source_blocks(g, m)?;
    for (b, v) in out.block_mut(0).iter_mut().zip(u0dot) {
        *b += v / (2.0 * dt);
    }
    let coupling = if n == 2 { -1.0 / dt } else { -0.5 / dt };
    for (b, u) in out.block_mut(1).iter_mut().zip(u0) {
        *b += coupling * u / (2.0 * dt);
    }
    Ok(out)
}

/// Matrices of the trapezoidal all-at-once system on a geometric grid:
/// `B_1` (bidiagonal with `1/dt_j`), `B_2` (lower bidiagonal of halves) and
/// `B = B_2^{-1} B_1`.
pub fn assemble_tr_system(grid: &GeometricGrid) -> (DMatrix<f64>, SparseMatrix, SparseMatrix) {
    let n = grid.n;
    let mut b1 = Vec::with_capacity(2 * n);
    let mut b2 = Vec::with_capacity(2 * n);
    for (j, dt) in grid.steps.iter().enumerate() {
        b1.push((j, j, 1.0 / dt));
        b2.push((j, j, 0.5));
        if j >= 1 {
            b1.push((j, j - 1, -1.0 / dt));
            b2.push((j, j - 1, 0.5));
        }
    }
    let b1 = SparseMatrix { n, entries: b1 };
    let b2 = SparseMatrix { n, entries: b2 };
    // Forward substitution with the lower bidiagonal B_2, column by column.
    let d1 = b1.to_dense();
    let mut b = DMatrix::zeros(n, n);
    for col in 0..n {
        let mut prev = 0.0;
        for row in 0..n {
            let val = 2.0 * d1[(row, col)] - prev;
            b[(row, col)] = val;
            prev = val;
        }
    }
    (b, b1, b2)
}

/// Right-hand side `(B_2^{-1} (x) I) b~` of the trapezoidal all-at-once system
/// for `w' + Q w = 0`, where `b~_1 = w0 / dt_1 - Q w0 / 2`.
pub fn rhs_trapezoidal(grid: &GeometricGrid, w0: &[f64], q_w0: &[f64]) -> Result<BlockVector> {
    check_space(w0.len(), q_w0)?;
    let m = w0.len();
    let mut out = BlockVector::zeros(grid.n, m);
    let first: Vec<f64> = w0.iter().zip(q_w0).map(|(w, q)| w / grid.steps[0] - 0.5 * q).collect();
    let mut prev = vec![0.0; m];
    for j in 0..grid.n {
        let block = out.block_mut(j);
        for i in 0..m {
            let tilde = if j == 0 { first[i] } else { 0.0 };
            block[i] = 2.0 * tilde - prev[i];
        }
        prev.copy_from_slice(block);
    }
    Ok(out)
}

/// Closed-form diagonalization of the trapezoidal time matrix on a geometric
/// grid: `V = V~ D~` with `V~` unit lower triangular Toeplitz built from
/// `p_j = prod_{l<=j} (1 + tau^l) / (1 - tau^l)` and the column scaling
/// `D~_j = (1 + sum_{l <= n-j} |p_l|^2)^{-1/2}`.
///
/// `V~^{-1}` is computed by Toeplitz forward substitution.
pub fn geometric_decomposition(grid: &GeometricGrid) -> Result<SpectralDecomposition> {
    let n = grid.n;
    let tau = grid.tau;
    let mut p = vec![1.0; n];
    for j in 1..n {
        let l = j as i32;
        p[j] = p[j - 1] * (1.0 + tau.powi(l)) / (1.0 - tau.powi(l));
        if !p[j].is_finite() {
            return Err(Error::Overflow(format!("geometric eigenvectors (p_{j} is not finite)")));
        }
    }
    // prefix[k] = 1 + sum_{l=1}^{k} p_l^2
    let mut prefix = vec![1.0; n];
    for k in 1..n {
        prefix[k] = prefix[k - 1] + p[k] * p[k];
    }
    if prefix.iter().any(|v| !v.is_finite()) {
        return Err(Error::Overflow("geometric eigenvector scaling".into()));
    }
    let scale: Vec<f64> = (0..n).map(|j| 1.0 / prefix[n - 1 - j].sqrt()).collect();
    // Toeplitz inverse coefficients: q_0 = 1, q_k = -sum_{i=1}^k p_i q_{k-i}.
    let mut q = vec![0.0; n];
    q[0] = 1.0;
    for k in 1..n {
        q[k] = -(1..=k).map(|i| p[i] * q[k - i]).sum::<f64>();
        if !q[k].is_finite() {
            return Err(Error::Overflow("geometric inverse eigenvectors".into()));
        }
    }
    let v = CMatrix::from_fn(n, n, |i, j| {
        if i >= j {
            Complex64::new(p[i - j] * scale[j], 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let v_inv = CMatrix::from_fn(n, n, |i, j| {
        if i >= j {
            Complex64::new(q[i - j] / scale[i], 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let eigenvalues: Vec<Complex64> = grid.steps.iter().map(|dt| Complex64::new(2.0 / dt, 0.0)).collect();
    let (b, _, _) = assemble_tr_system(grid);
    let b = b.map(|x| Complex64::new(x, 0.0));
    let mut defect = &b * &v;
    for j in 0..n {
        for i in 0..n {
            defect[(i, j)] -= v[(i, j)] * eigenvalues[j];
        }
    }
    let residual = frobenius_norm(&defect) / frobenius_norm(&b);
    Ok(SpectralDecomposition {
        n,
        dt: grid.dt_last,
        eigenvalues,
        v,
        v_inv,
        cond2: None,
        residual,
        max_newton_iters: 0,
    })
}
