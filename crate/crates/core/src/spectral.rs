//! Spectral decomposition `B = V D V^{-1}` of the hybrid time matrix.
//!
//! Column `j` of `V` is the eigenvector `(i^k U_k(x_j))_{k=0}^{n-1}`. The
//! inverse is assembled in `O(n^2)` from one pentadiagonal solve and `n`
//! tridiagonal solves: with `V = diag(i^k) Phi`, the rows of `W = Phi^{-1}`
//! are `W = Psi S_n / 2`, where row `j` of `Psi` solves
//! `Tridiag{1, -2 x_j, 1} psi_j = 2 b / p_n'(x_j)` and `S_n b = (0, .., 0, i, 2)`.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::cheb::{cheb_second_kind_sequence, find_roots, p_prime_at_root, NewtonOptions, RootSet};
use crate::error::{Error, Result};
use crate::linalg::{frobenius_norm, lu_inverse, matmul, singular_values, spectral_norm_estimate, CMatrix};
use crate::timedisc::assemble_b;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Above this size `cond2_estimate` switches from a full SVD to power
/// iteration.
pub const SVD_CUTOFF: usize = 2048;

#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub n: usize,
    pub dt: f64,
    /// Diagonal of `D`.
    pub eigenvalues: Vec<Complex64>,
    /// Eigenvectors as columns.
    pub v: CMatrix,
    pub v_inv: CMatrix,
    pub cond2: Option<f64>,
    /// `||B - V D V^{-1}||_F / ||B||_F`, or `NaN` when not computed.
    pub residual: f64,
    pub max_newton_iters: usize,
}

impl SpectralDecomposition {
    pub fn eigenvalues_squared(&self) -> Vec<Complex64> {
        self.eigenvalues.iter().map(|l| l * l).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CondMode {
    /// SVD up to [`SVD_CUTOFF`], power iteration beyond.
    Auto,
    /// Power iteration using the explicit inverse.
    Estimate,
    Skip,
}

#[derive(Debug, Clone, Copy)]
pub struct DecomposeOptions {
    pub newton: NewtonOptions,
    pub cond: CondMode,
    pub residual: bool,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        Self {
            newton: NewtonOptions::default(),
            cond: CondMode::Auto,
            residual: true,
        }
    }
}

impl DecomposeOptions {
    /// Only what the solver needs: no condition number, no residual.
    pub fn solver_only(tol: f64) -> Self {
        Self {
            newton: NewtonOptions { tol, ..NewtonOptions::default() },
            cond: CondMode::Skip,
            residual: false,
        }
    }
}

/// `V[k, j] = i^k U_k(x_j)`.
pub fn build_v(roots: &RootSet) -> CMatrix {
    build_v_from_x(&roots.xs())
}

/// The eigenvector formula evaluated at arbitrary points `x_j`.
pub fn build_v_from_x(xs: &[Complex64]) -> CMatrix {
    let n = xs.len();
    let mut v = CMatrix::zeros(n, n);
    let mut phase = vec![Complex64::new(1.0, 0.0); n];
    for k in 1..n {
        phase[k] = phase[k - 1] * I;
    }
    for (j, &x) in xs.iter().enumerate() {
        let u = cheb_second_kind_sequence(n, x);
        for k in 0..n {
            v[(k, j)] = phase[k] * u[k];
        }
    }
    v
}

/// Thomas algorithm. `lower[i]` multiplies `x[i]` in row `i + 1`, `upper[i]`
/// multiplies `x[i + 1]` in row `i`.
pub fn thomas_tridiagonal(
    lower: &[Complex64],
    diag: &[Complex64],
    upper: &[Complex64],
    rhs: &[Complex64],
) -> Result<Vec<Complex64>> {
    let n = diag.len();
    let off = n.saturating_sub(1);
    if lower.len() != off || upper.len() != off {
        return Err(Error::DimensionMismatch { expected: off, found: lower.len().max(upper.len()) });
    }
    if rhs.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: rhs.len() });
    }
    let mut c = vec![ZERO; n];
    let mut d = vec![ZERO; n];
    let mut x = vec![ZERO; n];
    thomas_into(lower, diag, upper, rhs, &mut c, &mut d, &mut x)?;
    Ok(x)
}

fn thomas_into(
    lower: &[Complex64],
    diag: &[Complex64],
    upper: &[Complex64],
    rhs: &[Complex64],
    c: &mut [Complex64],
    d: &mut [Complex64],
    x: &mut [Complex64],
) -> Result<()> {
    let n = diag.len();
    if n == 0 {
        return Ok(());
    }
    let mut pivot = diag[0];
    if pivot.norm() < 1e-300 {
        return Err(Error::ZeroPivot { index: 0 });
    }
    if n > 1 {
        c[0] = upper[0] / pivot;
    }
    d[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - lower[i - 1] * c[i - 1];
        if pivot.norm() < 1e-300 {
            return Err(Error::ZeroPivot { index: i });
        }
        if i < n - 1 {
            c[i] = upper[i] / pivot;
        }
        d[i] = (rhs[i] - lower[i - 1] * d[i - 1]) / pivot;
    }
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    Ok(())
}

/// `Tridiag{1, diag, 1} x = rhs` with constant diagonal and unit off-diagonals.
fn solve_unit_tridiagonal(diag: Complex64, rhs: &[Complex64], c: &mut [Complex64], x: &mut [Complex64]) -> Result<()> {
    let n = rhs.len();
    let mut pivot = diag;
    if pivot.norm() < 1e-300 {
        return Err(Error::ZeroPivot { index: 0 });
    }
    c[0] = Complex64::new(1.0, 0.0) / pivot;
    x[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag - c[i - 1];
        if pivot.norm() < 1e-300 {
            return Err(Error::ZeroPivot { index: i });
        }
        c[i] = Complex64::new(1.0, 0.0) / pivot;
        x[i] = (rhs[i] - x[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        let next = x[i + 1];
        x[i] -= c[i] * next;
    }
    Ok(())
}

/// Solution of `S_n b = (0, ..., 0, i, 2)^T`.
#[derive(Debug, Clone)]
pub struct PentaSolution {
    pub b: Vec<Complex64>,
}

/// Diagonal entry `k` (0-based) of `S_n`.
fn s_diag(n: usize, k: usize) -> f64 {
    if n == 1 {
        4.0
    } else if k == 0 || k == n - 1 {
        3.0
    } else {
        2.0
    }
}

/// `S_n x` for the pentadiagonal `S_n` (stencil `-1, 0, 2, 0, -1`, corner
/// diagonal entries 3).
pub fn apply_s(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    (0..n)
        .map(|k| {
            let mut acc = x[k] * s_diag(n, k);
            if k >= 2 {
                acc -= x[k - 2];
            }
            if k + 2 < n {
                acc -= x[k + 2];
            }
            acc
        })
        .collect()
}

/// `S_n` couples only indices of equal parity, so the system splits into two
/// tridiagonal systems that are solved independently.
pub fn solve_pentadiagonal_s(n: usize) -> Result<PentaSolution> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let mut rhs = vec![ZERO; n];
    rhs[n - 1] = Complex64::new(2.0, 0.0);
    if n >= 2 {
        rhs[n - 2] = I;
    }
    let mut b = vec![ZERO; n];
    for parity in 0..2 {
        let idx: Vec<usize> = (parity..n).step_by(2).collect();
        if idx.is_empty() {
            continue;
        }
        let diag: Vec<Complex64> = idx.iter().map(|&k| Complex64::new(s_diag(n, k), 0.0)).collect();
        let off = vec![Complex64::new(-1.0, 0.0); idx.len() - 1];
        let r: Vec<Complex64> = idx.iter().map(|&k| rhs[k]).collect();
        let sol = thomas_tridiagonal(&off, &diag, &off, &r)?;
        for (&k, v) in idx.iter().zip(sol) {
            b[k] = v;
        }
    }
    Ok(PentaSolution { b })
}

/// `V^{-1}` in `O(n^2)` operations.
pub fn build_vinv_fast(roots: &RootSet) -> Result<CMatrix> {
    let n = roots.n;
    let penta = solve_pentadiagonal_s(n)?;
    let p_prime = roots
        .roots
        .iter()
        .map(|r| p_prime_at_root(r, n))
        .collect::<Result<Vec<_>>>()?;
    // (-i)^k column phases
    let mut phase = vec![Complex64::new(1.0, 0.0); n];
    for k in 1..n {
        phase[k] = phase[k - 1] * (-I);
    }
    let mut rows = vec![ZERO; n * n];
    rows.par_chunks_mut(n)
        .enumerate()
        .try_for_each_init(
            || (vec![ZERO; n], vec![ZERO; n], vec![ZERO; n]),
            |(rhs, c, psi), (j, row)| -> Result<()> {
                let x = roots.roots[j].x;
                let scale = 2.0 / p_prime[j];
                for (r, b) in rhs.iter_mut().zip(&penta.b) {
                    *r = scale * b;
                }
                solve_unit_tridiagonal(-2.0 * x, rhs, c, psi)?;
                // row = (psi S_n / 2) diag((-i)^k); S_n is symmetric.
                for k in 0..n {
                    let mut acc = psi[k] * s_diag(n, k);
                    if k >= 2 {
                        acc -= psi[k - 2];
                    }
                    if k + 2 < n {
                        acc -= psi[k + 2];
                    }
                    row[k] = 0.5 * acc * phase[k];
                }
                Ok(())
            },
        )?;
    Ok(CMatrix::from_row_slice(n, n, &rows))
}

/// `V^{-1}` by LU factorization, `O(n^3)`.
pub fn build_vinv_reference(v: &CMatrix) -> Result<CMatrix> {
    lu_inverse(v)
}

/// 2-norm condition number: SVD up to [`SVD_CUTOFF`], power iteration on
/// `V^H V` and `V^{-H} V^{-1}` beyond.
pub fn cond2_estimate(v: &CMatrix) -> Result<f64> {
    if v.nrows() != v.ncols() {
        return Err(Error::DimensionMismatch { expected: v.nrows(), found: v.ncols() });
    }
    if v.nrows() == 0 {
        return Ok(1.0);
    }
    if v.nrows() <= SVD_CUTOFF {
        let s = singular_values(v);
        let (max, min) = (s[0], *s.last().unwrap());
        if !(min > f64::MIN_POSITIVE) {
            return Err(Error::SingularMatrix);
        }
        Ok(max / min)
    } else {
        let inv = lu_inverse(v)?;
        cond2_from_inverse(v, &inv)
    }
}

/// `||V||_2 ||V^{-1}||_2` by power iteration, using an explicit inverse.
pub fn cond2_from_inverse(v: &CMatrix, v_inv: &CMatrix) -> Result<f64> {
    let a = spectral_norm_estimate(v, 1e-10, 2000);
    let b = spectral_norm_estimate(v_inv, 1e-10, 2000);
    if !(b.is_finite()) || b == 0.0 {
        return Err(Error::SingularMatrix);
    }
    Ok(a * b)
}

/// `||B - V D V^{-1}||_F / ||B||_F` against the assembled sparse `B`.
pub fn decomposition_residual(v: &CMatrix, eigenvalues: &[Complex64], v_inv: &CMatrix, dt: f64) -> Result<f64> {
    let n = v.nrows();
    let b = assemble_b(n, dt)?;
    let mut vd = v.clone();
    for (j, lam) in eigenvalues.iter().enumerate() {
        vd.column_mut(j).iter_mut().for_each(|z| *z *= lam);
    }
    let mut rec = matmul(&vd, v_inv);
    for &(i, j, val) in &b.entries {
        rec[(i, j)] -= Complex64::new(val, 0.0);
    }
    Ok(frobenius_norm(&rec) / b.frobenius_norm())
}

/// Full decomposition with diagnostics.
pub fn decompose(n: usize, dt: f64, tol: f64) -> Result<SpectralDecomposition> {
    decompose_with(
        n,
        dt,
        &DecomposeOptions {
            newton: NewtonOptions { tol, ..NewtonOptions::default() },
            ..DecomposeOptions::default()
        },
    )
}

pub fn decompose_with(n: usize, dt: f64, opts: &DecomposeOptions) -> Result<SpectralDecomposition> {
    if n == 0 || !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("need n >= 1 and dt > 0 (n = {n}, dt = {dt})")));
    }
    let roots = find_roots(n, opts.newton)?;
    decompose_from_roots(&roots, dt, opts)
}

pub fn decompose_from_roots(roots: &RootSet, dt: f64, opts: &DecomposeOptions) -> Result<SpectralDecomposition> {
    let n = roots.n;
    let eigenvalues: Vec<Complex64> = roots.roots.iter().map(|r| r.lambda_unit / dt).collect();
    let v = build_v(roots);
    let v_inv = build_vinv_fast(roots)?;
    let cond2 = match opts.cond {
        CondMode::Skip => None,
        CondMode::Estimate => Some(cond2_from_inverse(&v, &v_inv)?),
        CondMode::Auto if n <= SVD_CUTOFF => Some(cond2_estimate(&v)?),
        CondMode::Auto => Some(cond2_from_inverse(&v, &v_inv)?),
    };
    let residual = if opts.residual {
        decomposition_residual(&v, &eigenvalues, &v_inv, dt)?
    } else {
        f64::NAN
    };
    Ok(SpectralDecomposition {
        n,
        dt,
        eigenvalues,
        v,
        v_inv,
        cond2,
        residual,
        max_newton_iters: roots.max_newton_iters(),
    })
}

/// `||a - b||_F / ||a||_F` after pairing each entry of `a` with its nearest
/// unused entry of `b`.
pub fn eigenvalue_agreement(a: &[Complex64], b: &[Complex64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), found: b.len() });
    }
    let mut used = vec![false; b.len()];
    let mut diff = 0.0;
    for za in a {
        let (best, dist) = b
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, zb)| (k, (za - zb).norm()))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .expect("lengths match");
        used[best] = true;
        diff += dist * dist;
    }
    let norm: f64 = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    Ok(diff.sqrt() / norm)
}

/// Eigenvalues of the assembled `B` by a general dense eigensolver
/// (Schur form), for cross-checks.
pub fn reference_eigenvalues(n: usize, dt: f64) -> Result<Vec<Complex64>> {
    let b = assemble_b(n, dt)?.to_dense();
    Ok(b.complex_eigenvalues().iter().copied().collect())
}

const DUMP_MAGIC: &str = "CHEBPINT-DECOMPOSITION";
const DUMP_VERSION: u32 = 1;

/// Writes `n`, `dt`, the eigenvalues, `V` and `V^{-1}` (row-major, complex
/// entries as `re, im` pairs of little-endian IEEE-754 doubles) after a
/// one-line text header.
pub fn write_dump<W: Write>(decomp: &SpectralDecomposition, mut out: W) -> Result<()> {
    writeln!(out, "{DUMP_MAGIC} v{DUMP_VERSION} n={}", decomp.n)?;
    let mut buf = Vec::with_capacity(8 * (1 + 2 * decomp.n + 4 * decomp.n * decomp.n));
    buf.extend_from_slice(&decomp.dt.to_le_bytes());
    let push = |buf: &mut Vec<u8>, z: &Complex64| {
        buf.extend_from_slice(&z.re.to_le_bytes());
        buf.extend_from_slice(&z.im.to_le_bytes());
    };
    for z in &decomp.eigenvalues {
        push(&mut buf, z);
    }
    for m in [&decomp.v, &decomp.v_inv] {
        for i in 0..decomp.n {
            for j in 0..decomp.n {
                push(&mut buf, &m[(i, j)]);
            }
        }
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_dump<R: Read>(input: R) -> Result<SpectralDecomposition> {
    let mut reader = BufReader::new(input);
    let mut header = String::new();
    reader.read_line(&mut header)?;
    let mut parts = header.trim_end().split(' ');
    if parts.next() != Some(DUMP_MAGIC) {
        return Err(Error::Format("missing header".into()));
    }
    if parts.next() != Some(&format!("v{DUMP_VERSION}")) {
        return Err(Error::Format("unsupported version".into()));
    }
    let n: usize = parts
        .next()
        .and_then(|s| s.strip_prefix("n="))
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Format("missing size".into()))?;
    let mut body = Vec::new();
    reader.read_to_end(&mut body)?;
    let expected = 8 * (1 + 2 * n + 4 * n * n);
    if body.len() != expected {
        return Err(Error::Format(format!("expected {expected} payload bytes, found {}", body.len())));
    }
    let mut vals = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")));
    let mut next = || vals.next().expect("length checked");
    let dt = next();
    let eigenvalues: Vec<Complex64> = (0..n).map(|_| Complex64::new(next(), next())).collect();
    let mut read_matrix = || {
        let data: Vec<Complex64> = (0..n * n).map(|_| Complex64::new(next(), next())).collect();
        CMatrix::from_row_slice(n, n, &data)
    };
    let v = read_matrix();
    let v_inv = read_matrix();
    Ok(SpectralDecomposition {
        n,
        dt,
        eigenvalues,
        v,
        v_inv,
        cond2: None,
        residual: f64::NAN,
        max_newton_iters: 0,
    })
}

pub fn save_dump(decomp: &SpectralDecomposition, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_dump(decomp, std::io::BufWriter::new(file))
}

pub fn load_dump(path: &Path) -> Result<SpectralDecomposition> {
    read_dump(std::fs::File::open(path)?)
}
