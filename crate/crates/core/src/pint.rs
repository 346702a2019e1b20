//! Parallel-in-time solves through `B = V D V^{-1}`.
//!
//! For `(B (x) I + I (x) A) u = b` the three steps are
//! (a) `g = (V^{-1} (x) I) b`, (b) `(lambda_j I + A) w_j = g_j` for every `j`
//! independently, (c) `u = (V (x) I) w`. Second-order systems use `B^2`, i.e.
//! the shifts `lambda_j^2`.

use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use rayon::ThreadPool;

use crate::error::{Error, Result};
use crate::linalg::{gemm, Layout};
use crate::spatial::{DiagonallyPerturbed, SemilinearProblem, SpatialOperator};
use crate::spectral::SpectralDecomposition;
use crate::timedisc::{assemble_b, rhs_first_order, BlockVector};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Width of the column panels in steps (a) and (c). Fixed so that the
/// arithmetic never depends on the number of workers.
const PANEL: usize = 64;

/// Relative imaginary residue above which a solution is rejected.
pub const IMAG_REJECT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PhaseTimes {
    pub assembly: f64,
    pub step_a: f64,
    pub step_b: f64,
    pub step_c: f64,
}

impl PhaseTimes {
    pub fn total(&self) -> f64 {
        self.assembly + self.step_a + self.step_b + self.step_c
    }

    fn add(&mut self, other: &PhaseTimes) {
        self.assembly += other.assembly;
        self.step_a += other.step_a;
        self.step_b += other.step_b;
        self.step_c += other.step_c;
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: BlockVector,
    /// 1 for linear solves, SNI steps otherwise.
    pub iterations: usize,
    /// Relative residuals `||r|| / ||b||`; entry 0 is the initial guess for SNI.
    pub residual_history: Vec<f64>,
    pub phase_times: PhaseTimes,
    pub worker_count: usize,
    /// Largest `||Im u|| / ||u||` discarded after step (c).
    pub imag_residue: f64,
}

impl SolveReport {
    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(f64::NAN)
    }
}

pub fn worker_pool(workers: usize) -> Result<ThreadPool> {
    if workers == 0 {
        return Err(Error::InvalidArgument("worker count must be positive".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))
}

/// `out = M (x) I_m applied to x`, with `x` and `out` stored as `n x m`
/// row-major arrays (block `j` is row `j`).
fn kron_apply(mat: &crate::linalg::CMatrix, x: &[Complex64], m: usize, pool: &ThreadPool) -> Vec<Complex64> {
    let n = mat.nrows();
    let panels: Vec<(usize, usize)> = (0..m).step_by(PANEL).map(|c0| (c0, PANEL.min(m - c0))).collect();
    let results: Vec<Vec<Complex64>> = pool.install(|| {
        panels
            .par_iter()
            .map(|&(c0, w)| {
                let mut out = vec![ZERO; n * w];
                gemm(
                    mat.as_slice(),
                    Layout::col_major(n, n),
                    &x[c0..],
                    Layout { rows: n, cols: w, row_stride: m, col_stride: 1 },
                    &mut out,
                    Layout::row_major(n, w),
                );
                out
            })
            .collect()
    });
    let mut out = vec![ZERO; n * m];
    for (&(c0, w), panel) in panels.iter().zip(&results) {
        for j in 0..n {
            out[j * m + c0..j * m + c0 + w].copy_from_slice(&panel[j * w..(j + 1) * w]);
        }
    }
    out
}

struct ThreeStepOutput {
    solution: BlockVector,
    times: PhaseTimes,
    imag_residue: f64,
}

fn three_step<O: SpatialOperator + ?Sized>(
    decomp: &SpectralDecomposition,
    shifts: &[Complex64],
    op: &O,
    rhs: &BlockVector,
    pool: &ThreadPool,
    reject_imag: bool,
) -> Result<ThreeStepOutput> {
    let (n, m) = (rhs.n(), rhs.m());
    if decomp.n != n {
        return Err(Error::DimensionMismatch { expected: decomp.n, found: n });
    }
    if op.dim() != m {
        return Err(Error::DimensionMismatch { expected: op.dim(), found: m });
    }
    let mut times = PhaseTimes::default();

    let clock = Instant::now();
    let b = rhs.to_complex();
    times.assembly = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let g = kron_apply(&decomp.v_inv, &b, m, pool);
    times.step_a = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let mut w = vec![ZERO; n * m];
    pool.install(|| {
        w.par_chunks_mut(m)
            .zip(g.par_chunks(m))
            .zip(shifts.par_iter())
            .try_for_each(|((wj, gj), &shift)| op.shifted_solve(shift, gj, wj))
    })?;
    times.step_b = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let u = kron_apply(&decomp.v, &w, m, pool);
    times.step_c = clock.elapsed().as_secs_f64();

    let (mut re2, mut im2) = (0.0, 0.0);
    let data: Vec<f64> = u
        .iter()
        .map(|z| {
            re2 += z.re * z.re;
            im2 += z.im * z.im;
            z.re
        })
        .collect();
    let imag_residue = if re2 > 0.0 { (im2 / re2).sqrt() } else { im2.sqrt() };
    if reject_imag && imag_residue > IMAG_REJECT {
        return Err(Error::NonRealSolution { ratio: imag_residue });
    }
    Ok(ThreeStepOutput {
        solution: BlockVector::from_data(n, m, data)?,
        times,
        imag_residue,
    })
}

fn apply_op_blocks<O: SpatialOperator + ?Sized>(op: &O, u: &BlockVector, pool: &ThreadPool) -> BlockVector {
    let m = u.m();
    let mut out = BlockVector::zeros(u.n(), m);
    pool.install(|| {
        out.data_mut()
            .par_chunks_mut(m)
            .zip(u.data().par_chunks(m))
            .for_each(|(dst, src)| op.apply_real(src, dst));
    });
    out
}

fn relative_norm(r: &BlockVector, b: &BlockVector) -> f64 {
    let bn = b.norm2();
    if bn == 0.0 {
        r.norm2()
    } else {
        r.norm2() / bn
    }
}

fn sub_assign(a: &mut BlockVector, b: &BlockVector) {
    for (x, y) in a.data_mut().iter_mut().zip(b.data()) {
        *x -= y;
    }
}

fn add_assign(a: &mut BlockVector, b: &BlockVector) {
    for (x, y) in a.data_mut().iter_mut().zip(b.data()) {
        *x += y;
    }
}

/// `||(B (x) I) u + (I (x) A) u - b|| / ||b||`.
pub fn first_order_residual<O: SpatialOperator + ?Sized>(
    dt: f64,
    op: &O,
    u: &BlockVector,
    b: &BlockVector,
) -> Result<f64> {
    let pool = worker_pool(1)?;
    let bm = assemble_b(u.n(), dt)?;
    let mut r = bm.apply_blocks(u)?;
    add_assign(&mut r, &apply_op_blocks(op, u, &pool));
    sub_assign(&mut r, b);
    Ok(relative_norm(&r, b))
}

/// `||(B^2 (x) I) u + (I (x) A) u - b|| / ||b||`.
pub fn second_order_residual<O: SpatialOperator + ?Sized>(
    dt: f64,
    op: &O,
    u: &BlockVector,
    b: &BlockVector,
) -> Result<f64> {
    let pool = worker_pool(1)?;
    let bm = assemble_b(u.n(), dt)?;
    let mut r = bm.apply_blocks(&bm.apply_blocks(u)?)?;
    add_assign(&mut r, &apply_op_blocks(op, u, &pool));
    sub_assign(&mut r, b);
    Ok(relative_norm(&r, b))
}

/// Three-step solve of `(B (x) I + I (x) A) u = b` for any diagonalized
/// `B = V diag(shifts) V^{-1}`, e.g. a geometric-grid time matrix. No
/// residual is computed since `B` itself is not known here. The imaginary
/// residue is reported in the result, never rejected, so that badly
/// conditioned baselines still yield an error to measure.
pub fn solve_diagonalized<O: SpatialOperator + ?Sized>(
    decomp: &SpectralDecomposition,
    shifts: &[Complex64],
    op: &O,
    rhs: &BlockVector,
    workers: usize,
) -> Result<SolveReport> {
    if shifts.len() != decomp.n {
        return Err(Error::DimensionMismatch { expected: decomp.n, found: shifts.len() });
    }
    let pool = worker_pool(workers)?;
    let out = three_step(decomp, shifts, op, rhs, &pool, false)?;
    Ok(SolveReport {
        solution: out.solution,
        iterations: 1,
        residual_history: Vec::new(),
        phase_times: out.times,
        worker_count: workers,
        imag_residue: out.imag_residue,
    })
}

pub fn solve_first_order_linear<O: SpatialOperator + ?Sized>(
    decomp: &SpectralDecomposition,
    op: &O,
    rhs: &BlockVector,
    workers: usize,
) -> Result<SolveReport> {
    let pool = worker_pool(workers)?;
    let out = three_step(decomp, &decomp.eigenvalues, op, rhs, &pool, true)?;
    let residual = first_order_residual(decomp.dt, op, &out.solution, rhs)?;
    Ok(SolveReport {
        solution: out.solution,
        iterations: 1,
        residual_history: vec![residual],
        phase_times: out.times,
        worker_count: workers,
        imag_residue: out.imag_residue,
    })
}

/// Solves `(B^2 (x) I + I (x) A) u = b` with the shifts `lambda_j^2`.
pub fn solve_second_order_linear<O: SpatialOperator + ?Sized>(
    decomp: &SpectralDecomposition,
    op: &O,
    rhs: &BlockVector,
    workers: usize,
) -> Result<SolveReport> {
    if decomp.n < 2 {
        return Err(Error::InvalidArgument("second-order solves need n >= 2".into()));
    }
    let pool = worker_pool(workers)?;
    let shifts = decomp.eigenvalues_squared();
    let out = three_step(decomp, &shifts, op, rhs, &pool, true)?;
    let residual = second_order_residual(decomp.dt, op, &out.solution, rhs)?;
    Ok(SolveReport {
        solution: out.solution,
        iterations: 1,
        residual_history: vec![residual],
        phase_times: out.times,
        worker_count: workers,
        imag_residue: out.imag_residue,
    })
}

/// `v = (B (x) I) u - b_1` with `b_1 = (u0 / (2 dt), 0, ..., 0)`.
pub fn recover_velocity(decomp: &SpectralDecomposition, u: &BlockVector, u0: &[f64]) -> Result<BlockVector> {
    if u.n() != decomp.n {
        return Err(Error::DimensionMismatch { expected: decomp.n, found: u.n() });
    }
    if u0.len() != u.m() {
        return Err(Error::DimensionMismatch { expected: u.m(), found: u0.len() });
    }
    let bm = assemble_b(decomp.n, decomp.dt)?;
    let mut v = bm.apply_blocks(u)?;
    let scale = 0.5 / decomp.dt;
    for (x, y) in v.block_mut(0).iter_mut().zip(u0) {
        *x -= scale * y;
    }
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JacobianMode {
    /// Keep the averaged Jacobian as a spatial diagonal.
    Exact,
    /// Replace it by its spatial mean, a scalar shift. Approximate: the
    /// iteration converges more slowly.
    MeanShift,
}

#[derive(Debug, Clone, Copy)]
pub struct SniOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub jacobian: JacobianMode,
}

impl Default for SniOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 50, jacobian: JacobianMode::Exact }
    }
}

/// `||(B (x) I) u + (I (x) A) u + F(u) - b|| / ||b||`.
pub fn semilinear_residual(problem: &SemilinearProblem<'_>, u: &BlockVector, b: &BlockVector) -> Result<f64> {
    let pool = worker_pool(1)?;
    semilinear_residual_in(problem, u, b, &pool)
}

fn semilinear_residual_in(
    problem: &SemilinearProblem<'_>,
    u: &BlockVector,
    b: &BlockVector,
    pool: &ThreadPool,
) -> Result<f64> {
    let bm = assemble_b(u.n(), problem.grid.dt)?;
    let mut r = bm.apply_blocks(u)?;
    add_assign(&mut r, &apply_op_blocks(problem.operator, u, pool));
    let f = problem.nonlinearity.f;
    for (ri, ui) in r.data_mut().iter_mut().zip(u.data()) {
        *ri += f(*ui);
    }
    sub_assign(&mut r, b);
    Ok(relative_norm(&r, b))
}

/// Simplified Newton iteration from the zero initial guess.
///
/// Each step solves
/// `(B (x) I + I (x) (A + J_k)) u^{k+1} = b + (I (x) J_k) u^k - F(u^k)` with
/// `J_k = diag((1/n) sum_j f'(u_j^k))`, using the three-step solver.
pub fn solve_semilinear_sni(
    problem: &SemilinearProblem<'_>,
    decomp: &SpectralDecomposition,
    opts: &SniOptions,
    workers: usize,
) -> Result<SolveReport> {
    solve_semilinear_sni_from(problem, decomp, opts, workers, None)
}

/// As [`solve_semilinear_sni`], starting from `initial` when given.
pub fn solve_semilinear_sni_from(
    problem: &SemilinearProblem<'_>,
    decomp: &SpectralDecomposition,
    opts: &SniOptions,
    workers: usize,
    initial: Option<BlockVector>,
) -> Result<SolveReport> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let n = problem.grid.n;
    let m = problem.operator.dim();
    if decomp.n != n || (decomp.dt - problem.grid.dt).abs() > 1e-14 * problem.grid.dt {
        return Err(Error::InvalidArgument("decomposition does not match the time grid".into()));
    }
    let pool = worker_pool(workers)?;
    let mut times = PhaseTimes::default();

    let clock = Instant::now();
    let b = rhs_first_order(problem.u0, problem.source, problem.grid.dt)?;
    let mut u = match initial {
        Some(u) if u.n() == n && u.m() == m => u,
        Some(u) => return Err(Error::DimensionMismatch { expected: n * m, found: u.n() * u.m() }),
        None => BlockVector::zeros(n, m),
    };
    let mut history = vec![semilinear_residual_in(problem, &u, &b, &pool)?];
    times.assembly += clock.elapsed().as_secs_f64();

    let (f, df) = (problem.nonlinearity.f, problem.nonlinearity.df);
    let mut imag_residue: f64 = 0.0;
    let mut iterations = 0;
    while *history.last().expect("non-empty") > opts.tol {
        if iterations >= opts.max_iter {
            return Err(Error::MaxIterExceeded {
                iterations,
                residual: *history.last().expect("non-empty"),
            });
        }
        let clock = Instant::now();
        let mut jac = vec![0.0; m];
        for j in 0..n {
            for (acc, &v) in jac.iter_mut().zip(u.block(j)) {
                *acc += df(v);
            }
        }
        jac.iter_mut().for_each(|v| *v /= n as f64);
        if opts.jacobian == JacobianMode::MeanShift {
            let mean = jac.iter().sum::<f64>() / m as f64;
            jac.iter_mut().for_each(|v| *v = mean);
        }
        let mut rk = b.clone();
        for j in 0..n {
            let (dst, src) = (rk.block_mut(j), u.block(j));
            for ((r, &uv), &a) in dst.iter_mut().zip(src).zip(&jac) {
                *r += a * uv - f(uv);
            }
        }
        let op = DiagonallyPerturbed::new(problem.operator, jac)?;
        times.assembly += clock.elapsed().as_secs_f64();

        let out = three_step(decomp, &decomp.eigenvalues, &op, &rk, &pool, true)?;
        times.add(&out.times);
        imag_residue = imag_residue.max(out.imag_residue);
        u = out.solution;
        iterations += 1;

        let clock = Instant::now();
        history.push(semilinear_residual_in(problem, &u, &b, &pool)?);
        times.assembly += clock.elapsed().as_secs_f64();
    }
    Ok(SolveReport {
        solution: u,
        iterations,
        residual_history: history,
        phase_times: times,
        worker_count: workers,
        imag_residue,
    })
}

/// Sequential trapezoidal rule for `u' + A u = g` with step sizes `steps`.
///
/// `(sigma I + A) u_j = sigma u_{j-1} - A u_{j-1} + g_{j-1} + g_j` with
/// `sigma = 2 / dt_j`. `source`, when given, holds `g` at `t_0, ..., t_n`.
/// Returns `u_1, ..., u_n`.
pub fn timestep_trapezoidal<O: SpatialOperator + ?Sized>(
    op: &O,
    steps: &[f64],
    u0: &[f64],
    source: Option<&[Vec<f64>]>,
) -> Result<BlockVector> {
    let m = op.dim();
    if u0.len() != m {
        return Err(Error::DimensionMismatch { expected: m, found: u0.len() });
    }
    if let Some(g) = source {
        if g.len() != steps.len() + 1 {
            return Err(Error::DimensionMismatch { expected: steps.len() + 1, found: g.len() });
        }
        if let Some(bad) = g.iter().find(|gj| gj.len() != m) {
            return Err(Error::DimensionMismatch { expected: m, found: bad.len() });
        }
    }
    if steps.iter().any(|&dt| !(dt > 0.0) || !dt.is_finite()) {
        return Err(Error::InvalidGrid("step sizes must be positive and finite".into()));
    }
    let mut out = BlockVector::zeros(steps.len(), m);
    let mut prev: Vec<Complex64> = u0.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut au = vec![ZERO; m];
    let mut rhs = vec![ZERO; m];
    let mut next = vec![ZERO; m];
    for (j, &dt) in steps.iter().enumerate() {
        let sigma = 2.0 / dt;
        op.apply(&prev, &mut au);
        for i in 0..m {
            rhs[i] = sigma * prev[i] - au[i];
        }
        if let Some(g) = source {
            for i in 0..m {
                rhs[i] += g[j][i] + g[j + 1][i];
            }
        }
        op.shifted_solve(Complex64::new(sigma, 0.0), &rhs, &mut next)?;
        for (d, z) in out.block_mut(j).iter_mut().zip(&next) {
            *d = z.re;
        }
        std::mem::swap(&mut prev, &mut next);
    }
    Ok(out)
}

/// `max_j ||u_j - r_j||_inf`.
pub fn global_error(solution: &BlockVector, reference: &BlockVector) -> Result<f64> {
    if solution.n() != reference.n() {
        return Err(Error::DimensionMismatch { expected: reference.n(), found: solution.n() });
    }
    if solution.m() != reference.m() {
        return Err(Error::DimensionMismatch { expected: reference.m(), found: solution.m() });
    }
    Ok(solution
        .data()
        .iter()
        .zip(reference.data())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}
