//! The four commands as library functions returning result rows.

use std::f64::consts::PI;
use std::time::Instant;

use chebpint_core::cheb::{find_roots, NewtonOptions};
use chebpint_core::linalg::lu_inverse;
use chebpint_core::pint::{
    global_error, solve_diagonalized, solve_first_order_linear, solve_second_order_linear, solve_semilinear_sni,
    timestep_trapezoidal, worker_pool, JacobianMode, IMAG_REJECT, SniOptions, SolveReport,
};
use chebpint_core::spatial::{
    make_benchmark, BenchmarkKind, BenchmarkProblem, FirstOrderPair, Periodic1d, SpatialOperator,
};
use chebpint_core::spectral::{
    build_v_from_x, cond2_estimate, decompose_from_roots, decompose_with, decomposition_residual,
    eigenvalue_agreement, reference_eigenvalues, save_dump, CondMode, DecomposeOptions, SpectralDecomposition,
};
use chebpint_core::timedisc::{geometric_decomposition, geometric_grid, rhs_second_order, rhs_trapezoidal, BlockVector};
use chebpint_core::Complex64;

use crate::args::{square_side, BenchArgs, Cli, Command, CompareArgs, ConvergenceArgs, DecomposeArgs};
use crate::error::CliResult;
use crate::report::{finite, Report, ResultRow};

pub fn run(cli: &Cli) -> CliResult<Report> {
    cli.validate()?;
    let (command, config, rows) = match &cli.command {
        Command::Decompose(a) => ("decompose", serde_json::to_value(a)?, decompose(a, cli.workers)?),
        Command::Convergence(a) => ("convergence", serde_json::to_value(a)?, convergence(a, cli.workers)?),
        Command::CompareGeometric(a) => ("compare-geometric", serde_json::to_value(a)?, compare_geometric(a, cli.workers)?),
        Command::Bench(a) => ("bench", serde_json::to_value(a)?, bench(a)?),
    };
    let mut config = config;
    if let serde_json::Value::Object(map) = &mut config {
        map.insert("workers".into(), cli.workers.into());
        map.insert("format".into(), serde_json::to_value(cli.format)?);
    }
    Ok(Report { command: command.into(), config, rows })
}

pub fn decompose(args: &DecomposeArgs, workers: usize) -> CliResult<Vec<ResultRow>> {
    let pool = worker_pool(workers)?;
    let newton = NewtonOptions { tol: args.tol, max_iter: args.max_iter };
    let mut rows = Vec::with_capacity(args.n.len());
    for &n in &args.n {
        let dt = args.horizon.map_or(args.dt, |t| t / n as f64);
        let clock = Instant::now();
        let decomp = pool.install(|| -> chebpint_core::Result<SpectralDecomposition> {
            let roots = find_roots(n, newton)?;
            decompose_from_roots(&roots, dt, &DecomposeOptions { newton, cond: CondMode::Skip, residual: false })
        })?;
        let time_fast = clock.elapsed().as_secs_f64();

        let mut row = ResultRow::new("decompose", n, workers);
        row.iterations = Some(decomp.max_newton_iters);
        row.time_total = Some(time_fast);
        row.residual = finite(decomposition_residual(&decomp.v, &decomp.eigenvalues, &decomp.v_inv, dt)?);
        if !args.no_cond {
            row.cond2 = finite(cond2_estimate(&decomp.v)?);
        }
        if n <= args.reference_max {
            let clock = Instant::now();
            let eig_ref = reference_eigenvalues(n, dt)?;
            let xs: Vec<Complex64> = eig_ref.iter().map(|l| Complex64::new(0.0, -dt) * l).collect();
            let v_ref = build_v_from_x(&xs);
            let v_ref_inv = lu_inverse(&v_ref)?;
            row.time_reference = Some(clock.elapsed().as_secs_f64());
            row.residual_ref = finite(decomposition_residual(&v_ref, &eig_ref, &v_ref_inv, dt)?);
            row.eig_diff = finite(eigenvalue_agreement(&decomp.eigenvalues, &eig_ref)?);
        }
        if let Some(path) = &args.dump {
            save_dump(&decomp, path)?;
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Solves a benchmark problem with the method matching its kind.
pub fn solve_benchmark(
    problem: &BenchmarkProblem,
    decomp: &SpectralDecomposition,
    sni: &SniOptions,
    workers: usize,
) -> chebpint_core::Result<SolveReport> {
    match problem.kind {
        BenchmarkKind::Heat => solve_first_order_linear(decomp, &problem.operator, &problem.rhs()?, workers),
        BenchmarkKind::Wave => solve_second_order_linear(decomp, &problem.operator, &problem.rhs()?, workers),
        BenchmarkKind::Semilinear => {
            let sp = problem.semilinear().expect("semilinear kind has a nonlinearity");
            solve_semilinear_sni(&sp, decomp, sni, workers)
        }
    }
}

fn phase_columns(row: &mut ResultRow, report: &SolveReport, wall: f64) {
    let t = report.phase_times;
    row.time_assembly = Some(t.assembly);
    row.time_step_a = Some(t.step_a);
    row.time_step_b = Some(t.step_b);
    row.time_step_c = Some(t.step_c);
    row.time_total = Some(wall);
}

pub fn convergence(args: &ConvergenceArgs, workers: usize) -> CliResult<Vec<ResultRow>> {
    let kind: BenchmarkKind = args.kind.parse()?;
    let side = square_side(args.m)?;
    let sni = SniOptions {
        tol: args.tol,
        max_iter: args.max_iter,
        jacobian: if args.mean_jacobian { JacobianMode::MeanShift } else { JacobianMode::Exact },
    };
    let mut rows: Vec<ResultRow> = Vec::with_capacity(args.n.len());
    for &n in &args.n {
        let problem = make_benchmark(kind, side, n, args.horizon)?;
        let decomp = decompose_with(n, problem.grid.dt, &DecomposeOptions::solver_only(1e-10))?;
        let clock = Instant::now();
        let report = solve_benchmark(&problem, &decomp, &sni, workers)?;
        let wall = clock.elapsed().as_secs_f64();

        let mut row = ResultRow::new(format!("convergence-{kind}"), n, workers);
        row.m = Some(args.m);
        let err = global_error(&report.solution, &problem.reference_blocks())?;
        row.error = finite(err);
        row.error_exact = finite(global_error(&report.solution, &problem.exact_blocks())?);
        if let Some(prev) = rows.last() {
            if let Some(prev_err) = prev.error {
                row.order = finite((prev_err / err).ln() / (n as f64 / prev.n as f64).ln());
            }
        }
        row.iterations = Some(report.iterations);
        row.residual = finite(report.final_residual());
        phase_columns(&mut row, &report, wall);
        rows.push(row);
    }
    Ok(rows)
}

/// The periodic 1D wave test: grid points `x_j = -1 + j h`, `h = 2 / m`,
/// initial value `sin(2 pi x)` and zero velocity.
pub struct PeriodicWave {
    pub op: Periodic1d,
    pub u0: Vec<f64>,
    /// `A u0 = mu u0`.
    pub mu: f64,
}

impl PeriodicWave {
    pub fn new(m: usize) -> chebpint_core::Result<Self> {
        let h = 2.0 / m as f64;
        let op = Periodic1d::new(m, h)?;
        let u0: Vec<f64> = (1..=m).map(|j| (2.0 * PI * (-1.0 + j as f64 * h)).sin()).collect();
        let mut au = vec![0.0; m];
        op.apply_real(&u0, &mut au);
        let norm2: f64 = u0.iter().map(|v| v * v).sum();
        let mu = u0.iter().zip(&au).map(|(a, b)| a * b).sum::<f64>() / norm2;
        let defect = u0.iter().zip(&au).map(|(a, b)| (b - mu * a).abs()).fold(0.0, f64::max);
        if defect > 1e-8 * mu.abs().max(1.0) {
            return Err(chebpint_core::Error::InvalidArgument(format!(
                "sin(2 pi x) is not a grid eigenmode for m = {m}"
            )));
        }
        Ok(Self { op, u0, mu })
    }

    /// Space-discrete solution `cos(sqrt(mu) t) u0` at the given times.
    pub fn reference(&self, times: &[f64]) -> BlockVector {
        let w = self.mu.sqrt();
        let blocks: Vec<Vec<f64>> = times
            .iter()
            .map(|&t| self.u0.iter().map(|v| (w * t).cos() * v).collect())
            .collect();
        BlockVector::from_blocks(&blocks).expect("equal block lengths")
    }
}

fn displacement(w: &BlockVector, m: usize) -> BlockVector {
    let blocks: Vec<Vec<f64>> = (0..w.n()).map(|j| w.block(j)[..m].to_vec()).collect();
    BlockVector::from_blocks(&blocks).expect("equal block lengths")
}

pub fn compare_geometric(args: &CompareArgs, workers: usize) -> CliResult<Vec<ResultRow>> {
    let wave = PeriodicWave::new(args.m)?;
    let m = args.m;
    let pair = FirstOrderPair::new(&wave.op);
    let mut w0 = wave.u0.clone();
    w0.resize(2 * m, 0.0);
    let mut qw0 = vec![0.0; 2 * m];
    pair.apply_real(&w0, &mut qw0);
    let mut rows = Vec::new();
    for n in args.n_min..=args.n_max {
        let grid = geometric_grid(n, args.tau, args.dt_last)?;
        let reference = wave.reference(&grid.points());

        let mut geo = ResultRow::new("geometric", n, workers);
        geo.m = Some(m);
        let clock = Instant::now();
        let outcome = geometric_decomposition(&grid).and_then(|d| {
            let rhs = rhs_trapezoidal(&grid, &w0, &qw0)?;
            let rep = solve_diagonalized(&d, &d.eigenvalues, &pair, &rhs, workers)?;
            Ok((d, rep))
        });
        match outcome {
            Ok((d, rep)) => {
                geo.time_total = Some(clock.elapsed().as_secs_f64());
                geo.error = finite(global_error(&displacement(&rep.solution, m), &reference)?);
                geo.residual = finite(d.residual);
                match cond2_estimate(&d.v) {
                    Ok(c) => geo.cond2 = finite(c),
                    Err(e) => geo.note = Some(e.to_string()),
                }
                if geo.error.is_none() {
                    geo.note = Some("non-finite solution".into());
                } else if rep.imag_residue > IMAG_REJECT {
                    geo.note = Some(format!("imaginary residue {:.3e}", rep.imag_residue));
                }
            }
            Err(e) => geo.note = Some(e.to_string()),
        }
        rows.push(geo);

        let mut tr = ResultRow::new("tr-sequential", n, 1);
        tr.m = Some(m);
        let clock = Instant::now();
        let w = timestep_trapezoidal(&pair, &grid.steps, &w0, None)?;
        tr.time_total = Some(clock.elapsed().as_secs_f64());
        tr.error = finite(global_error(&displacement(&w, m), &reference)?);
        rows.push(tr);

        let mut new = ResultRow::new("uniform-bvm", n, workers);
        new.m = Some(m);
        let dt = grid.horizon / n as f64;
        let clock = Instant::now();
        let d = decompose_with(n, dt, &DecomposeOptions { residual: true, ..DecomposeOptions::default() })?;
        let rhs = rhs_second_order(&wave.u0, &vec![0.0; m], &vec![vec![0.0; m]; n], dt)?;
        let rep = solve_second_order_linear(&d, &wave.op, &rhs, workers)?;
        new.time_total = Some(clock.elapsed().as_secs_f64());
        let times: Vec<f64> = (1..=n).map(|j| j as f64 * dt).collect();
        new.error = finite(global_error(&rep.solution, &wave.reference(&times))?);
        new.cond2 = d.cond2.and_then(finite);
        new.residual = finite(d.residual);
        rows.push(new);
    }
    Ok(rows)
}

/// Median of `reps` timed runs; returns the run with the median wall time.
fn timed_median<T>(reps: usize, mut f: impl FnMut() -> chebpint_core::Result<T>) -> chebpint_core::Result<(T, f64)> {
    let mut runs = Vec::with_capacity(reps);
    for _ in 0..reps {
        let clock = Instant::now();
        let out = f()?;
        runs.push((out, clock.elapsed().as_secs_f64()));
    }
    runs.sort_by(|a, b| a.1.total_cmp(&b.1));
    Ok(runs.swap_remove(reps / 2))
}

pub fn bench(args: &BenchArgs) -> CliResult<Vec<ResultRow>> {
    let kind: BenchmarkKind = args.kind.parse()?;
    let side = square_side(args.m)?;
    let sni = SniOptions { tol: args.tol, max_iter: args.max_iter, jacobian: JacobianMode::Exact };
    let mut rows = Vec::new();

    let problem = make_benchmark(kind, side, args.n, args.horizon)?;
    let decomp = decompose_with(args.n, problem.grid.dt, &DecomposeOptions::solver_only(1e-10))?;
    let reference = problem.reference_blocks();
    let mut base: Option<(f64, BlockVector)> = None;
    let mut prev_speedup = None;
    for &s in &args.workers_list {
        let (report, wall) = timed_median(args.reps, || solve_benchmark(&problem, &decomp, &sni, s))?;
        let mut row = ResultRow::new(format!("strong-{kind}"), args.n, s);
        row.m = Some(args.m);
        row.error = finite(global_error(&report.solution, &reference)?);
        row.iterations = Some(report.iterations);
        row.residual = finite(report.final_residual());
        phase_columns(&mut row, &report, wall);
        let (t1, sol1) = base.get_or_insert_with(|| (wall, report.solution.clone()));
        row.deviation = Some(global_error(&report.solution, sol1)?);
        let speedup = *t1 / wall;
        row.speedup = finite(speedup);
        row.strong_eff = finite(speedup / s as f64);
        if let Some(prev) = prev_speedup {
            if s >= 2 && speedup < prev {
                row.note = Some("speedup decreased".into());
            }
        }
        prev_speedup = Some(speedup);
        rows.push(row);
    }

    let mut weak_base_time = None;
    for &s in &args.workers_list {
        let n = args.weak_base * s;
        let problem = make_benchmark(kind, side, n, args.horizon)?;
        let decomp = decompose_with(n, problem.grid.dt, &DecomposeOptions::solver_only(1e-10))?;
        let (report, wall) = timed_median(args.reps, || solve_benchmark(&problem, &decomp, &sni, s))?;
        let mut row = ResultRow::new(format!("weak-{kind}"), n, s);
        row.m = Some(args.m);
        row.error = finite(global_error(&report.solution, &problem.reference_blocks())?);
        row.iterations = Some(report.iterations);
        phase_columns(&mut row, &report, wall);
        let t1 = *weak_base_time.get_or_insert(wall);
        row.weak_eff = finite(t1 / wall);
        rows.push(row);
    }
    Ok(rows)
}
