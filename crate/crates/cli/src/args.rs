use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "chebpint", version, about = "Parallel-in-time solver experiments")]
pub struct Cli {
    /// Size of the worker pool.
    #[arg(long, global = true, env = "CHEBPINT_WORKERS", default_value_t = 1)]
    pub workers: usize,

    /// Output file (standard output when omitted).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Spectral decomposition of the time matrix: Newton iterations, cond2,
    /// residuals of the fast and reference paths.
    Decompose(DecomposeArgs),
    /// Global error against the manufactured solution for a list of n.
    Convergence(ConvergenceArgs),
    /// Geometric-step trapezoidal diagonalization vs the uniform-step method
    /// on the periodic 1D wave equation.
    CompareGeometric(CompareArgs),
    /// Wall times, speedup and efficiencies over worker counts.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DecomposeArgs {
    /// Numbers of time steps, comma separated.
    #[arg(long = "n", value_delimiter = ',', default_value = "64")]
    pub n: Vec<usize>,

    /// Time step. Overridden by --T.
    #[arg(long, default_value_t = 1.0)]
    pub dt: f64,

    /// Time horizon; sets dt = T / n.
    #[arg(long = "T")]
    pub horizon: Option<f64>,

    /// Newton tolerance.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,

    #[arg(long = "max-iter", default_value_t = 50)]
    pub max_iter: usize,

    /// Largest n for which the O(n^3) reference path runs.
    #[arg(long = "reference-max", default_value_t = 2048)]
    pub reference_max: usize,

    /// Skip the condition number.
    #[arg(long = "no-cond")]
    pub no_cond: bool,

    /// Write the decomposition to this file (single n only).
    #[arg(long)]
    pub dump: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ConvergenceArgs {
    #[arg(long, value_parser = ["heat", "wave", "semilinear"], default_value = "heat")]
    pub kind: String,

    /// Spatial unknowns; a perfect square.
    #[arg(long, default_value_t = 4096)]
    pub m: usize,

    #[arg(long = "n", value_delimiter = ',', default_value = "16,32,64,128,256")]
    pub n: Vec<usize>,

    #[arg(long = "T", default_value_t = 2.0)]
    pub horizon: f64,

    /// Relative residual tolerance of the simplified Newton iteration.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,

    #[arg(long = "max-iter", default_value_t = 50)]
    pub max_iter: usize,

    /// Use the scalar mean of the averaged Jacobian (approximate).
    #[arg(long = "mean-jacobian")]
    pub mean_jacobian: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CompareArgs {
    #[arg(long, default_value_t = 1.15)]
    pub tau: f64,

    #[arg(long = "dt-last", default_value_t = 1e-2)]
    pub dt_last: f64,

    #[arg(long = "n-min", default_value_t = 4)]
    pub n_min: usize,

    #[arg(long = "n-max", default_value_t = 50)]
    pub n_max: usize,

    /// Periodic grid points on (-1, 1); the mesh width is 2 / m.
    #[arg(long, default_value_t = 128)]
    pub m: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BenchArgs {
    #[arg(long, value_parser = ["heat", "wave", "semilinear"], default_value = "heat")]
    pub kind: String,

    #[arg(long, default_value_t = 4096)]
    pub m: usize,

    #[arg(long = "n", default_value_t = 64)]
    pub n: usize,

    /// Worker counts, ascending, starting at 1.
    #[arg(long = "workers-list", value_delimiter = ',', default_value = "1,2,4")]
    pub workers_list: Vec<usize>,

    #[arg(long = "T", default_value_t = 2.0)]
    pub horizon: f64,

    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,

    #[arg(long = "max-iter", default_value_t = 50)]
    pub max_iter: usize,

    /// Time steps per worker in the weak-scaling runs.
    #[arg(long = "weak-base", default_value_t = 2)]
    pub weak_base: usize,

    /// Repetitions per timing; the median is reported.
    #[arg(long, default_value_t = 3)]
    pub reps: usize,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn positive(name: &str, v: f64) -> CliResult<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(usage(format!("--{name} must be positive and finite (got {v})")))
    }
}

/// Side length of a square grid with `m` unknowns.
pub fn square_side(m: usize) -> CliResult<usize> {
    let side = (m as f64).sqrt().round() as usize;
    if side == 0 || side * side != m {
        return Err(usage(format!("--m must be a positive perfect square (got {m})")));
    }
    Ok(side)
}

impl Cli {
    pub fn validate(&self) -> CliResult<()> {
        if self.workers == 0 {
            return Err(usage("--workers must be at least 1"));
        }
        match &self.command {
            Command::Decompose(a) => {
                if a.n.is_empty() || a.n.contains(&0) {
                    return Err(usage("--n values must be at least 1"));
                }
                positive("dt", a.dt)?;
                if let Some(t) = a.horizon {
                    positive("T", t)?;
                }
                positive("tol", a.tol)?;
                if a.max_iter == 0 {
                    return Err(usage("--max-iter must be at least 1"));
                }
                if a.dump.is_some() && a.n.len() != 1 {
                    return Err(usage("--dump needs exactly one value of --n"));
                }
            }
            Command::Convergence(a) => {
                square_side(a.m)?;
                let min_n = if a.kind == "wave" { 2 } else { 1 };
                if a.n.is_empty() || a.n.iter().any(|&n| n < min_n) {
                    return Err(usage(format!("--n values must be at least {min_n}")));
                }
                positive("T", a.horizon)?;
                positive("tol", a.tol)?;
                if a.max_iter == 0 {
                    return Err(usage("--max-iter must be at least 1"));
                }
            }
            Command::CompareGeometric(a) => {
                if !(a.tau > 1.0) || !a.tau.is_finite() {
                    return Err(usage(format!("--tau must exceed 1 (got {})", a.tau)));
                }
                positive("dt-last", a.dt_last)?;
                if a.n_min < 2 || a.n_max < a.n_min {
                    return Err(usage("need 2 <= --n-min <= --n-max"));
                }
                if a.m < 3 {
                    return Err(usage("--m must be at least 3"));
                }
            }
            Command::Bench(a) => {
                square_side(a.m)?;
                if a.n < 2 {
                    return Err(usage("--n must be at least 2"));
                }
                if a.workers_list.first() != Some(&1) || a.workers_list.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(usage("--workers-list must start at 1 and increase strictly"));
                }
                if a.weak_base == 0 || (a.kind == "wave" && a.weak_base < 2) {
                    return Err(usage("--weak-base too small"));
                }
                if a.reps == 0 {
                    return Err(usage("--reps must be at least 1"));
                }
                positive("T", a.horizon)?;
                positive("tol", a.tol)?;
            }
        }
        Ok(())
    }
}
