use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::args::Format;
use crate::error::{CliError, CliResult};

/// One line of experiment output. Quantities that do not apply to an
/// experiment are `None` and written as empty CSV fields or JSON `null`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: String,
    pub n: usize,
    pub m: Option<usize>,
    pub workers: usize,
    /// Global error against the reference solution of the space-discrete problem.
    pub error: Option<f64>,
    /// Global error against the continuous manufactured solution.
    pub error_exact: Option<f64>,
    /// Observed order against the previous row of the same experiment.
    pub order: Option<f64>,
    pub cond2: Option<f64>,
    pub residual: Option<f64>,
    pub residual_ref: Option<f64>,
    pub eig_diff: Option<f64>,
    pub iterations: Option<usize>,
    /// Largest deviation from the single-worker solution.
    pub deviation: Option<f64>,
    pub time_assembly: Option<f64>,
    pub time_step_a: Option<f64>,
    pub time_step_b: Option<f64>,
    pub time_step_c: Option<f64>,
    pub time_total: Option<f64>,
    pub time_reference: Option<f64>,
    pub speedup: Option<f64>,
    pub strong_eff: Option<f64>,
    pub weak_eff: Option<f64>,
    pub note: Option<String>,
}

/// `Some(x)` for finite `x`.
pub fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

pub const COLUMNS: [&str; 23] = [
    "experiment",
    "n",
    "m",
    "workers",
    "error",
    "error_exact",
    "order",
    "cond2",
    "residual",
    "residual_ref",
    "eig_diff",
    "iterations",
    "deviation",
    "time_assembly",
    "time_step_a",
    "time_step_b",
    "time_step_c",
    "time_total",
    "time_reference",
    "speedup",
    "strong_eff",
    "weak_eff",
    "note",
];

fn fmt_f(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

fn fmt_u(v: Option<usize>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl ResultRow {
    pub fn new(experiment: impl Into<String>, n: usize, workers: usize) -> Self {
        Self { experiment: experiment.into(), n, workers, ..Self::default() }
    }

    fn to_record(&self) -> Vec<String> {
        vec![
            self.experiment.clone(),
            self.n.to_string(),
            fmt_u(self.m),
            self.workers.to_string(),
            fmt_f(self.error),
            fmt_f(self.error_exact),
            fmt_f(self.order),
            fmt_f(self.cond2),
            fmt_f(self.residual),
            fmt_f(self.residual_ref),
            fmt_f(self.eig_diff),
            fmt_u(self.iterations),
            fmt_f(self.deviation),
            fmt_f(self.time_assembly),
            fmt_f(self.time_step_a),
            fmt_f(self.time_step_b),
            fmt_f(self.time_step_c),
            fmt_f(self.time_total),
            fmt_f(self.time_reference),
            fmt_f(self.speedup),
            fmt_f(self.strong_eff),
            fmt_f(self.weak_eff),
            self.note.clone().unwrap_or_default(),
        ]
    }

    fn from_record(rec: &csv::StringRecord) -> CliResult<Self> {
        let ncols = COLUMNS.len();
        if rec.len() != ncols {
            return Err(CliError::Parse(format!("expected {ncols} fields, found {}", rec.len())));
        }
        let field = |i: usize| rec.get(i).unwrap_or_default();
        let req_u = |i: usize| -> CliResult<usize> {
            field(i)
                .parse()
                .map_err(|_| CliError::Parse(format!("bad integer in column {}", COLUMNS[i])))
        };
        let opt_u = |i: usize| -> CliResult<Option<usize>> {
            if field(i).is_empty() {
                Ok(None)
            } else {
                req_u(i).map(Some)
            }
        };
        let opt_f = |i: usize| -> CliResult<Option<f64>> {
            if field(i).is_empty() {
                return Ok(None);
            }
            field(i)
                .parse()
                .map(Some)
                .map_err(|_| CliError::Parse(format!("bad number in column {}", COLUMNS[i])))
        };
        Ok(Self {
            experiment: field(0).to_string(),
            n: req_u(1)?,
            m: opt_u(2)?,
            workers: req_u(3)?,
            error: opt_f(4)?,
            error_exact: opt_f(5)?,
            order: opt_f(6)?,
            cond2: opt_f(7)?,
            residual: opt_f(8)?,
            residual_ref: opt_f(9)?,
            eig_diff: opt_f(10)?,
            iterations: opt_u(11)?,
            deviation: opt_f(12)?,
            time_assembly: opt_f(13)?,
            time_step_a: opt_f(14)?,
            time_step_b: opt_f(15)?,
            time_step_c: opt_f(16)?,
            time_total: opt_f(17)?,
            time_reference: opt_f(18)?,
            speedup: opt_f(19)?,
            strong_eff: opt_f(20)?,
            weak_eff: opt_f(21)?,
            note: Some(field(22).to_string()).filter(|s| !s.is_empty()),
        })
    }
}

/// Everything one command produces: the command name, its configuration and
/// the result rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub config: serde_json::Value,
    pub rows: Vec<ResultRow>,
}

pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS)?;
    for row in rows {
        w.write_record(row.to_record())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> CliResult<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(COLUMNS.iter().copied()) {
        return Err(CliError::Parse("unexpected header".into()));
    }
    r.records().map(|rec| ResultRow::from_record(&rec?)).collect()
}

pub fn write_json<W: Write>(report: &Report, mut out: W) -> CliResult<()> {
    serde_json::to_writer_pretty(&mut out, report)?;
    writeln!(out)?;
    Ok(())
}

pub fn read_json<R: Read>(input: R) -> CliResult<Report> {
    Ok(serde_json::from_reader(input)?)
}

pub fn write_report<W: Write>(report: &Report, format: Format, out: W) -> CliResult<()> {
    match format {
        Format::Csv => write_csv(&report.rows, out),
        Format::Json => write_json(report, out),
    }
}
