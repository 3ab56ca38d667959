//! CSV and JSON emission. Floats use Rust's shortest round-trip formatting so
//! identical results give byte-identical files.

use std::fmt::Write as _;

use serde::Serialize;

use super::config::ExperimentConfig;
use super::experiments::{BbgkyRow, Check, ClosureRow, ExperimentRow, SweepReport};
use crate::error::Result;

pub const ROW_HEADER: &str = "t,error_1,error_2,norm_error_1,norm_error_2,bound,tau,trace_drift,energy_drift";
pub const SWEEP_HEADER_PREFIX: &str = "d,seed,lambda,n1_trace";
pub const CLOSURE_HEADER: &str = "t,order,deviation,norm_deviation";
pub const BBGKY_HEADER: &str = "t,order,residual_h,residual_half_h,ratio";
pub const CHECK_HEADER: &str = "check,passed,detail";

/// Shortest round-trip form, in exponent notation outside `[1e-4, 1e6)`.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e6).contains(&a) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn row_fields(r: &ExperimentRow) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{}",
        num(r.t),
        opt(r.error_1),
        opt(r.error_2),
        opt(r.norm_error_1),
        opt(r.norm_error_2),
        opt(r.bound),
        num(r.tau),
        num(r.trace_drift),
        num(r.energy_drift)
    )
}

pub fn rows_csv(rows: &[ExperimentRow]) -> String {
    let mut out = format!("{ROW_HEADER}\n");
    for r in rows {
        let _ = writeln!(out, "{}", row_fields(r));
    }
    out
}

pub fn sweep_csv(report: &SweepReport) -> String {
    let mut out = format!("{SWEEP_HEADER_PREFIX},{ROW_HEADER}\n");
    for cell in &report.cells {
        for r in &cell.rows {
            let _ = writeln!(out, "{},{},{},{},{}", cell.d, cell.seed, num(cell.lambda), num(cell.n1_trace), row_fields(r));
        }
    }
    // family averages, marked by a `mean` seed
    for mean in &report.means {
        for r in &mean.rows {
            let _ = writeln!(out, "{},mean,,,{}", mean.d, row_fields(r));
        }
    }
    out
}

pub fn closure_csv(rows: &[ClosureRow]) -> String {
    let mut out = format!("{CLOSURE_HEADER}\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{}", num(r.t), r.order, num(r.deviation), num(r.norm_deviation));
    }
    out
}

pub fn bbgky_csv(rows: &[BbgkyRow]) -> String {
    let mut out = format!("{BBGKY_HEADER}\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{},{}", num(r.t), r.order, num(r.residual_h), num(r.residual_half_h), num(r.ratio));
    }
    out
}

fn quote(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

pub fn checks_csv(checks: &[Check]) -> String {
    let mut out = format!("{CHECK_HEADER}\n");
    for c in checks {
        let _ = writeln!(out, "{},{},{}", quote(&c.name), c.passed, quote(&c.detail));
    }
    out
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    command: &'a str,
    version: &'static str,
    wall_time_s: f64,
    config: Option<&'a ExperimentConfig>,
    result: &'a T,
}

/// JSON mirror with the config echo, crate version and wall time.
pub fn to_json<T: Serialize>(
    command: &str,
    config: Option<&ExperimentConfig>,
    wall_time_s: f64,
    result: &T,
) -> Result<String> {
    let env = Envelope {
        command,
        version: env!("CARGO_PKG_VERSION"),
        wall_time_s,
        config,
        result,
    };
    Ok(serde_json::to_string_pretty(&env)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(t: f64) -> ExperimentRow {
        ExperimentRow {
            t,
            error_1: Some(0.25),
            error_2: None,
            norm_error_1: Some(0.125),
            norm_error_2: None,
            bound: None,
            tau: 0.5,
            trace_drift: 0.0,
            energy_drift: 1e-12,
        }
    }

    #[test]
    fn absent_fields_are_empty() {
        let csv = rows_csv(&[row(0.75)]);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(ROW_HEADER));
        assert_eq!(lines.next(), Some("0.75,0.25,,0.125,,,0.5,0,1e-12"));
    }

    #[test]
    fn number_forms() {
        assert_eq!(num(0.0), "0");
        assert_eq!(num(2.5e-7), "2.5e-7");
        assert_eq!(num(123.5), "123.5");
        assert_eq!(num(f64::INFINITY), "inf");
    }

    #[test]
    fn checks_are_quoted() {
        let csv = checks_csv(&[Check {
            name: "a".into(),
            passed: true,
            detail: "x, y".into(),
        }]);
        assert!(csv.ends_with("a,true,\"x, y\"\n"));
    }
}
