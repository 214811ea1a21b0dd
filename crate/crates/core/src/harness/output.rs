//! `rounds.csv` and `report.json` writers.
//!
//! CSV columns: `run,t,x,a,loss,instant_regret,cum_regret,info_gain,rho_t,delta_t`.
//! Reals carry 12 significant digits. Undefined ratios and diagnostics that were
//! not computed are empty cells. For Gaussian runs `info_gain` is the estimated
//! squared-error gain and `rho_t`/`delta_t` its estimated ratio, when enabled.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use super::runner::{AggregateReport, ExperimentResult};
use crate::environment::RoundRecord;
use crate::error::Result;

pub const CSV_HEADER: &str = "run,t,x,a,loss,instant_regret,cum_regret,info_gain,rho_t,delta_t";

/// `v` rounded to 12 significant digits, printed in shortest form.
pub fn format_real(v: f64) -> String {
    if !v.is_finite() {
        return String::new();
    }
    let rounded: f64 = format!("{v:.11e}").parse().unwrap_or(v);
    if rounded == 0.0 {
        "0".to_string()
    } else {
        format!("{rounded}")
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(format_real).unwrap_or_default()
}

pub fn csv_row(run: usize, r: &RoundRecord) -> String {
    let (gain, rho, delta) = match (&r.diagnostics, &r.gaussian) {
        (Some(d), _) => (Some(d.info_gain), d.lifted_ratio.value(), d.decoupling.value()),
        (None, Some(g)) => match &g.ratio_estimate {
            Some(e) => (Some(e.surrogate_gain), Some(e.ratio), Some(e.ratio)),
            None => (None, None, None),
        },
        _ => (None, None, None),
    };
    let mut line = String::new();
    let _ = write!(
        line,
        "{run},{},{},{},{},{},{},{},{},{}",
        r.t,
        r.x,
        r.a,
        format_real(r.loss),
        format_real(r.instant_regret),
        format_real(r.cum_regret),
        opt(gain),
        opt(rho),
        opt(delta)
    );
    line
}

/// Writes all completed runs in run-index order.
pub fn write_rounds_csv(path: &Path, result: &ExperimentResult) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{CSV_HEADER}")?;
    for (i, run) in result.runs.iter().enumerate() {
        if let Ok(rec) = run {
            for r in &rec.rounds {
                writeln!(out, "{}", csv_row(i, r))?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_report(path: &Path, report: &AggregateReport) -> Result<()> {
    let value = serde_json::to_value(report)?;
    let text = serde_json::to_string_pretty(&round_json(value))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

/// Rounds every float to 12 significant digits; non-finite values become null.
fn round_json(v: serde_json::Value) -> serde_json::Value {
    use serde_json::Value;
    match v {
        Value::Number(n) if n.is_f64() => {
            let f = n.as_f64().unwrap_or(0.0);
            format_real(f)
                .parse::<f64>()
                .ok()
                .and_then(serde_json::Number::from_f64)
                .map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

/// Writes `rounds.csv` (unless skipped) and `report.json` into `dir`.
pub fn write_outputs(dir: &Path, result: &ExperimentResult, rounds: bool) -> Result<()> {
    fs::create_dir_all(dir)?;
    if rounds {
        write_rounds_csv(&dir.join("rounds.csv"), result)?;
    }
    write_report(&dir.join("report.json"), &result.report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_digits() {
        assert_eq!(format_real(0.1 + 0.2), "0.3");
        assert_eq!(format_real(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_real(-2.5e-20), "-0.000000000000000000025");
        assert_eq!(format_real(0.0), "0");
        assert_eq!(format_real(-0.0), "0");
        assert_eq!(format_real(f64::NAN), "");
        assert_eq!(format_real(123456789.0123456), "123456789.012");
    }
}
