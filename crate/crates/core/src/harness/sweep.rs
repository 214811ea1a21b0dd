//! One-parameter sweeps over a base configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::config::ExperimentConfig;
use super::output::{format_real, write_outputs};
use super::runner::run_experiment_with_workers;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: Value,
    pub final_mean_regret: f64,
    pub final_se: f64,
    pub passed: bool,
}

/// Sets the dotted `path` (e.g. `model.noise_std`) inside a JSON document.
pub fn set_path(doc: &mut Value, path: &str, value: Value) -> Result<()> {
    let mut cur = doc;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        cur = match cur {
            Value::Object(map) => {
                if last {
                    map.insert((*part).to_string(), value);
                    return Ok(());
                }
                map.get_mut(*part)
                    .ok_or_else(|| Error::Config(format!("no key `{part}` on the path `{path}`")))?
            }
            Value::Array(items) => {
                let idx: usize = part
                    .parse()
                    .map_err(|_| Error::Config(format!("`{part}` is not an array index in `{path}`")))?;
                let len = items.len();
                let slot = items
                    .get_mut(idx)
                    .ok_or_else(|| Error::Config(format!("index {idx} out of range ({len}) in `{path}`")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(Error::Config(format!("`{path}` crosses a scalar"))),
        };
    }
    Err(Error::Config("empty parameter path".into()))
}

/// Parses a sweep value as JSON, falling back to a plain string.
pub fn parse_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

/// Runs the base configuration once per value. With `out_dir`, each point writes
/// to `out_dir/<param>=<value>/` and a `sweep.csv` summary is written.
pub fn run_sweep(
    base_text: &str,
    origin: &str,
    param: &str,
    values: &[String],
    out_dir: Option<&Path>,
    workers: usize,
) -> Result<Vec<SweepPoint>> {
    let base: Value = serde_json::from_str(base_text)
        .map_err(|e| Error::Config(format!("{origin}:{}:{}: {e}", e.line(), e.column())))?;
    let mut points = Vec::with_capacity(values.len());
    for raw in values {
        let value = parse_value(raw);
        let mut doc = base.clone();
        set_path(&mut doc, param, value.clone())?;
        let text = serde_json::to_string_pretty(&doc)?;
        let cfg = ExperimentConfig::from_str_at(&text, &format!("{origin} [{param}={raw}]"))?;
        let result = run_experiment_with_workers(&cfg, workers)?;
        if let Some(dir) = out_dir {
            write_outputs(&dir.join(format!("{param}={raw}")), &result, !cfg.output.no_rounds)?;
        }
        points.push(SweepPoint {
            value,
            final_mean_regret: result.report.final_mean_regret,
            final_se: result.report.final_se,
            passed: result.report.all_passed(),
        });
    }
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        let mut csv = format!("{param},final_mean_regret,final_se,passed\n");
        for (raw, p) in values.iter().zip(&points) {
            csv.push_str(&format!(
                "{raw},{},{},{}\n",
                format_real(p.final_mean_regret),
                format_real(p.final_se),
                p.passed
            ));
        }
        std::fs::write(dir.join("sweep.csv"), csv)?;
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn set_nested_paths() {
        let mut doc = json!({"a": {"b": [1, {"c": 2}]}, "h": 3});
        set_path(&mut doc, "h", json!(5)).unwrap();
        set_path(&mut doc, "a.b.1.c", json!(7)).unwrap();
        assert_eq!(doc, json!({"a": {"b": [1, {"c": 7}]}, "h": 5}));
        assert!(set_path(&mut doc, "a.x.y", json!(1)).is_err());
        assert!(set_path(&mut doc, "h.z", json!(1)).is_err());
        assert_eq!(parse_value("0.5"), json!(0.5));
        assert_eq!(parse_value("round_robin"), json!("round_robin"));
    }

    #[test]
    fn sweep_over_horizon() {
        let base = r#"{
  "model": { "kind": "tabular_bernoulli", "table": [[[0.2, 0.8]], [[0.8, 0.2]]] },
  "horizon": 5,
  "runs": 4
}"#;
        let dir = tempfile::tempdir().unwrap();
        let pts = run_sweep(base, "base", "horizon", &["5".into(), "20".into()], Some(dir.path()), 1).unwrap();
        assert_eq!(pts.len(), 2);
        assert!(dir.path().join("horizon=20/rounds.csv").exists());
        let summary = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
        assert_eq!(summary.lines().count(), 3);
    }
}
