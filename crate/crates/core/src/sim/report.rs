//! Result files. Each one starts from the run configuration so that it can
//! be regenerated exactly.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use super::McResult;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub method: String,
    pub runs: usize,
    pub coverage: f64,
    pub coverage_se: f64,
    pub width: f64,
    pub width_se: f64,
    pub infinite_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary<C: Serialize> {
    pub config: C,
    pub results: Vec<SummaryRow>,
}

impl<C: Serialize> Summary<C> {
    pub fn new(config: C, results: &[McResult]) -> Self {
        let results = results
            .iter()
            .map(|r| SummaryRow {
                method: r.method.clone(),
                runs: r.runs,
                coverage: r.coverage,
                coverage_se: r.coverage_se,
                width: r.width,
                width_se: r.width_se,
                infinite_fraction: r.infinite_fraction,
            })
            .collect();
        Self { config, results }
    }
}

/// Per-run rows `method,run,coverage,width,seed`, preceded by a
/// `# config <json>` comment line. Rows are ordered by method, then run.
pub fn write_csv(path: impl AsRef<Path>, config: &impl Serialize, results: &[McResult]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "# config {}", serde_json::to_string(config)?)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["method", "run", "coverage", "width", "seed"])?;
    for r in results {
        for rec in &r.records {
            w.serialize((&rec.method, rec.run, rec.coverage, rec.width, rec.seed))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Pretty-printed [`Summary`] with a trailing newline.
pub fn write_summary(path: impl AsRef<Path>, config: &impl Serialize, results: &[McResult]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, &Summary::new(config, results))?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{aggregate, RunRecord};

    fn result() -> McResult {
        let rec = |run, coverage| RunRecord {
            method: "split3".into(),
            run,
            coverage,
            width: 3.25,
            infinite_fraction: 0.0,
            seed: 42 + run as u64,
            theta: Some(1.6),
            dominance: None,
        };
        aggregate("split3", vec![rec(0, 0.9), rec(1, 0.8)])
    }

    #[test]
    fn csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("runs.csv");
        write_csv(&path, &serde_json::json!({"alpha": 0.1}), &[result()]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], r#"# config {"alpha":0.1}"#);
        assert_eq!(lines[1], "method,run,coverage,width,seed");
        assert_eq!(lines[2], "split3,0,0.9,3.25,42");
        assert_eq!(lines.len(), 4);
    }

    #[test]
    fn summary_echoes_config_and_means() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("summary.json");
        write_summary(&path, &serde_json::json!({"seed": 7}), &[result()]).unwrap();
        let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(v["config"]["seed"], 7);
        assert!((v["results"][0]["coverage"].as_f64().unwrap() - 0.85).abs() < 1e-15);
        assert!(v["results"][0]["coverage_se"].as_f64().unwrap() > 0.0);
    }
}
