//! Report bundle: `report.json` (config echo, decisions, tables, per-fold
//! traces) plus flat CSV tables. Output bytes depend only on the report.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use adress_core::experiment::{ExperimentReport, Metrics, Outcome, ResultTable};

use crate::error::{csv_err, io, Error, Result};

pub const REPORT_JSON: &str = "report.json";

fn fmt_metric(v: f64) -> String {
    format!("{v:.6}")
}

fn outcome(o: &Outcome) -> String {
    match o {
        Outcome::Class(g) => g.to_string(),
        Outcome::Score(s) => format!("{s:.6}"),
    }
}

fn write_table(path: &Path, t: &ResultTable) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    let mut header = vec!["feature_set".to_string()];
    header.extend(t.column_labels.iter().cloned());
    header.push("mean".into());
    w.write_record(&header).map_err(csv_err(path))?;
    for ((label, row), m) in t.row_labels.iter().zip(&t.cells).zip(&t.row_means) {
        let mut rec = vec![label.clone()];
        rec.extend(row.iter().map(|&v| fmt_metric(v)));
        rec.push(fmt_metric(*m));
        w.write_record(&rec).map_err(csv_err(path))?;
    }
    let mut rec = vec!["mean".to_string()];
    rec.extend(t.column_means.iter().map(|&v| fmt_metric(v)));
    rec.push(fmt_metric(t.grand_mean));
    w.write_record(&rec).map_err(csv_err(path))?;
    w.flush().map_err(io(path))
}

/// Writes the bundle into `dir` and returns the files written.
pub fn write_bundle(dir: &Path, report: &ExperimentReport) -> Result<Vec<PathBuf>> {
    let tables_dir = dir.join("tables");
    std::fs::create_dir_all(&tables_dir).map_err(io(&tables_dir))?;
    let mut written = Vec::new();

    let json_path = dir.join(REPORT_JSON);
    let mut json = serde_json::to_string_pretty(report).map_err(|source| Error::Json {
        path: json_path.clone(),
        source,
    })?;
    json.push('\n');
    std::fs::write(&json_path, json).map_err(io(&json_path))?;
    written.push(json_path);

    for t in &report.tables {
        let p = tables_dir.join(format!("{}.csv", t.name));
        write_table(&p, t)?;
        written.push(p);
    }

    let p = dir.join("per_class.csv");
    let mut w = csv::Writer::from_path(&p).map_err(csv_err(&p))?;
    w.write_record(["feature_set", "model", "level", "class", "precision", "recall", "f1", "accuracy"])
        .map_err(csv_err(&p))?;
    for c in &report.cells {
        for (level, m) in [("segment", &c.segment_level), ("subject", &c.subject_level)] {
            if let Metrics::Classification(r) = m {
                for pc in &r.per_class {
                    w.write_record([
                        c.feature_set.clone(),
                        c.model.key().to_string(),
                        level.to_string(),
                        pc.class.to_string(),
                        fmt_metric(pc.precision),
                        fmt_metric(pc.recall),
                        fmt_metric(pc.f1),
                        fmt_metric(r.accuracy),
                    ])
                    .map_err(csv_err(&p))?;
                }
            }
        }
    }
    w.flush().map_err(io(&p))?;
    written.push(p);

    let p = dir.join("predictions.csv");
    let mut w = csv::Writer::from_path(&p).map_err(csv_err(&p))?;
    w.write_record(["feature_set", "model", "fold", "subject_id", "truth", "predicted"])
        .map_err(csv_err(&p))?;
    for c in &report.cells {
        for f in &c.folds {
            for s in &f.subjects {
                w.write_record([
                    c.feature_set.clone(),
                    c.model.key().to_string(),
                    f.fold.clone(),
                    s.subject_id.clone(),
                    outcome(&s.truth),
                    outcome(&s.predicted),
                ])
                .map_err(csv_err(&p))?;
            }
        }
    }
    w.flush().map_err(io(&p))?;
    written.push(p);
    Ok(written)
}

pub fn read_report(path: &Path) -> Result<ExperimentReport> {
    let text = std::fs::read_to_string(path).map_err(io(path))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// Plain-text rendering of every table, feature sets down, models across.
pub fn render(report: &ExperimentReport) -> String {
    let mut s = String::new();
    for t in &report.tables {
        let width = t.row_labels.iter().map(String::len).max().unwrap_or(0).max(11);
        let _ = writeln!(s, "{}", t.name);
        let _ = write!(s, "{:width$}", "feature_set");
        for c in &t.column_labels {
            let _ = write!(s, " {c:>8}");
        }
        let _ = writeln!(s, " {:>8}", "mean");
        for ((label, row), m) in t.row_labels.iter().zip(&t.cells).zip(&t.row_means) {
            let _ = write!(s, "{label:width$}");
            for v in row {
                let _ = write!(s, " {v:>8.3}");
            }
            let _ = writeln!(s, " {m:>8.3}");
        }
        let _ = write!(s, "{:width$}", "mean");
        for v in &t.column_means {
            let _ = write!(s, " {v:>8.3}");
        }
        let _ = writeln!(s, " {:>8.3}\n", t.grand_mean);
    }
    s
}
