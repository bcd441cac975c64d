//! Feature matrices keyed by (subject, segment), the duration-correlation
//! filter, fold-safe median imputation and z-scoring.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{mean, median, pearson, pearson_p_value, sample_sd};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RowKey {
    pub subject_id: String,
    pub segment_index: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub subject_id: String,
    pub segment_index: u32,
    pub duration_s: f64,
    pub values: Vec<f64>,
}

impl FeatureRow {
    pub fn key(&self) -> RowKey {
        RowKey {
            subject_id: self.subject_id.clone(),
            segment_index: self.segment_index,
        }
    }
}

/// Named-column numeric table. Values may be non-finite until imputed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    columns: Vec<String>,
    rows: Vec<FeatureRow>,
}

impl FeatureMatrix {
    pub fn new(columns: Vec<String>, rows: Vec<FeatureRow>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for c in &columns {
            if !seen.insert(c.as_str()) {
                return Err(Error::ColumnMismatch(format!("duplicate column `{c}`")));
            }
        }
        let mut keys = BTreeSet::new();
        for r in &rows {
            if r.values.len() != columns.len() {
                return Err(Error::ColumnMismatch(format!(
                    "row ({}, {}) has {} values for {} columns",
                    r.subject_id,
                    r.segment_index,
                    r.values.len(),
                    columns.len()
                )));
            }
            if !keys.insert((r.subject_id.as_str(), r.segment_index)) {
                return Err(Error::InvalidInput(format!(
                    "duplicate row key ({}, {})",
                    r.subject_id, r.segment_index
                )));
            }
        }
        Ok(Self { columns, rows })
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[FeatureRow] {
        &self.rows
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_values(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.values[j]).collect()
    }

    pub fn durations(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.duration_s).collect()
    }

    /// Subject ids in first-appearance order.
    pub fn subjects(&self) -> Vec<&str> {
        let mut seen = BTreeSet::new();
        self.rows
            .iter()
            .map(|r| r.subject_id.as_str())
            .filter(|s| seen.insert(*s))
            .collect()
    }

    /// Rows at `indices`, in that order.
    pub fn select_rows(&self, indices: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            columns: self.columns.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    pub fn filter_rows(&self, mut keep: impl FnMut(&FeatureRow) -> bool) -> FeatureMatrix {
        FeatureMatrix {
            columns: self.columns.clone(),
            rows: self.rows.iter().filter(|r| keep(r)).cloned().collect(),
        }
    }

    /// Keeps the named columns, in the given order.
    pub fn select_columns(&self, names: &[String]) -> Result<FeatureMatrix> {
        let idx: Vec<usize> = names
            .iter()
            .map(|n| {
                self.columns
                    .iter()
                    .position(|c| c == n)
                    .ok_or_else(|| Error::ColumnMismatch(format!("no column `{n}`")))
            })
            .collect::<Result<_>>()?;
        Ok(FeatureMatrix {
            columns: names.to_vec(),
            rows: self
                .rows
                .iter()
                .map(|r| FeatureRow {
                    values: idx.iter().map(|&j| r.values[j]).collect(),
                    ..r.clone()
                })
                .collect(),
        })
    }

    /// Prefixes every column with `<prefix>.`.
    pub fn namespaced(mut self, prefix: &str) -> FeatureMatrix {
        for c in self.columns.iter_mut() {
            *c = format!("{prefix}.{c}");
        }
        self
    }

    pub fn value_rows(&self) -> Vec<&[f64]> {
        self.rows.iter().map(|r| r.values.as_slice()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnFilterReport {
    pub retained: Vec<String>,
    /// (column, Pearson r against duration)
    pub removed: Vec<(String, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationFilter {
    /// Columns with |r| above this are removed.
    pub threshold: f64,
    /// When set, a column is removed only if additionally p < this
    /// (two-sided t-test on r).
    pub p_gate: Option<f64>,
}

impl Default for CorrelationFilter {
    fn default() -> Self {
        Self {
            threshold: 0.2,
            p_gate: None,
        }
    }
}

impl CorrelationFilter {
    /// Pearson r of each column against duration over finite rows;
    /// zero-variance columns get r = 0.
    pub fn column_correlations(&self, m: &FeatureMatrix) -> Vec<(f64, usize)> {
        let dur = m.durations();
        (0..m.n_cols())
            .map(|j| {
                let (xs, ds): (Vec<f64>, Vec<f64>) = m
                    .rows
                    .iter()
                    .zip(&dur)
                    .filter(|(r, d)| r.values[j].is_finite() && d.is_finite())
                    .map(|(r, d)| (r.values[j], *d))
                    .unzip();
                (pearson(&xs, &ds).unwrap_or(0.0), xs.len())
            })
            .collect()
    }

    pub fn report(&self, m: &FeatureMatrix) -> Result<ColumnFilterReport> {
        if m.n_rows() < 3 {
            return Err(Error::InvalidInput(format!(
                "correlation filter needs at least 3 rows, got {}",
                m.n_rows()
            )));
        }
        let mut retained = Vec::new();
        let mut removed = Vec::new();
        for (name, (r, n)) in m.columns.iter().zip(self.column_correlations(m)) {
            let significant = self.p_gate.is_none_or(|alpha| pearson_p_value(r, n) < alpha);
            if r.abs() > self.threshold && significant {
                removed.push((name.clone(), r));
            } else {
                retained.push(name.clone());
            }
        }
        Ok(ColumnFilterReport { retained, removed })
    }

    pub fn apply(&self, m: &FeatureMatrix) -> Result<(FeatureMatrix, ColumnFilterReport)> {
        let report = self.report(m)?;
        Ok((m.select_columns(&report.retained)?, report))
    }
}

/// Removes columns whose |Pearson r| with `duration_s` exceeds `threshold`.
pub fn correlation_filter(m: &FeatureMatrix, threshold: f64) -> Result<(FeatureMatrix, ColumnFilterReport)> {
    CorrelationFilter {
        threshold,
        p_gate: None,
    }
    .apply(m)
}

fn check_same_columns(a: &FeatureMatrix, b: &FeatureMatrix) -> Result<()> {
    if a.columns != b.columns {
        return Err(Error::ColumnMismatch(format!(
            "{} vs {} columns or differing names",
            a.n_cols(),
            b.n_cols()
        )));
    }
    Ok(())
}

/// Replaces non-finite values by the fitted column medians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MedianImputer {
    columns: Vec<String>,
    medians: Vec<f64>,
}

impl MedianImputer {
    /// Medians over finite training values; 0 for columns with none.
    pub fn fit(train: &FeatureMatrix) -> Self {
        let medians = (0..train.n_cols())
            .map(|j| {
                let finite: Vec<f64> = train.rows.iter().map(|r| r.values[j]).filter(|v| v.is_finite()).collect();
                if finite.is_empty() {
                    0.0
                } else {
                    median(&finite)
                }
            })
            .collect();
        Self {
            columns: train.columns.clone(),
            medians,
        }
    }

    pub fn transform(&self, m: &FeatureMatrix) -> Result<FeatureMatrix> {
        if m.columns != self.columns {
            return Err(Error::ColumnMismatch("imputer fitted on different columns".into()));
        }
        let mut out = m.clone();
        for r in out.rows.iter_mut() {
            for (v, med) in r.values.iter_mut().zip(&self.medians) {
                if !v.is_finite() {
                    *v = *med;
                }
            }
        }
        Ok(out)
    }
}

/// Per-column z-scoring with parameters from a training matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    columns: Vec<String>,
    means: Vec<f64>,
    /// Sample sd; columns with zero sd pass through untouched.
    sds: Vec<f64>,
}

impl Standardizer {
    pub fn fit(train: &FeatureMatrix) -> Result<Self> {
        if train.n_rows() < 2 {
            return Err(Error::InvalidInput("standardization needs at least 2 training rows".into()));
        }
        let (means, sds) = (0..train.n_cols())
            .map(|j| {
                let col = train.column_values(j);
                (mean(&col), sample_sd(&col))
            })
            .unzip();
        Ok(Self {
            columns: train.columns.clone(),
            means,
            sds,
        })
    }

    pub fn transform(&self, m: &FeatureMatrix) -> Result<FeatureMatrix> {
        if m.columns != self.columns {
            return Err(Error::ColumnMismatch("standardizer fitted on different columns".into()));
        }
        let mut out = m.clone();
        for r in out.rows.iter_mut() {
            for ((v, mu), sd) in r.values.iter_mut().zip(&self.means).zip(&self.sds) {
                if *sd > 0.0 {
                    *v = (*v - mu) / sd;
                }
            }
        }
        Ok(out)
    }
}

/// Z-scores both matrices with parameters fitted on `train` only.
pub fn standardize(train: &FeatureMatrix, apply_to: &FeatureMatrix) -> Result<(FeatureMatrix, FeatureMatrix)> {
    check_same_columns(train, apply_to)?;
    let s = Standardizer::fit(train)?;
    Ok((s.transform(train)?, s.transform(apply_to)?))
}

/// Builds a single-row-per-subject matrix from named vectors.
pub fn subject_level_matrix<'a>(
    columns: Vec<String>,
    rows: impl IntoIterator<Item = (&'a str, f64, Vec<f64>)>,
) -> Result<FeatureMatrix> {
    FeatureMatrix::new(
        columns,
        rows.into_iter()
            .map(|(s, d, values)| FeatureRow {
                subject_id: s.to_string(),
                segment_index: 0,
                duration_s: d,
                values,
            })
            .collect(),
    )
}
