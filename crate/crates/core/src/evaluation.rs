//! Leave-one-subject-out folds, segment-to-subject aggregation and the
//! classification and regression metrics.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::dataset::{DatasetManifest, Group, MMSE_MAX};
use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, RowKey};
use crate::math::pearson;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub held_out_subject: String,
    pub train_rows: Vec<RowKey>,
    pub validation_rows: Vec<RowKey>,
    /// Row positions in the matrix the folds were built from.
    pub train_index: Vec<usize>,
    pub validation_index: Vec<usize>,
}

/// One fold per manifest subject, in manifest order.
pub fn loso_folds(manifest: &DatasetManifest, features: &FeatureMatrix) -> Result<Vec<FoldAssignment>> {
    let mut by_subject: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, r) in features.rows().iter().enumerate() {
        if manifest.get(&r.subject_id).is_none() {
            return Err(Error::UnknownSubject(r.subject_id.clone()));
        }
        by_subject.entry(r.subject_id.as_str()).or_default().push(i);
    }
    let keys: Vec<RowKey> = features.rows().iter().map(|r| r.key()).collect();
    let mut folds = Vec::with_capacity(manifest.len());
    for rec in manifest.records() {
        let id = rec.subject_id.as_str();
        let validation_index = by_subject
            .get(id)
            .cloned()
            .ok_or_else(|| Error::SubjectWithoutRows(rec.subject_id.clone()))?;
        let train_index: Vec<usize> = (0..features.n_rows())
            .filter(|&i| features.rows()[i].subject_id != id)
            .collect();
        let fold = FoldAssignment {
            held_out_subject: rec.subject_id.clone(),
            train_rows: train_index.iter().map(|&i| keys[i].clone()).collect(),
            validation_rows: validation_index.iter().map(|&i| keys[i].clone()).collect(),
            train_index,
            validation_index,
        };
        assert_no_leakage(&fold);
        folds.push(fold);
    }
    Ok(folds)
}

/// Panics if a validation subject appears among the training rows.
pub fn assert_no_leakage(fold: &FoldAssignment) {
    assert!(
        fold.validation_rows.iter().all(|k| k.subject_id == fold.held_out_subject)
            && fold.train_rows.iter().all(|k| k.subject_id != fold.held_out_subject),
        "fold for `{}` leaks validation rows into training",
        fold.held_out_subject
    );
}

/// Modal label; an exact tie goes to AD.
pub fn majority_vote(labels: &[Group]) -> Result<Group> {
    if labels.is_empty() {
        return Err(Error::Empty("segment labels"));
    }
    let ad = labels.iter().filter(|&&g| g == Group::Ad).count();
    Ok(if 2 * ad >= labels.len() { Group::Ad } else { Group::NonAd })
}

/// Mean score clamped to the MMSE range.
pub fn average_score(scores: &[f64]) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::Empty("segment scores"));
    }
    let m = scores.iter().sum::<f64>() / scores.len() as f64;
    Ok(m.clamp(0.0, f64::from(MMSE_MAX)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: Group,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Set when a ratio had a zero denominator and was reported as 0.
    pub undefined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub positive_class: Group,
    /// Counts with `positive_class` as positive.
    pub confusion: Confusion,
    /// One row per class, each computed with that class as positive; AD first.
    pub per_class: Vec<ClassMetrics>,
    pub accuracy: f64,
}

impl ClassificationReport {
    pub fn class(&self, g: Group) -> &ClassMetrics {
        self.per_class.iter().find(|m| m.class == g).expect("both classes present")
    }
}

fn ratio(num: usize, den: usize, undefined: &mut bool) -> f64 {
    if den == 0 {
        *undefined = true;
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn confusion_for(truth: &[Group], pred: &[Group], positive: Group) -> Confusion {
    let mut c = Confusion { tp: 0, tn: 0, fp: 0, fn_: 0 };
    for (&t, &p) in truth.iter().zip(pred) {
        match (t == positive, p == positive) {
            (true, true) => c.tp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fp += 1,
            (true, false) => c.fn_ += 1,
        }
    }
    c
}

pub fn classification_metrics(truth: &[Group], pred: &[Group], positive: Group) -> Result<ClassificationReport> {
    if truth.len() != pred.len() {
        return Err(Error::LengthMismatch {
            left: truth.len(),
            right: pred.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::Empty("labels"));
    }
    let per_class = [Group::Ad, Group::NonAd]
        .into_iter()
        .map(|g| {
            let c = confusion_for(truth, pred, g);
            let mut undefined = false;
            let precision = ratio(c.tp, c.tp + c.fp, &mut undefined);
            let recall = ratio(c.tp, c.tp + c.fn_, &mut undefined);
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                undefined = true;
                0.0
            };
            ClassMetrics {
                class: g,
                precision,
                recall,
                f1,
                undefined,
            }
        })
        .collect();
    let confusion = confusion_for(truth, pred, positive);
    Ok(ClassificationReport {
        positive_class: positive,
        accuracy: (confusion.tp + confusion.tn) as f64 / truth.len() as f64,
        confusion,
        per_class,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionReport {
    pub rmse: f64,
    pub pearson_r: f64,
    /// Set when r was undefined (fewer than 2 points or a constant side).
    pub r_undefined: bool,
    pub per_subject: Vec<(f64, f64)>,
}

pub fn regression_metrics(truth: &[f64], pred: &[f64]) -> Result<RegressionReport> {
    if truth.len() != pred.len() {
        return Err(Error::LengthMismatch {
            left: truth.len(),
            right: pred.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::Empty("scores"));
    }
    let mse = truth.iter().zip(pred).map(|(t, p)| (t - p) * (t - p)).sum::<f64>() / truth.len() as f64;
    let r = if truth.len() >= 2 { pearson(truth, pred) } else { None };
    Ok(RegressionReport {
        rmse: mse.sqrt(),
        pearson_r: r.unwrap_or(0.0),
        r_undefined: r.is_none(),
        per_subject: truth.iter().copied().zip(pred.iter().copied()).collect(),
    })
}

/// Groups per-row predictions by subject, keeping first-seen subject order.
pub fn group_by_subject<T: Clone>(subjects: &[&str], values: &[T]) -> Vec<(String, Vec<T>)> {
    let mut order: Vec<(String, Vec<T>)> = Vec::new();
    let mut index: BTreeMap<&str, usize> = BTreeMap::new();
    for (s, v) in subjects.iter().zip(values) {
        let i = *index.entry(s).or_insert_with(|| {
            order.push(((*s).into(), vec![]));
            order.len() - 1
        });
        order[i].1.push(v.clone());
    }
    order
}
