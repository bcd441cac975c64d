//! Feature sets × models under LOSO or a fixed train/test split.
//!
//! Per fold: median imputation, the duration filter, z-scoring, fit,
//! predict, then segment predictions are collapsed to one per subject.
//! Every step is fitted on the training rows of that fold only.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::str::FromStr;
use serde::{Deserialize, Serialize};

use crate::dataset::{DatasetManifest, Group};
use crate::error::{Error, Result};
use crate::evaluation::{
    average_score, classification_metrics, group_by_subject, loso_folds, majority_vote, regression_metrics,
    ClassificationReport, RegressionReport,
};
use crate::features::{standardize, ColumnFilterReport, CorrelationFilter, FeatureMatrix, MedianImputer};
use crate::learners::{fit, ModelKind, ModelSpec, Predictions, Target};
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Classification,
    Regression,
}

impl FromStr for Task {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "classification" => Ok(Task::Classification),
            "regression" => Ok(Task::Regression),
            o => Err(Error::Config(format!("unknown task `{o}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    Loso,
    TrainTest,
}

impl FromStr for EvalMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "loso" => Ok(EvalMode::Loso),
            "train_test" => Ok(EvalMode::TrainTest),
            o => Err(Error::Config(format!("unknown mode `{o}`"))),
        }
    }
}

/// Where the duration filter is fitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterScope {
    /// On the training rows of each fold.
    Fold,
    /// Once on all training rows, before folds are formed.
    Global,
}

impl FromStr for FilterScope {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "fold" => Ok(FilterScope::Fold),
            "global" => Ok(FilterScope::Global),
            o => Err(Error::Config(format!("unknown filter scope `{o}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    pub name: String,
    pub train: FeatureMatrix,
    /// Rows for the held-out test split (train_test mode only).
    pub test: Option<FeatureMatrix>,
    pub duration_filter: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub task: Task,
    pub mode: EvalMode,
    pub seed: u64,
    pub models: Vec<ModelSpec>,
    pub filter: CorrelationFilter,
    pub filter_scope: FilterScope,
    pub standardize: bool,
}

impl ExperimentConfig {
    pub fn new(task: Task, mode: EvalMode, models: Vec<ModelKind>) -> Self {
        Self {
            task,
            mode,
            seed: 0,
            models: models.into_iter().map(ModelSpec::new).collect(),
            filter: CorrelationFilter::default(),
            filter_scope: FilterScope::Fold,
            standardize: true,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ExperimentInputs<'a> {
    pub train: &'a DatasetManifest,
    pub test: Option<&'a DatasetManifest>,
    pub feature_sets: &'a [FeatureSet],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Outcome {
    Class(Group),
    Score(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentPrediction {
    pub subject_id: String,
    pub segment_index: u32,
    pub predicted: Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectPrediction {
    pub subject_id: String,
    pub truth: Outcome,
    pub predicted: Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldTrace {
    /// Held-out subject, or `test` in train_test mode.
    pub fold: String,
    pub n_train_rows: usize,
    pub n_validation_rows: usize,
    pub retained_columns: usize,
    pub seed: u64,
    pub segments: Vec<SegmentPrediction>,
    pub subjects: Vec<SubjectPrediction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metrics {
    Classification(ClassificationReport),
    Regression(RegressionReport),
}

impl Metrics {
    /// Accuracy for classification, RMSE for regression.
    pub fn headline(&self) -> f64 {
        match self {
            Metrics::Classification(r) => r.accuracy,
            Metrics::Regression(r) => r.rmse,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub feature_set: String,
    pub model: ModelKind,
    pub segment_level: Metrics,
    pub subject_level: Metrics,
    pub folds: Vec<FoldTrace>,
}

/// Feature sets down the rows, models across the columns, with means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub name: String,
    pub row_labels: Vec<String>,
    pub column_labels: Vec<String>,
    pub cells: Vec<Vec<f64>>,
    pub row_means: Vec<f64>,
    pub column_means: Vec<f64>,
    pub grand_mean: f64,
}

impl ResultTable {
    pub fn new(name: &str, row_labels: Vec<String>, column_labels: Vec<String>, cells: Vec<Vec<f64>>) -> Self {
        let mean = |v: &[f64]| if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
        let row_means: Vec<f64> = cells.iter().map(|r| mean(r)).collect();
        let column_means: Vec<f64> = (0..column_labels.len())
            .map(|j| mean(&cells.iter().map(|r| r[j]).collect::<Vec<_>>()))
            .collect();
        let all: Vec<f64> = cells.iter().flatten().copied().collect();
        Self {
            name: name.to_string(),
            grand_mean: mean(&all),
            row_labels,
            column_labels,
            cells,
            row_means,
            column_means,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSetSummary {
    pub name: String,
    pub n_rows: usize,
    pub n_columns: usize,
    pub n_subjects: usize,
    pub duration_filter: bool,
    pub global_filter: Option<ColumnFilterReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub scope: String,
    pub key: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub feature_sets: Vec<FeatureSetSummary>,
    pub decisions: Vec<Decision>,
    pub tables: Vec<ResultTable>,
    pub cells: Vec<CellReport>,
}

impl ExperimentReport {
    pub fn table(&self, name: &str) -> Option<&ResultTable> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn cell(&self, feature_set: &str, model: ModelKind) -> Option<&CellReport> {
        self.cells.iter().find(|c| c.feature_set == feature_set && c.model == model)
    }
}

#[derive(Debug, Clone, PartialEq)]
struct PlannedFold {
    name: String,
    train_index: Vec<usize>,
    validation_index: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
struct PreparedSet {
    name: String,
    train: FeatureMatrix,
    validation: FeatureMatrix,
    folds: Vec<PlannedFold>,
    summary: FeatureSetSummary,
}

/// One (feature set, model, fold) unit of work.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct FoldJob {
    pub set: usize,
    pub model: usize,
    pub fold: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldOutcome {
    pub job: FoldJob,
    pub trace: FoldTrace,
}

/// A validated experiment whose fold jobs can run in any order, on any
/// number of workers; `assemble` orders results by job.
#[derive(Debug)]
pub struct Experiment<'a> {
    cfg: &'a ExperimentConfig,
    inputs: ExperimentInputs<'a>,
    sets: Vec<PreparedSet>,
}

fn check_manifest_coverage(m: &FeatureMatrix, manifest: &DatasetManifest) -> Result<()> {
    for r in m.rows() {
        if manifest.get(&r.subject_id).is_none() {
            return Err(Error::UnknownSubject(r.subject_id.clone()));
        }
    }
    Ok(())
}

impl<'a> Experiment<'a> {
    pub fn new(cfg: &'a ExperimentConfig, inputs: ExperimentInputs<'a>) -> Result<Self> {
        if cfg.models.is_empty() {
            return Err(Error::Config("no models configured".into()));
        }
        for m in &cfg.models {
            if m.kind.is_classifier() != (cfg.task == Task::Classification) {
                return Err(Error::Config(format!("model `{}` does not fit a {:?} task", m.kind, cfg.task)));
            }
        }
        let mut seen = BTreeSet::new();
        if inputs.feature_sets.is_empty() {
            return Err(Error::Config("no feature sets configured".into()));
        }
        let mut sets = Vec::new();
        for fs in inputs.feature_sets {
            if !seen.insert(fs.name.as_str()) {
                return Err(Error::Config(format!("feature set `{}` listed twice", fs.name)));
            }
            sets.push(Self::prepare(cfg, &inputs, fs).map_err(|e| e.context(format!("feature set `{}`", fs.name)))?);
        }
        Ok(Self { cfg, inputs, sets })
    }

    fn prepare(cfg: &ExperimentConfig, inputs: &ExperimentInputs<'_>, fs: &FeatureSet) -> Result<PreparedSet> {
        let mut train = fs.train.clone();
        let mut validation = match cfg.mode {
            EvalMode::Loso => train.clone(),
            EvalMode::TrainTest => {
                let test = fs.test.clone().ok_or_else(|| Error::Config("train_test mode needs test features".into()))?;
                let manifest = inputs
                    .test
                    .ok_or_else(|| Error::Config("train_test mode needs a test manifest".into()))?;
                check_manifest_coverage(&test, manifest)?;
                if test.columns() != train.columns() {
                    return Err(Error::ColumnMismatch("train and test features have different columns".into()));
                }
                test
            }
        };
        check_manifest_coverage(&train, inputs.train)?;
        let global_filter = if fs.duration_filter && cfg.filter_scope == FilterScope::Global {
            let imputed = MedianImputer::fit(&train).transform(&train)?;
            let report = cfg.filter.report(&imputed)?;
            if report.retained.is_empty() {
                return Err(Error::InvalidInput("duration filter removed every column".into()));
            }
            train = train.select_columns(&report.retained)?;
            validation = validation.select_columns(&report.retained)?;
            Some(report)
        } else {
            None
        };
        let folds = match cfg.mode {
            EvalMode::Loso => {
                let subjects: BTreeSet<&str> = train.rows().iter().map(|r| r.subject_id.as_str()).collect();
                // only subjects with rows in this set take part
                let manifest = DatasetManifest::new(
                    inputs.train.split,
                    inputs
                        .train
                        .records()
                        .iter()
                        .filter(|r| subjects.contains(r.subject_id.as_str()))
                        .cloned()
                        .collect(),
                )?;
                loso_folds(&manifest, &train)?
                    .into_iter()
                    .map(|f| PlannedFold {
                        name: f.held_out_subject,
                        train_index: f.train_index,
                        validation_index: f.validation_index,
                    })
                    .collect()
            }
            EvalMode::TrainTest => vec![PlannedFold {
                name: "test".into(),
                train_index: (0..train.n_rows()).collect(),
                validation_index: (0..validation.n_rows()).collect(),
            }],
        };
        let n_subjects = train.rows().iter().map(|r| r.subject_id.as_str()).collect::<BTreeSet<_>>().len();
        Ok(PreparedSet {
            name: fs.name.clone(),
            summary: FeatureSetSummary {
                name: fs.name.clone(),
                n_rows: fs.train.n_rows(),
                n_columns: fs.train.n_cols(),
                n_subjects,
                duration_filter: fs.duration_filter,
                global_filter,
            },
            train,
            validation,
            folds,
        })
    }

    pub fn jobs(&self) -> Vec<FoldJob> {
        let mut jobs = Vec::new();
        for (s, set) in self.sets.iter().enumerate() {
            for m in 0..self.cfg.models.len() {
                for f in 0..set.folds.len() {
                    jobs.push(FoldJob { set: s, model: m, fold: f });
                }
            }
        }
        jobs
    }

    fn validation_manifest(&self) -> &DatasetManifest {
        match self.cfg.mode {
            EvalMode::Loso => self.inputs.train,
            EvalMode::TrainTest => self.inputs.test.expect("checked in new"),
        }
    }

    fn truth(&self, manifest: &DatasetManifest, subject: &str) -> Outcome {
        let rec = manifest.get(subject).expect("coverage checked in new");
        match self.cfg.task {
            Task::Classification => Outcome::Class(rec.group),
            Task::Regression => Outcome::Score(f64::from(rec.mmse)),
        }
    }

    pub fn run_job(&self, job: FoldJob) -> Result<FoldOutcome> {
        let set = &self.sets[job.set];
        let spec = &self.cfg.models[job.model];
        let fold = &set.folds[job.fold];
        self.run_fold(set, spec, fold)
            .map(|trace| FoldOutcome { job, trace })
            .map_err(|e| e.context(format!("feature set `{}`, model `{}`, fold `{}`", set.name, spec.kind, fold.name)))
    }

    fn run_fold(&self, set: &PreparedSet, spec: &ModelSpec, fold: &PlannedFold) -> Result<FoldTrace> {
        let mut train = set.train.select_rows(&fold.train_index);
        let mut val = set.validation.select_rows(&fold.validation_index);
        if let Some(v) = val.rows().iter().find(|r| train.rows().iter().any(|t| t.subject_id == r.subject_id)) {
            panic!("subject `{}` is in both training and validation rows", v.subject_id);
        }
        let imputer = MedianImputer::fit(&train);
        train = imputer.transform(&train)?;
        val = imputer.transform(&val)?;
        if set.summary.duration_filter && self.cfg.filter_scope == FilterScope::Fold {
            let report = self.cfg.filter.report(&train)?;
            if report.retained.is_empty() {
                return Err(Error::InvalidInput("duration filter removed every column".into()));
            }
            train = train.select_columns(&report.retained)?;
            val = val.select_columns(&report.retained)?;
        }
        if self.cfg.standardize {
            (train, val) = standardize(&train, &val)?;
        }
        let train_manifest = self.inputs.train;
        let seed = derive_seed(self.cfg.seed, &[spec.kind.key(), &set.name, &fold.name]);
        let spec = spec.clone().with_seed(seed);
        let model = match self.cfg.task {
            Task::Classification => {
                let y: Vec<Group> = train
                    .rows()
                    .iter()
                    .map(|r| train_manifest.get(&r.subject_id).expect("coverage checked").group)
                    .collect();
                fit(&spec, &train, Target::Classes(&y))?
            }
            Task::Regression => {
                let y: Vec<f64> = train
                    .rows()
                    .iter()
                    .map(|r| f64::from(train_manifest.get(&r.subject_id).expect("coverage checked").mmse))
                    .collect();
                fit(&spec, &train, Target::Scores(&y))?
            }
        };
        let predicted: Vec<Outcome> = match model.predict(&val)? {
            Predictions::Classes(c) => c.into_iter().map(Outcome::Class).collect(),
            Predictions::Scores(s) => s.into_iter().map(Outcome::Score).collect(),
        };
        let segments: Vec<SegmentPrediction> = val
            .rows()
            .iter()
            .zip(&predicted)
            .map(|(r, p)| SegmentPrediction {
                subject_id: r.subject_id.clone(),
                segment_index: r.segment_index,
                predicted: p.clone(),
            })
            .collect();
        let manifest = self.validation_manifest();
        let subjects = group_by_subject(&val.subjects(), &predicted)
            .into_iter()
            .map(|(subject_id, preds)| {
                let predicted = aggregate(&preds)?;
                Ok(SubjectPrediction {
                    truth: self.truth(manifest, &subject_id),
                    subject_id,
                    predicted,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FoldTrace {
            fold: fold.name.clone(),
            n_train_rows: train.n_rows(),
            n_validation_rows: val.n_rows(),
            retained_columns: train.n_cols(),
            seed,
            segments,
            subjects,
        })
    }

    /// Builds the report from outcomes in any order; every job must be present.
    pub fn assemble(&self, mut outcomes: Vec<FoldOutcome>) -> Result<ExperimentReport> {
        outcomes.sort_by_key(|o| o.job);
        let expected = self.jobs();
        if outcomes.len() != expected.len() || outcomes.iter().zip(&expected).any(|(o, j)| o.job != *j) {
            return Err(Error::InvalidInput("missing or duplicate fold outcomes".into()));
        }
        let manifest = self.validation_manifest();
        let mut cells = Vec::new();
        let mut it = outcomes.into_iter().peekable();
        for (s, set) in self.sets.iter().enumerate() {
            for (m, spec) in self.cfg.models.iter().enumerate() {
                let mut folds = Vec::new();
                while let Some(o) = it.next_if(|o| o.job.set == s && o.job.model == m) {
                    folds.push(o.trace);
                }
                let seg_truth: Vec<Outcome> = folds
                    .iter()
                    .flat_map(|f| f.segments.iter().map(|p| self.truth(manifest, &p.subject_id)))
                    .collect();
                let seg_pred: Vec<Outcome> =
                    folds.iter().flat_map(|f| f.segments.iter().map(|p| p.predicted.clone())).collect();
                let sub_truth: Vec<Outcome> = folds.iter().flat_map(|f| f.subjects.iter().map(|p| p.truth.clone())).collect();
                let sub_pred: Vec<Outcome> =
                    folds.iter().flat_map(|f| f.subjects.iter().map(|p| p.predicted.clone())).collect();
                cells.push(CellReport {
                    feature_set: set.name.clone(),
                    model: spec.kind,
                    segment_level: metrics(self.cfg.task, &seg_truth, &seg_pred)?,
                    subject_level: metrics(self.cfg.task, &sub_truth, &sub_pred)?,
                    folds,
                });
            }
        }
        let rows: Vec<String> = self.sets.iter().map(|s| s.name.clone()).collect();
        let cols: Vec<String> = self.cfg.models.iter().map(|m| m.kind.label().to_string()).collect();
        let grid = |f: &dyn Fn(&CellReport) -> f64| -> Vec<Vec<f64>> {
            cells.chunks(cols.len()).map(|chunk| chunk.iter().map(f).collect()).collect()
        };
        let tables = match self.cfg.task {
            Task::Classification => vec![
                ResultTable::new("segment_accuracy", rows.clone(), cols.clone(), grid(&|c| c.segment_level.headline())),
                ResultTable::new("subject_accuracy", rows.clone(), cols.clone(), grid(&|c| c.subject_level.headline())),
            ],
            Task::Regression => vec![
                ResultTable::new("segment_rmse", rows.clone(), cols.clone(), grid(&|c| c.segment_level.headline())),
                ResultTable::new("subject_rmse", rows.clone(), cols.clone(), grid(&|c| c.subject_level.headline())),
                ResultTable::new(
                    "subject_pearson_r",
                    rows.clone(),
                    cols.clone(),
                    grid(&|c| match &c.subject_level {
                        Metrics::Regression(r) => r.pearson_r,
                        Metrics::Classification(_) => 0.0,
                    }),
                ),
            ],
        };
        Ok(ExperimentReport {
            config: self.cfg.clone(),
            feature_sets: self.sets.iter().map(|s| s.summary.clone()).collect(),
            decisions: self.decisions(),
            tables,
            cells,
        })
    }

    fn decisions(&self) -> Vec<Decision> {
        let d = |scope: &str, key: &str, value: String| Decision {
            scope: scope.into(),
            key: key.into(),
            value,
        };
        let mut out = vec![
            d("pipeline", "imputation", "training-fold column median for non-finite values".into()),
            d(
                "pipeline",
                "standardize",
                if self.cfg.standardize { "z-score fitted on training fold" } else { "off" }.into(),
            ),
            d(
                "pipeline",
                "duration_filter",
                format!(
                    "|r| > {} against segment duration{}, scope {:?}",
                    self.cfg.filter.threshold,
                    self.cfg.filter.p_gate.map_or(String::new(), |p| format!(" and p < {p}")),
                    self.cfg.filter_scope
                ),
            ),
            d("aggregation", "classification", "majority vote, tie -> AD".into()),
            d("aggregation", "regression", "mean of segment scores clamped to [0, 30]".into()),
            d("metrics", "per_class", "each class treated as positive in turn; zero denominators reported as 0".into()),
            d("seeding", "streams", "seed derived from (root seed, model, feature set, fold)".into()),
        ];
        for spec in &self.cfg.models {
            for (k, v) in spec.decisions() {
                out.push(d(spec.kind.key(), &k, v));
            }
        }
        out
    }
}

fn aggregate(preds: &[Outcome]) -> Result<Outcome> {
    match preds.first() {
        Some(Outcome::Class(_)) => {
            let labels: Vec<Group> = preds
                .iter()
                .map(|p| match p {
                    Outcome::Class(g) => *g,
                    Outcome::Score(_) => unreachable!("mixed outcomes"),
                })
                .collect();
            Ok(Outcome::Class(majority_vote(&labels)?))
        }
        Some(Outcome::Score(_)) => {
            let scores: Vec<f64> = preds
                .iter()
                .map(|p| match p {
                    Outcome::Score(s) => *s,
                    Outcome::Class(_) => unreachable!("mixed outcomes"),
                })
                .collect();
            Ok(Outcome::Score(average_score(&scores)?))
        }
        None => Err(Error::Empty("predictions")),
    }
}

fn metrics(task: Task, truth: &[Outcome], pred: &[Outcome]) -> Result<Metrics> {
    match task {
        Task::Classification => {
            let g = |o: &Outcome| match o {
                Outcome::Class(g) => *g,
                Outcome::Score(_) => unreachable!("classification outcome"),
            };
            let t: Vec<Group> = truth.iter().map(g).collect();
            let p: Vec<Group> = pred.iter().map(g).collect();
            Ok(Metrics::Classification(classification_metrics(&t, &p, Group::Ad)?))
        }
        Task::Regression => {
            let s = |o: &Outcome| match o {
                Outcome::Score(s) => *s,
                Outcome::Class(_) => unreachable!("regression outcome"),
            };
            let t: Vec<f64> = truth.iter().map(s).collect();
            let p: Vec<f64> = pred.iter().map(s).collect();
            Ok(Metrics::Regression(regression_metrics(&t, &p)?))
        }
    }
}

/// Runs every fold job sequentially.
pub fn run_experiment(cfg: &ExperimentConfig, inputs: ExperimentInputs<'_>) -> Result<ExperimentReport> {
    let exp = Experiment::new(cfg, inputs)?;
    let outcomes = exp.jobs().into_iter().map(|j| exp.run_job(j)).collect::<Result<Vec<_>>>()?;
    exp.assemble(outcomes)
}
