//! The five classifiers and five regressors of the baseline, behind one
//! `fit`/`predict` surface.

mod boost;
mod forest;
mod gpr;
mod knn;
mod lda;
mod linreg;
pub mod smo;
mod svm;
pub mod tree;

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;
use serde::{Deserialize, Serialize};

use crate::dataset::Group;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::linalg::Matrix;

pub use boost::LsBoost;
pub use forest::RandomForest;
pub use gpr::{Gpr, GprHyper};
pub use knn::Knn;
pub use lda::Lda;
pub use linreg::LinearRegression;
pub use svm::{LinearSvc, RbfSvr};
pub use tree::{Criterion, DecisionTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    Lda,
    DtClass,
    Knn,
    LinearSvm,
    RandomForest,
    LinReg,
    DtReg,
    Gpr,
    RbfSvr,
    LsBoost,
}

impl ModelKind {
    pub const CLASSIFIERS: [ModelKind; 5] = [
        ModelKind::Lda,
        ModelKind::DtClass,
        ModelKind::Knn,
        ModelKind::LinearSvm,
        ModelKind::RandomForest,
    ];
    pub const REGRESSORS: [ModelKind; 5] = [
        ModelKind::LinReg,
        ModelKind::DtReg,
        ModelKind::Gpr,
        ModelKind::RbfSvr,
        ModelKind::LsBoost,
    ];

    pub fn is_classifier(self) -> bool {
        Self::CLASSIFIERS.contains(&self)
    }

    /// Column label used in result tables.
    pub fn label(self) -> &'static str {
        match self {
            ModelKind::Lda => "LDA",
            ModelKind::DtClass | ModelKind::DtReg => "DT",
            ModelKind::Knn => "1NN",
            ModelKind::LinearSvm | ModelKind::RbfSvr => "SVM",
            ModelKind::RandomForest => "RF",
            ModelKind::LinReg => "Linear",
            ModelKind::Gpr => "GP",
            ModelKind::LsBoost => "LSBoost",
        }
    }

    /// Config-file name.
    pub fn key(self) -> &'static str {
        match self {
            ModelKind::Lda => "lda",
            ModelKind::DtClass => "dt",
            ModelKind::Knn => "knn",
            ModelKind::LinearSvm => "svm",
            ModelKind::RandomForest => "rf",
            ModelKind::LinReg => "linreg",
            ModelKind::DtReg => "dtreg",
            ModelKind::Gpr => "gpr",
            ModelKind::RbfSvr => "svr",
            ModelKind::LsBoost => "lsboost",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "lda" => ModelKind::Lda,
            "dt" | "dtclass" | "cart" => ModelKind::DtClass,
            "knn" | "1nn" => ModelKind::Knn,
            "svm" | "linearsvm" => ModelKind::LinearSvm,
            "rf" | "randomforest" => ModelKind::RandomForest,
            "linreg" | "lr" | "linear" => ModelKind::LinReg,
            "dtreg" => ModelKind::DtReg,
            "gpr" | "gp" => ModelKind::Gpr,
            "svr" | "rbfsvr" => ModelKind::RbfSvr,
            "lsboost" | "boost" => ModelKind::LsBoost,
            other => return Err(Error::Config(format!("unknown model `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    /// Minimum rows per tree leaf.
    pub leaf_size: usize,
    /// Neighbours for KNN.
    pub k: usize,
    /// SVM/SVR box constraint C.
    pub box_constraint: f64,
    /// SMO stopping tolerance on the maximal KKT violation.
    pub kkt_tolerance: f64,
    pub max_iterations: usize,
    /// Trees for RF and LSBoost.
    pub n_trees: usize,
    pub learn_rate: f64,
    /// Features tried per split; `None` means all (DT, LSBoost) or ⌊√d⌋ (RF).
    pub features_per_split: Option<usize>,
    /// LDA ridge is `lda_ridge_scale · trace(S)/d` when S is singular.
    pub lda_ridge_scale: f64,
    /// SVR ε = `svr_epsilon_scale · sd(y)`.
    pub svr_epsilon_scale: f64,
    /// RBF γ; `None` means 1/d.
    pub rbf_gamma: Option<f64>,
    pub gpr: GprHyper,
}

impl Hyperparameters {
    pub fn defaults_for(kind: ModelKind) -> Self {
        Self {
            leaf_size: 20,
            k: 1,
            box_constraint: 0.1,
            kkt_tolerance: 1e-3,
            max_iterations: 1_000_000,
            n_trees: if kind == ModelKind::LsBoost { 100 } else { 50 },
            learn_rate: 1.0,
            features_per_split: None,
            lda_ridge_scale: 1e-4,
            svr_epsilon_scale: 0.1,
            rbf_gamma: None,
            gpr: GprHyper::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub hyper: Hyperparameters,
    pub seed: u64,
}

impl ModelSpec {
    pub fn new(kind: ModelKind) -> Self {
        Self {
            kind,
            hyper: Hyperparameters::defaults_for(kind),
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// The settings that determine this model's behaviour, for run reports.
    pub fn decisions(&self) -> Vec<(String, String)> {
        let h = &self.hyper;
        let mut d: Vec<(String, String)> = Vec::new();
        let mut push = |k: &str, v: String| d.push((k.to_string(), v));
        match self.kind {
            ModelKind::Lda => {
                push("prior", "empirical class frequencies".into());
                push("ridge", format!("{} * trace(S)/d added when pooled covariance is singular", h.lda_ridge_scale));
                push("tie", "zero discriminant -> AD".into());
            }
            ModelKind::DtClass | ModelKind::DtReg => {
                push("algorithm", "CART, exhaustive threshold search".into());
                push("impurity", if self.kind == ModelKind::DtClass { "gini" } else { "variance" }.into());
                push("leaf_size", h.leaf_size.to_string());
                push("tie", "lowest feature index, then lowest threshold; leaf vote tie -> AD".into());
            }
            ModelKind::Knn => {
                push("k", h.k.to_string());
                push("metric", "euclidean".into());
                push("tie", "equal distances -> lowest training row".into());
            }
            ModelKind::LinearSvm => {
                push("kernel", "linear".into());
                push("box_constraint", h.box_constraint.to_string());
                push("solver", format!("SMO, second-order working set, tol {}", h.kkt_tolerance));
            }
            ModelKind::RandomForest => {
                push("n_trees", h.n_trees.to_string());
                push("leaf_size", h.leaf_size.to_string());
                push("sampling", "bootstrap rows".into());
                push(
                    "features_per_split",
                    h.features_per_split.map_or("floor(sqrt(d))".into(), |k| k.to_string()),
                );
                push("seed", self.seed.to_string());
            }
            ModelKind::LinReg => {
                push("solver", "pivoted QR least squares with intercept; minimum-norm when rank deficient".into());
            }
            ModelKind::Gpr => {
                push("kernel", "squared exponential + white noise".into());
                push("mean", "constant (training mean)".into());
                push("hyperparameters", format!("{:?}", h.gpr));
            }
            ModelKind::RbfSvr => {
                push("kernel", "rbf".into());
                push("box_constraint", h.box_constraint.to_string());
                push("epsilon", format!("{} * sd(y)", h.svr_epsilon_scale));
                push("gamma", h.rbf_gamma.map_or("1/d".into(), |g| g.to_string()));
                push("solver", format!("SMO, tol {}", h.kkt_tolerance));
            }
            ModelKind::LsBoost => {
                push("n_trees", h.n_trees.to_string());
                push("leaf_size", h.leaf_size.to_string());
                push("learn_rate", h.learn_rate.to_string());
                push("init", "mean(y)".into());
            }
        }
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target<'a> {
    Classes(&'a [Group]),
    Scores(&'a [f64]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Predictions {
    Classes(Vec<Group>),
    Scores(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Fitted {
    Lda(Lda),
    Tree(DecisionTree),
    Knn(Knn),
    LinearSvm(LinearSvc),
    Forest(RandomForest),
    LinReg(LinearRegression),
    Gpr(Gpr),
    RbfSvr(RbfSvr),
    LsBoost(LsBoost),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub spec: ModelSpec,
    pub columns: Vec<String>,
    pub fitted: Fitted,
}

/// 1.0 for AD (positive), 0.0 for non-AD.
pub(crate) fn class_to_f64(g: Group) -> f64 {
    if g == Group::Ad {
        1.0
    } else {
        0.0
    }
}

pub(crate) fn f64_to_class(v: f64) -> Group {
    if v >= 0.5 {
        Group::Ad
    } else {
        Group::NonAd
    }
}

pub(crate) fn design(x: &FeatureMatrix) -> Result<Matrix> {
    if let Some((i, j)) = x
        .rows()
        .iter()
        .enumerate()
        .find_map(|(i, r)| r.values.iter().position(|v| !v.is_finite()).map(|j| (i, j)))
    {
        return Err(Error::InvalidInput(format!(
            "non-finite feature value at row {i}, column `{}`",
            x.columns()[j]
        )));
    }
    Matrix::from_rows(&x.value_rows())
}

pub fn fit(spec: &ModelSpec, x: &FeatureMatrix, y: Target<'_>) -> Result<TrainedModel> {
    if x.n_rows() == 0 {
        return Err(Error::Empty("training data"));
    }
    let n = x.n_rows();
    let len = match y {
        Target::Classes(c) => c.len(),
        Target::Scores(s) => s.len(),
    };
    if len != n {
        return Err(Error::LengthMismatch { left: n, right: len });
    }
    if n < 2 {
        return Err(Error::InvalidInput("need at least 2 training rows".into()));
    }
    let m = design(x)?;
    let h = &spec.hyper;
    let fitted = match (spec.kind.is_classifier(), y) {
        (true, Target::Classes(labels)) => {
            if labels.iter().all(|&l| l == labels[0]) {
                return Err(Error::SingleClass);
            }
            let yf: Vec<f64> = labels.iter().map(|&g| class_to_f64(g)).collect();
            match spec.kind {
                ModelKind::Lda => Fitted::Lda(Lda::fit(&m, labels, h.lda_ridge_scale)?),
                ModelKind::DtClass => Fitted::Tree(DecisionTree::fit_all(
                    &m,
                    &yf,
                    Criterion::Gini,
                    h.leaf_size,
                    h.features_per_split,
                    spec.seed,
                )),
                ModelKind::Knn => Fitted::Knn(Knn::fit(&m, labels, h.k)?),
                ModelKind::LinearSvm => Fitted::LinearSvm(LinearSvc::fit(&m, labels, h)?),
                ModelKind::RandomForest => Fitted::Forest(RandomForest::fit(&m, &yf, h, spec.seed)),
                _ => unreachable!(),
            }
        }
        (false, Target::Scores(scores)) => {
            if let Some(i) = scores.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFiniteTarget(i));
            }
            match spec.kind {
                ModelKind::LinReg => Fitted::LinReg(LinearRegression::fit(&m, scores)),
                ModelKind::DtReg => Fitted::Tree(DecisionTree::fit_all(
                    &m,
                    scores,
                    Criterion::Variance,
                    h.leaf_size,
                    h.features_per_split,
                    spec.seed,
                )),
                ModelKind::Gpr => Fitted::Gpr(Gpr::fit(&m, scores, &h.gpr)?),
                ModelKind::RbfSvr => Fitted::RbfSvr(RbfSvr::fit(&m, scores, h)?),
                ModelKind::LsBoost => Fitted::LsBoost(LsBoost::fit(&m, scores, h)),
                _ => unreachable!(),
            }
        }
        (true, Target::Scores(_)) => {
            return Err(Error::InvalidInput(format!("{} needs class labels", spec.kind)))
        }
        (false, Target::Classes(_)) => {
            return Err(Error::InvalidInput(format!("{} needs numeric targets", spec.kind)))
        }
    };
    Ok(TrainedModel {
        spec: spec.clone(),
        columns: x.columns().to_vec(),
        fitted,
    })
}

impl TrainedModel {
    fn predict_row(&self, row: &[f64]) -> f64 {
        match &self.fitted {
            Fitted::Lda(m) => class_to_f64(m.predict(row)),
            Fitted::Tree(m) => m.predict(row),
            Fitted::Knn(m) => class_to_f64(m.predict(row)),
            Fitted::LinearSvm(m) => class_to_f64(m.predict(row)),
            Fitted::Forest(m) => class_to_f64(m.predict(row)),
            Fitted::LinReg(m) => m.predict(row),
            Fitted::Gpr(m) => m.predict(row),
            Fitted::RbfSvr(m) => m.predict(row),
            Fitted::LsBoost(m) => m.predict(row),
        }
    }

    pub fn predict(&self, x: &FeatureMatrix) -> Result<Predictions> {
        if x.columns() != self.columns.as_slice() {
            return Err(Error::ColumnMismatch(format!(
                "model trained on {} columns, got {}",
                self.columns.len(),
                x.n_cols()
            )));
        }
        let raw: Vec<f64> = x.rows().iter().map(|r| self.predict_row(&r.values)).collect();
        Ok(if self.spec.kind.is_classifier() {
            Predictions::Classes(raw.into_iter().map(f64_to_class).collect())
        } else {
            Predictions::Scores(raw)
        })
    }
}

pub fn predict(model: &TrainedModel, x: &FeatureMatrix) -> Result<Predictions> {
    model.predict(x)
}
