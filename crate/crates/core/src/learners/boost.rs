//! Least-squares gradient boosting of regression trees.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::tree::{Criterion, DecisionTree};
use super::Hyperparameters;
use crate::linalg::Matrix;
use crate::math::mean;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsBoost {
    pub init: f64,
    pub learn_rate: f64,
    pub trees: Vec<DecisionTree>,
}

impl LsBoost {
    pub fn fit(x: &Matrix, y: &[f64], h: &Hyperparameters) -> Self {
        let init = mean(y);
        let mut fitted = alloc::vec![init; y.len()];
        let mut trees = Vec::with_capacity(h.n_trees);
        for _ in 0..h.n_trees {
            let residual: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
            let tree = DecisionTree::fit_all(x, &residual, Criterion::Variance, h.leaf_size, None, 0);
            let stump = tree.nodes.len() == 1 && h.learn_rate == 1.0;
            for (i, f) in fitted.iter_mut().enumerate() {
                *f += h.learn_rate * tree.predict(x.row(i));
            }
            trees.push(tree);
            if stump {
                // residuals now have zero mean, so later single leaves add nothing
                break;
            }
        }
        Self {
            init,
            learn_rate: h.learn_rate,
            trees,
        }
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        self.init + self.learn_rate * self.trees.iter().map(|t| t.predict(row)).sum::<f64>()
    }
}
