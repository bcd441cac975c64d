//! Bagged CART classifiers with random feature subsets at each split.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tree::{Criterion, DecisionTree};
use super::Hyperparameters;
use crate::dataset::Group;
use crate::linalg::Matrix;
use crate::rng::stream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
    pub features_per_split: usize,
}

impl RandomForest {
    /// `y` holds 1.0 for AD and 0.0 otherwise.
    pub fn fit(x: &Matrix, y: &[f64], h: &Hyperparameters, seed: u64) -> Self {
        let (n, d) = (x.rows(), x.cols());
        let k = h
            .features_per_split
            .unwrap_or_else(|| ((d as f64).sqrt().floor() as usize).max(1))
            .clamp(1, d.max(1));
        let mut rng = stream(seed, &["forest"]);
        let trees = (0..h.n_trees)
            .map(|_| {
                let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                DecisionTree::fit(x, y, rows, Criterion::Gini, h.leaf_size, Some(k), Some(&mut rng))
            })
            .collect();
        Self {
            trees,
            features_per_split: k,
        }
    }

    /// Majority vote over trees; a tied vote goes to AD.
    pub fn predict(&self, row: &[f64]) -> Group {
        let ad = self.trees.iter().filter(|t| t.predict(row) >= 0.5).count();
        if 2 * ad >= self.trees.len() {
            Group::Ad
        } else {
            Group::NonAd
        }
    }
}
