//! Ordinary least squares with an intercept.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::linalg::{dot, lstsq_min_norm, Matrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearRegression {
    pub intercept: f64,
    pub weights: Vec<f64>,
    pub rank: usize,
}

impl LinearRegression {
    pub fn fit(x: &Matrix, y: &[f64]) -> Self {
        let (n, d) = (x.rows(), x.cols());
        let mut a = Matrix::zeros(n, d + 1);
        for i in 0..n {
            a[(i, 0)] = 1.0;
            a.row_mut(i)[1..].copy_from_slice(x.row(i));
        }
        let (beta, rank) = lstsq_min_norm(&a, y);
        Self {
            intercept: beta[0],
            weights: beta[1..].to_vec(),
            rank,
        }
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        self.intercept + dot(&self.weights, row)
    }
}
