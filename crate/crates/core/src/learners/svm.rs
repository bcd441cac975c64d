//! Linear soft-margin SVM classifier and RBF ε-SVR, both solved by SMO.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::smo::SmoProblem;
use super::Hyperparameters;
use crate::dataset::Group;
use crate::error::{Error, Result};
use crate::linalg::{dot, squared_distance, Matrix};
use crate::math::sample_sd;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvc {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl LinearSvc {
    pub fn fit(x: &Matrix, labels: &[Group], h: &Hyperparameters) -> Result<Self> {
        let n = x.rows();
        let y: Vec<f64> = labels.iter().map(|&g| if g == Group::Ad { 1.0 } else { -1.0 }).collect();
        if y.iter().all(|&v| v == y[0]) {
            return Err(Error::SingleClass);
        }
        let k = x.matmul(&x.transpose());
        let p = alloc::vec![-1.0; n];
        let sol = SmoProblem {
            q: |i: usize, j: usize| y[i] * y[j] * k[(i, j)],
            p: &p,
            y: &y,
            c: h.box_constraint,
            tolerance: h.kkt_tolerance,
            max_iterations: h.max_iterations,
        }
        .solve();
        let mut weights = alloc::vec![0.0; x.cols()];
        for i in 0..n {
            let a = sol.alpha[i] * y[i];
            if a != 0.0 {
                for (w, v) in weights.iter_mut().zip(x.row(i)) {
                    *w += a * v;
                }
            }
        }
        Ok(Self {
            weights,
            bias: -sol.rho,
            iterations: sol.iterations,
            converged: sol.converged,
        })
    }

    pub fn decision(&self, row: &[f64]) -> f64 {
        dot(&self.weights, row) + self.bias
    }

    pub fn predict(&self, row: &[f64]) -> Group {
        if self.decision(row) >= 0.0 {
            Group::Ad
        } else {
            Group::NonAd
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbfSvr {
    pub support: Matrix,
    /// α_i − α*_i for each support row.
    pub coef: Vec<f64>,
    pub rho: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl RbfSvr {
    pub fn fit(x: &Matrix, y: &[f64], h: &Hyperparameters) -> Result<Self> {
        let (n, d) = (x.rows(), x.cols());
        let gamma = h.rbf_gamma.unwrap_or(1.0 / d.max(1) as f64);
        let epsilon = h.svr_epsilon_scale * sample_sd(y);
        let mut k = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = (-gamma * squared_distance(x.row(i), x.row(j))).exp();
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
        }
        // variables 0..n are α (sign +1), n..2n are α* (sign −1)
        let sign: Vec<f64> = (0..2 * n).map(|t| if t < n { 1.0 } else { -1.0 }).collect();
        let p: Vec<f64> = (0..2 * n)
            .map(|t| if t < n { epsilon - y[t] } else { epsilon + y[t - n] })
            .collect();
        let sol = SmoProblem {
            q: |i: usize, j: usize| sign[i] * sign[j] * k[(i % n, j % n)],
            p: &p,
            y: &sign,
            c: h.box_constraint,
            tolerance: h.kkt_tolerance,
            max_iterations: h.max_iterations,
        }
        .solve();
        let mut rows = Vec::new();
        let mut coef = Vec::new();
        for i in 0..n {
            let c = sol.alpha[i] - sol.alpha[i + n];
            if c != 0.0 {
                rows.push(x.row(i));
                coef.push(c);
            }
        }
        let support = if rows.is_empty() { Matrix::zeros(0, d) } else { Matrix::from_rows(&rows)? };
        Ok(Self {
            support,
            coef,
            rho: sol.rho,
            gamma,
            epsilon,
            iterations: sol.iterations,
            converged: sol.converged,
        })
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        (0..self.support.rows())
            .map(|i| self.coef[i] * (-self.gamma * squared_distance(self.support.row(i), row)).exp())
            .sum::<f64>()
            - self.rho
    }
}
