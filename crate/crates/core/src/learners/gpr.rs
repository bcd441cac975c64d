//! Gaussian process regression with a squared-exponential kernel, white
//! noise and a constant mean.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, squared_distance, Cholesky, Matrix};
use crate::math::{mean, median, sample_sd};

/// Hyperparameters are either fixed or chosen by log marginal likelihood
/// over a grid scaled to the data: length scales are multiples of the median
/// pairwise distance, signal and noise sds are multiples of sd(y).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GprHyper {
    Fixed {
        length_scale: f64,
        signal_sd: f64,
        noise_sd: f64,
    },
    Grid {
        length_multipliers: Vec<f64>,
        signal_multipliers: Vec<f64>,
        noise_multipliers: Vec<f64>,
    },
}

impl Default for GprHyper {
    fn default() -> Self {
        GprHyper::Grid {
            length_multipliers: vec![0.25, 0.5, 1.0, 2.0, 4.0],
            signal_multipliers: vec![0.5, 1.0, 2.0],
            noise_multipliers: vec![0.01, 0.1, 0.3, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gpr {
    pub train: Matrix,
    pub alpha: Vec<f64>,
    pub mean: f64,
    pub length_scale: f64,
    pub signal_sd: f64,
    pub noise_sd: f64,
    pub log_marginal_likelihood: f64,
}

struct Candidate {
    alpha: Vec<f64>,
    lml: f64,
}

fn evaluate(dist2: &Matrix, yc: &[f64], ell: f64, sf: f64, sn: f64) -> Option<Candidate> {
    let n = yc.len();
    let mut k = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            k[(i, j)] = sf * sf * (-dist2[(i, j)] / (2.0 * ell * ell)).exp();
        }
        k[(i, i)] += sn * sn;
    }
    let chol = Cholesky::new(&k).ok()?;
    let alpha = chol.solve(yc);
    let lml = -0.5 * dot(yc, &alpha) - 0.5 * chol.log_det() - 0.5 * n as f64 * (2.0 * core::f64::consts::PI).ln();
    lml.is_finite().then_some(Candidate { alpha, lml })
}

impl Gpr {
    pub fn fit(x: &Matrix, y: &[f64], hyper: &GprHyper) -> Result<Self> {
        let n = x.rows();
        let m = mean(y);
        let yc: Vec<f64> = y.iter().map(|v| v - m).collect();
        let mut dist2 = Matrix::zeros(n, n);
        let mut pair = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                let d = squared_distance(x.row(i), x.row(j));
                dist2[(i, j)] = d;
                dist2[(j, i)] = d;
                pair.push(d.sqrt());
            }
        }
        let grid: Vec<(f64, f64, f64)> = match hyper {
            GprHyper::Fixed {
                length_scale,
                signal_sd,
                noise_sd,
            } => vec![(*length_scale, *signal_sd, *noise_sd)],
            GprHyper::Grid {
                length_multipliers,
                signal_multipliers,
                noise_multipliers,
            } => {
                let md = median(&pair);
                let base_l = if md > 0.0 { md } else { 1.0 };
                let sd = sample_sd(y);
                let base_s = if sd > 0.0 { sd } else { 1.0 };
                let mut g = Vec::new();
                for &a in length_multipliers {
                    for &b in signal_multipliers {
                        for &c in noise_multipliers {
                            g.push((a * base_l, b * base_s, c * base_s));
                        }
                    }
                }
                g
            }
        };
        let mut best: Option<(Candidate, (f64, f64, f64))> = None;
        for (ell, sf, sn) in grid {
            if let Some(c) = evaluate(&dist2, &yc, ell, sf, sn) {
                if best.as_ref().is_none_or(|(b, _)| c.lml > b.lml) {
                    best = Some((c, (ell, sf, sn)));
                }
            }
        }
        let (c, (ell, sf, sn)) = best.ok_or(Error::NotPositiveDefinite)?;
        Ok(Self {
            train: x.clone(),
            alpha: c.alpha,
            mean: m,
            length_scale: ell,
            signal_sd: sf,
            noise_sd: sn,
            log_marginal_likelihood: c.lml,
        })
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        let (ell, sf) = (self.length_scale, self.signal_sd);
        self.mean
            + (0..self.train.rows())
                .map(|i| {
                    self.alpha[i] * sf * sf * (-squared_distance(self.train.row(i), row) / (2.0 * ell * ell)).exp()
                })
                .sum::<f64>()
    }
}
