//! Two-class linear discriminant with pooled covariance and empirical priors.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::dataset::Group;
use crate::error::{Error, Result};
use crate::linalg::{dot, Cholesky, Matrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lda {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Ridge added to the pooled covariance; 0 when it was invertible.
    pub ridge: f64,
}

/// Solves (λI + c·UᵀU) x = v for U (n × d) with d ≥ n via the Woodbury
/// identity, so only an n × n system is factored.
fn woodbury_solve(u: &Matrix, c: f64, lambda: f64, v: &[f64]) -> Result<Vec<f64>> {
    let n = u.rows();
    let mut inner = u.gram();
    for i in 0..n {
        inner[(i, i)] += lambda / c;
    }
    let chol = Cholesky::new(&inner)?;
    let uv = u.matvec(v);
    let z = chol.solve(&uv);
    let utz = u.tr_matvec(&z);
    Ok(v.iter().zip(&utz).map(|(a, b)| (a - b) / lambda).collect())
}

impl Lda {
    pub fn fit(x: &Matrix, labels: &[Group], ridge_scale: f64) -> Result<Self> {
        let (n, d) = (x.rows(), x.cols());
        let n_ad = labels.iter().filter(|&&g| g == Group::Ad).count();
        let n_non = n - n_ad;
        if n_ad == 0 || n_non == 0 {
            return Err(Error::SingleClass);
        }
        let mut mu = [vec![0.0; d], vec![0.0; d]];
        for (i, &g) in labels.iter().enumerate() {
            let c = usize::from(g == Group::Ad);
            for (m, v) in mu[c].iter_mut().zip(x.row(i)) {
                *m += v;
            }
        }
        for (m, k) in mu.iter_mut().zip([n_non, n_ad]) {
            m.iter_mut().for_each(|v| *v /= k as f64);
        }
        // centred rows
        let mut u = Matrix::zeros(n, d);
        for (i, &g) in labels.iter().enumerate() {
            let c = usize::from(g == Group::Ad);
            for j in 0..d {
                u[(i, j)] = x[(i, j)] - mu[c][j];
            }
        }
        let c = 1.0 / (n.saturating_sub(2).max(1)) as f64;
        let delta: Vec<f64> = mu[1].iter().zip(&mu[0]).map(|(a, b)| a - b).collect();
        let trace = c * u.as_slice().iter().map(|v| v * v).sum::<f64>();
        let lambda = if trace > 0.0 { ridge_scale * trace / d as f64 } else { ridge_scale };

        let (weights, ridge) = if d + 2 <= n {
            let mut s = u.transpose().matmul(&u);
            s.as_mut_slice().iter_mut().for_each(|v| *v *= c);
            match Cholesky::new(&s) {
                Ok(ch) => (ch.solve(&delta), 0.0),
                Err(_) => {
                    for j in 0..d {
                        s[(j, j)] += lambda;
                    }
                    (Cholesky::new(&s)?.solve(&delta), lambda)
                }
            }
        } else {
            (woodbury_solve(&u, c, lambda, &delta)?, lambda)
        };
        let mid: Vec<f64> = mu[1].iter().zip(&mu[0]).map(|(a, b)| (a + b) / 2.0).collect();
        let bias = -dot(&weights, &mid) + (n_ad as f64 / n_non as f64).ln();
        Ok(Self { weights, bias, ridge })
    }

    pub fn discriminant(&self, row: &[f64]) -> f64 {
        dot(&self.weights, row) + self.bias
    }

    pub fn predict(&self, row: &[f64]) -> Group {
        if self.discriminant(row) >= 0.0 {
            Group::Ad
        } else {
            Group::NonAd
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn two_dimensional_weights_match_closed_form() {
        let mut rng = rand::rngs::SmallRng::seed_from_u64(3);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..40 {
            let ad = i % 2 == 0;
            let a: f64 = rng.random_range(-1.0..1.0);
            let b: f64 = rng.random_range(-1.0..1.0);
            rows.push(vec![a + if ad { 1.5 } else { 0.0 }, 0.5 * a + b]);
            labels.push(if ad { Group::Ad } else { Group::NonAd });
        }
        let x = Matrix::from_rows(&rows).unwrap();
        let lda = Lda::fit(&x, &labels, 1e-4).unwrap();
        assert_eq!(lda.ridge, 0.0);

        // explicit 2×2 inverse of the pooled covariance
        let mean = |g: Group, j: usize| {
            let v: Vec<f64> = rows.iter().zip(&labels).filter(|(_, l)| **l == g).map(|(r, _)| r[j]).collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        let mu = [[mean(Group::NonAd, 0), mean(Group::NonAd, 1)], [mean(Group::Ad, 0), mean(Group::Ad, 1)]];
        let mut s = [[0.0; 2]; 2];
        for (r, l) in rows.iter().zip(&labels) {
            let m = mu[usize::from(*l == Group::Ad)];
            for a in 0..2 {
                for b in 0..2 {
                    s[a][b] += (r[a] - m[a]) * (r[b] - m[b]) / 38.0;
                }
            }
        }
        let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
        let inv = [[s[1][1] / det, -s[0][1] / det], [-s[1][0] / det, s[0][0] / det]];
        let dm = [mu[1][0] - mu[0][0], mu[1][1] - mu[0][1]];
        let w = [inv[0][0] * dm[0] + inv[0][1] * dm[1], inv[1][0] * dm[0] + inv[1][1] * dm[1]];
        assert!((lda.weights[0] - w[0]).abs() < 1e-9);
        assert!((lda.weights[1] - w[1]).abs() < 1e-9);
    }

    #[test]
    fn woodbury_path_matches_direct_ridge_solve() {
        let mut rng = rand::rngs::SmallRng::seed_from_u64(9);
        let (n, d) = (6, 10);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let labels: Vec<Group> = (0..n).map(|i| if i < 3 { Group::Ad } else { Group::NonAd }).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let lda = Lda::fit(&x, &labels, 1e-2).unwrap();
        assert!(lda.ridge > 0.0);

        let mut mu = [vec![0.0; d], vec![0.0; d]];
        for (r, l) in rows.iter().zip(&labels) {
            let c = usize::from(*l == Group::Ad);
            for j in 0..d {
                mu[c][j] += r[j] / 3.0;
            }
        }
        let mut s = Matrix::zeros(d, d);
        for (r, l) in rows.iter().zip(&labels) {
            let c = usize::from(*l == Group::Ad);
            for a in 0..d {
                for b in 0..d {
                    s[(a, b)] += (r[a] - mu[c][a]) * (r[b] - mu[c][b]) / 4.0;
                }
            }
        }
        for j in 0..d {
            s[(j, j)] += lda.ridge;
        }
        let dm: Vec<f64> = (0..d).map(|j| mu[1][j] - mu[0][j]).collect();
        let w = Cholesky::new(&s).unwrap().solve(&dm);
        for (a, b) in lda.weights.iter().zip(&w) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn separates_shifted_clusters() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 % 5.0 + if i < 10 { 10.0 } else { 0.0 }]).collect();
        let labels: Vec<Group> = (0..20).map(|i| if i < 10 { Group::Ad } else { Group::NonAd }).collect();
        let lda = Lda::fit(&Matrix::from_rows(&rows).unwrap(), &labels, 1e-4).unwrap();
        assert_eq!(lda.predict(&[12.0]), Group::Ad);
        assert_eq!(lda.predict(&[1.0]), Group::NonAd);
    }
}
