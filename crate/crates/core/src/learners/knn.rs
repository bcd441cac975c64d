//! Nearest-neighbour classifier with Euclidean distance.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::dataset::Group;
use crate::error::{Error, Result};
use crate::linalg::{squared_distance, Matrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    pub k: usize,
    pub points: Matrix,
    pub labels: Vec<Group>,
}

impl Knn {
    pub fn fit(x: &Matrix, labels: &[Group], k: usize) -> Result<Self> {
        if k == 0 || k > x.rows() {
            return Err(Error::InvalidInput(alloc::format!(
                "k = {k} with {} training rows",
                x.rows()
            )));
        }
        Ok(Self {
            k,
            points: x.clone(),
            labels: labels.to_vec(),
        })
    }

    /// Indices of the k nearest rows; equal distances keep the lower index.
    pub fn neighbours(&self, row: &[f64]) -> Vec<usize> {
        let mut d: Vec<(f64, usize)> = (0..self.points.rows())
            .map(|i| (squared_distance(self.points.row(i), row), i))
            .collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        d.into_iter().take(self.k).map(|(_, i)| i).collect()
    }

    pub fn predict(&self, row: &[f64]) -> Group {
        let nb = self.neighbours(row);
        let ad = nb.iter().filter(|&&i| self.labels[i] == Group::Ad).count();
        if 2 * ad >= nb.len() {
            Group::Ad
        } else {
            Group::NonAd
        }
    }
}
