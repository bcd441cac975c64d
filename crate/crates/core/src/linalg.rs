//! Dense row-major matrices with the factorizations the learners need:
//! Cholesky, and Householder QR with column pivoting for least squares.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::LengthMismatch {
                    left: cols,
                    right: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(rows * cols, data.len());
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows);
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let a = self.row(i);
            let o = out.row_mut(i);
            for (k, &aik) in a.iter().enumerate() {
                if aik == 0.0 {
                    continue;
                }
                for (oj, bkj) in o.iter_mut().zip(other.row(k)) {
                    *oj += aik * bkj;
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// Xᵀv without forming the transpose.
    pub fn tr_matvec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            for (o, x) in out.iter_mut().zip(self.row(i)) {
                *o += vi * x;
            }
        }
        out
    }

    /// Gram matrix X Xᵀ (rows × rows), accumulated over column blocks so the
    /// working set stays in cache for wide matrices.
    pub fn gram(&self) -> Matrix {
        const BLOCK: usize = 512;
        let n = self.rows;
        let mut g = Matrix::zeros(n, n);
        let mut start = 0;
        while start < self.cols {
            let end = (start + BLOCK).min(self.cols);
            for i in 0..n {
                let ri = &self.row(i)[start..end];
                for j in 0..=i {
                    g[(i, j)] += dot(ri, &self.row(j)[start..end]);
                }
            }
            start = end;
        }
        for i in 0..n {
            for j in 0..i {
                g[(j, i)] = g[(i, j)];
            }
        }
        g
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }
}

impl core::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Four independent partial sums let the compiler vectorize.
fn sum4(a: &[f64], b: &[f64], f: impl Fn(f64, f64) -> f64) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += f(x[k], y[k]);
        }
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| f(*x, *y)).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    sum4(a, b, |x, y| x * y)
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    sum4(a, b, |x, y| (x - y) * (x - y))
}

/// Lower-triangular Cholesky factor L with A = L Lᵀ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cholesky {
    l: Matrix,
}

impl Cholesky {
    pub fn new(a: &Matrix) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(Error::LengthMismatch {
                left: n,
                right: a.cols(),
            });
        }
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite);
            }
            let ljj = d.sqrt();
            l[(j, j)] = ljj;
            for i in j + 1..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / ljj;
            }
        }
        Ok(Self { l })
    }

    pub fn factor(&self) -> &Matrix {
        &self.l
    }

    /// Solves L y = b.
    pub fn forward(&self, b: &[f64]) -> Vec<f64> {
        let n = self.l.rows();
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[(i, k)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        y
    }

    /// Solves Lᵀ x = y.
    pub fn backward(&self, y: &[f64]) -> Vec<f64> {
        let n = self.l.rows();
        let mut x = y.to_vec();
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= self.l[(k, i)] * x[k];
            }
            x[i] = s / self.l[(i, i)];
        }
        x
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.backward(&self.forward(b))
    }

    /// log det A = 2 Σ log L_ii.
    pub fn log_det(&self) -> f64 {
        (0..self.l.rows()).map(|i| self.l[(i, i)].ln()).sum::<f64>() * 2.0
    }
}

/// Householder QR with column pivoting: A P = Q R.
struct PivotedQr {
    /// Householder vectors below the diagonal, R on and above it (rows × cols).
    qr: Matrix,
    tau: Vec<f64>,
    perm: Vec<usize>,
    rank: usize,
}

impl PivotedQr {
    fn new(a: &Matrix) -> Self {
        let (m, n) = (a.rows(), a.cols());
        let mut qr = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let steps = m.min(n);
        let mut tau = vec![0.0; steps];
        let mut norms: Vec<f64> = (0..n)
            .map(|j| (0..m).map(|i| qr[(i, j)] * qr[(i, j)]).sum())
            .collect();
        for k in 0..steps {
            // pivot: remaining column with the largest norm
            let mut best = k;
            for j in k + 1..n {
                if norms[j] > norms[best] {
                    best = j;
                }
            }
            if best != k {
                for i in 0..m {
                    let t = qr[(i, k)];
                    qr[(i, k)] = qr[(i, best)];
                    qr[(i, best)] = t;
                }
                norms.swap(k, best);
                perm.swap(k, best);
            }
            let alpha: f64 = (k..m).map(|i| qr[(i, k)] * qr[(i, k)]).sum::<f64>().sqrt();
            if alpha == 0.0 {
                tau[k] = 0.0;
                continue;
            }
            let beta = if qr[(k, k)] > 0.0 { -alpha } else { alpha };
            let v0 = qr[(k, k)] - beta;
            for i in k + 1..m {
                qr[(i, k)] /= v0;
            }
            tau[k] = (beta - qr[(k, k)]) / beta;
            qr[(k, k)] = beta;
            for j in k + 1..n {
                let mut s = qr[(k, j)];
                for i in k + 1..m {
                    s += qr[(i, k)] * qr[(i, j)];
                }
                s *= tau[k];
                qr[(k, j)] -= s;
                for i in k + 1..m {
                    let v = qr[(i, k)];
                    qr[(i, j)] -= s * v;
                }
            }
            for (j, norm) in norms.iter_mut().enumerate().skip(k + 1) {
                *norm = (k + 1..m).map(|i| qr[(i, j)] * qr[(i, j)]).sum();
            }
        }
        let max_diag = if steps > 0 { qr[(0, 0)].abs() } else { 0.0 };
        let tol = max_diag * f64::EPSILON * (m.max(n) as f64);
        let rank = (0..steps).take_while(|&k| qr[(k, k)].abs() > tol).count();
        Self {
            qr,
            tau,
            perm,
            rank,
        }
    }

    /// Applies Qᵀ to b in place.
    fn apply_qt(&self, b: &mut [f64]) {
        let m = self.qr.rows();
        for k in 0..self.tau.len() {
            if self.tau[k] == 0.0 {
                continue;
            }
            let mut s = b[k];
            for i in k + 1..m {
                s += self.qr[(i, k)] * b[i];
            }
            s *= self.tau[k];
            b[k] -= s;
            for i in k + 1..m {
                b[i] -= s * self.qr[(i, k)];
            }
        }
    }

    /// Applies Q to b in place.
    fn apply_q(&self, b: &mut [f64]) {
        let m = self.qr.rows();
        for k in (0..self.tau.len()).rev() {
            if self.tau[k] == 0.0 {
                continue;
            }
            let mut s = b[k];
            for i in k + 1..m {
                s += self.qr[(i, k)] * b[i];
            }
            s *= self.tau[k];
            b[k] -= s;
            for i in k + 1..m {
                b[i] -= s * self.qr[(i, k)];
            }
        }
    }
}

/// Least-squares solution of A x ≈ b. Rank-deficient systems return the
/// minimum-norm solution via a complete orthogonal decomposition.
pub fn lstsq_min_norm(a: &Matrix, b: &[f64]) -> (Vec<f64>, usize) {
    let n = a.cols();
    let qr = PivotedQr::new(a);
    let r = qr.rank;
    let mut c = b.to_vec();
    qr.apply_qt(&mut c);
    let mut z = vec![0.0; n];
    if r == 0 {
        return (z, 0);
    }
    if r == n {
        // R11 z = c
        for i in (0..r).rev() {
            let mut s = c[i];
            for j in i + 1..r {
                s -= qr.qr[(i, j)] * z[j];
            }
            z[i] = s / qr.qr[(i, i)];
        }
    } else {
        // [R11 R12] is r × n with full row rank; the minimum-norm solution of
        // T z = c comes from the QR of Tᵀ = Q2 R2: z = Q2 R2⁻ᵀ c.
        let mut tt = Matrix::zeros(n, r);
        for i in 0..r {
            for j in i..n {
                tt[(j, i)] = qr.qr[(i, j)];
            }
        }
        let qr2 = PivotedQr::new_unpivoted(&tt);
        // R2ᵀ w = c (forward substitution on the r × r upper factor)
        let mut w = vec![0.0; n];
        for i in 0..r {
            let mut s = c[i];
            for k in 0..i {
                s -= qr2.qr[(k, i)] * w[k];
            }
            w[i] = s / qr2.qr[(i, i)];
        }
        qr2.apply_q(&mut w);
        z = w;
    }
    let mut x = vec![0.0; n];
    for (k, &p) in qr.perm.iter().enumerate() {
        x[p] = z[k];
    }
    (x, r)
}

impl PivotedQr {
    fn new_unpivoted(a: &Matrix) -> Self {
        let (m, n) = (a.rows(), a.cols());
        let mut qr = a.clone();
        let steps = m.min(n);
        let mut tau = vec![0.0; steps];
        for k in 0..steps {
            let alpha: f64 = (k..m).map(|i| qr[(i, k)] * qr[(i, k)]).sum::<f64>().sqrt();
            if alpha == 0.0 {
                continue;
            }
            let beta = if qr[(k, k)] > 0.0 { -alpha } else { alpha };
            let v0 = qr[(k, k)] - beta;
            for i in k + 1..m {
                qr[(i, k)] /= v0;
            }
            tau[k] = (beta - qr[(k, k)]) / beta;
            qr[(k, k)] = beta;
            for j in k + 1..n {
                let mut s = qr[(k, j)];
                for i in k + 1..m {
                    s += qr[(i, k)] * qr[(i, j)];
                }
                s *= tau[k];
                qr[(k, j)] -= s;
                for i in k + 1..m {
                    let v = qr[(i, k)];
                    qr[(i, j)] -= s * v;
                }
            }
        }
        Self {
            qr,
            tau,
            perm: (0..n).collect(),
            rank: steps,
        }
    }
}
