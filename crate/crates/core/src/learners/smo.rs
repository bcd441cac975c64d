//! Sequential minimal optimisation for the box- and equality-constrained
//! quadratic programs behind the SVM and SVR:
//!
//! minimise ½ αᵀQα + pᵀα  subject to  0 ≤ α ≤ C,  yᵀα = 0,  y ∈ {±1}.
//!
//! Working pairs use second-order selection; the loop stops when the maximal
//! KKT violation drops below the tolerance.

use alloc::vec;
use alloc::vec::Vec;

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SmoSolution {
    pub alpha: Vec<f64>,
    pub rho: f64,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub struct SmoProblem<'a, Q: Fn(usize, usize) -> f64> {
    /// Q(i, j), including the y_i y_j signs.
    pub q: Q,
    pub p: &'a [f64],
    pub y: &'a [f64],
    pub c: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl<Q: Fn(usize, usize) -> f64> SmoProblem<'_, Q> {
    pub fn solve(&self) -> SmoSolution {
        let l = self.p.len();
        let y = self.y;
        let c = self.c;
        let qd: Vec<f64> = (0..l).map(|i| (self.q)(i, i)).collect();
        let mut alpha = vec![0.0; l];
        let mut g = self.p.to_vec();
        let is_upper = |a: f64| a >= c;
        let is_lower = |a: f64| a <= 0.0;
        let mut qi = vec![0.0; l];
        let mut qj = vec![0.0; l];
        let mut iterations = 0;
        let mut converged = false;

        while iterations < self.max_iterations {
            // i: maximal violator among the "up" set
            let mut gmax = f64::NEG_INFINITY;
            let mut i_sel = None;
            for t in 0..l {
                let v = if y[t] > 0.0 {
                    (!is_upper(alpha[t])).then_some(-g[t])
                } else {
                    (!is_lower(alpha[t])).then_some(g[t])
                };
                if let Some(v) = v {
                    if v >= gmax {
                        gmax = v;
                        i_sel = Some(t);
                    }
                }
            }
            let Some(i) = i_sel else {
                converged = true;
                break;
            };
            for (t, slot) in qi.iter_mut().enumerate() {
                *slot = (self.q)(i, t);
            }
            // j: best second-order gain among the "low" set
            let mut gmax2 = f64::NEG_INFINITY;
            let mut j_sel = None;
            let mut obj_min = f64::INFINITY;
            for t in 0..l {
                let (eligible, grad_diff, quad) = if y[t] > 0.0 {
                    if is_lower(alpha[t]) {
                        continue;
                    }
                    gmax2 = gmax2.max(g[t]);
                    (true, gmax + g[t], qd[i] + qd[t] - 2.0 * y[i] * qi[t])
                } else {
                    if is_upper(alpha[t]) {
                        continue;
                    }
                    gmax2 = gmax2.max(-g[t]);
                    (true, gmax - g[t], qd[i] + qd[t] + 2.0 * y[i] * qi[t])
                };
                if eligible && grad_diff > 0.0 {
                    let obj = -(grad_diff * grad_diff) / if quad > 0.0 { quad } else { TAU };
                    if obj <= obj_min {
                        obj_min = obj;
                        j_sel = Some(t);
                    }
                }
            }
            let j = match j_sel {
                Some(j) if gmax + gmax2 >= self.tolerance => j,
                _ => {
                    converged = true;
                    break;
                }
            };
            iterations += 1;
            for (t, slot) in qj.iter_mut().enumerate() {
                *slot = (self.q)(j, t);
            }
            let (old_i, old_j) = (alpha[i], alpha[j]);
            if y[i] != y[j] {
                let mut quad = qd[i] + qd[j] + 2.0 * qi[j];
                if quad <= 0.0 {
                    quad = TAU;
                }
                let delta = (-g[i] - g[j]) / quad;
                let diff = alpha[i] - alpha[j];
                alpha[i] += delta;
                alpha[j] += delta;
                if diff > 0.0 {
                    if alpha[j] < 0.0 {
                        alpha[j] = 0.0;
                        alpha[i] = diff;
                    }
                } else if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = -diff;
                }
                if diff > 0.0 {
                    if alpha[i] > c {
                        alpha[i] = c;
                        alpha[j] = c - diff;
                    }
                } else if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = c + diff;
                }
            } else {
                let mut quad = qd[i] + qd[j] - 2.0 * qi[j];
                if quad <= 0.0 {
                    quad = TAU;
                }
                let delta = (g[i] - g[j]) / quad;
                let sum = alpha[i] + alpha[j];
                alpha[i] -= delta;
                alpha[j] += delta;
                if sum > c {
                    if alpha[i] > c {
                        alpha[i] = c;
                        alpha[j] = sum - c;
                    }
                } else if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = sum;
                }
                if sum > c {
                    if alpha[j] > c {
                        alpha[j] = c;
                        alpha[i] = sum - c;
                    }
                } else if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = sum;
                }
            }
            let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
            for t in 0..l {
                g[t] += qi[t] * di + qj[t] * dj;
            }
        }

        // ρ: mean of y·G over free variables, else the midpoint of the bounds
        let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut sum_free, mut n_free) = (0.0, 0usize);
        for t in 0..l {
            let yg = y[t] * g[t];
            if is_upper(alpha[t]) {
                if y[t] < 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else if is_lower(alpha[t]) {
                if y[t] > 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else {
                n_free += 1;
                sum_free += yg;
            }
        }
        let rho = if n_free > 0 { sum_free / n_free as f64 } else { (ub + lb) / 2.0 };
        let objective = 0.5 * (0..l).map(|t| alpha[t] * (g[t] + self.p[t])).sum::<f64>();
        SmoSolution {
            alpha,
            rho,
            objective,
            iterations,
            converged,
        }
    }
}
