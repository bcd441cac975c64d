//! CART with exhaustive midpoint thresholds, shared by the decision tree,
//! random forest and boosting learners.

use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;
use crate::rng::StreamRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Criterion {
    /// Targets are 1.0 (AD) / 0.0; leaves hold the majority class.
    Gini,
    /// Leaves hold the mean target.
    Variance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitChoice {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
}

/// Gains below this are treated as no improvement.
const MIN_GAIN: f64 = 1e-12;

fn leaf_value(ys: impl Iterator<Item = f64>, criterion: Criterion) -> f64 {
    let (mut n, mut s) = (0usize, 0.0);
    for y in ys {
        n += 1;
        s += y;
    }
    match criterion {
        Criterion::Gini => {
            // s counts AD rows; ties go to AD
            if 2.0 * s >= n as f64 {
                1.0
            } else {
                0.0
            }
        }
        Criterion::Variance => s / n as f64,
    }
}

/// Weighted impurity (n · impurity) from count, sum and sum of squares.
fn node_cost(n: f64, s: f64, ss: f64, criterion: Criterion) -> f64 {
    if n == 0.0 {
        return 0.0;
    }
    match criterion {
        // n · (1 − p² − (1−p)²) with p = s/n
        Criterion::Gini => {
            let p = s / n;
            n * (1.0 - p * p - (1.0 - p) * (1.0 - p))
        }
        Criterion::Variance => (ss - s * s / n).max(0.0),
    }
}

/// Best split of `rows` on `feature`, scanning midpoints in ascending order.
/// Only strictly better gains replace the incumbent, so the lowest threshold
/// wins ties.
pub fn best_split_on_feature(
    x: &Matrix,
    y: &[f64],
    rows: &[usize],
    feature: usize,
    min_leaf: usize,
    criterion: Criterion,
    scratch: &mut Vec<(f64, f64)>,
) -> Option<SplitChoice> {
    let n = rows.len();
    if n < 2 * min_leaf.max(1) {
        return None;
    }
    scratch.clear();
    scratch.extend(rows.iter().map(|&r| (x[(r, feature)], y[r])));
    scratch.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (tot_s, tot_ss) = scratch.iter().fold((0.0, 0.0), |(s, ss), &(_, v)| (s + v, ss + v * v));
    let parent = node_cost(n as f64, tot_s, tot_ss, criterion);
    let mut best: Option<SplitChoice> = None;
    let (mut ls, mut lss) = (0.0, 0.0);
    for i in 0..n - 1 {
        let (xv, yv) = scratch[i];
        ls += yv;
        lss += yv * yv;
        let nl = i + 1;
        let nr = n - nl;
        if nl < min_leaf.max(1) {
            continue;
        }
        if nr < min_leaf.max(1) {
            break;
        }
        let next = scratch[i + 1].0;
        if next <= xv {
            continue;
        }
        let cost = node_cost(nl as f64, ls, lss, criterion)
            + node_cost(nr as f64, tot_s - ls, tot_ss - lss, criterion);
        let gain = parent - cost;
        if gain > MIN_GAIN && best.is_none_or(|b| gain > b.gain) {
            best = Some(SplitChoice {
                feature,
                threshold: xv + (next - xv) / 2.0,
                gain,
            });
        }
    }
    best
}

struct Builder<'a> {
    x: &'a Matrix,
    y: &'a [f64],
    criterion: Criterion,
    min_leaf: usize,
    features_per_split: Option<usize>,
    nodes: Vec<Node>,
    scratch: Vec<(f64, f64)>,
}

impl Builder<'_> {
    fn choose(&mut self, rows: &[usize], rng: &mut Option<&mut StreamRng>) -> Option<SplitChoice> {
        let d = self.x.cols();
        let candidates: Vec<usize> = match (self.features_per_split, rng.as_deref_mut()) {
            (Some(k), Some(rng)) if k < d => {
                // partial Fisher-Yates, then ascending so ties stay deterministic
                let mut pool: Vec<usize> = (0..d).collect();
                for i in 0..k {
                    let j = rng.random_range(i..d);
                    pool.swap(i, j);
                }
                let mut picked = pool[..k].to_vec();
                picked.sort_unstable();
                picked
            }
            _ => (0..d).collect(),
        };
        let mut best: Option<SplitChoice> = None;
        for f in candidates {
            if let Some(c) = best_split_on_feature(
                self.x,
                self.y,
                rows,
                f,
                self.min_leaf,
                self.criterion,
                &mut self.scratch,
            ) {
                if best.is_none_or(|b| c.gain > b.gain) {
                    best = Some(c);
                }
            }
        }
        best
    }

    fn build(&mut self, rows: Vec<usize>, mut rng: Option<&mut StreamRng>) {
        // explicit stack of (node slot, rows)
        self.nodes.push(Node::Leaf { value: 0.0 });
        let mut stack = vec![(0usize, rows)];
        while let Some((slot, rows)) = stack.pop() {
            let value = leaf_value(rows.iter().map(|&r| self.y[r]), self.criterion);
            let pure = rows.iter().all(|&r| self.y[r] == self.y[rows[0]]);
            let split = if pure { None } else { self.choose(&rows, &mut rng) };
            match split {
                None => self.nodes[slot] = Node::Leaf { value },
                Some(c) => {
                    let (l, r): (Vec<usize>, Vec<usize>) =
                        rows.iter().partition(|&&i| self.x[(i, c.feature)] <= c.threshold);
                    let left = self.nodes.len();
                    self.nodes.push(Node::Leaf { value: 0.0 });
                    let right = self.nodes.len();
                    self.nodes.push(Node::Leaf { value: 0.0 });
                    self.nodes[slot] = Node::Split {
                        feature: c.feature,
                        threshold: c.threshold,
                        left,
                        right,
                    };
                    stack.push((right, r));
                    stack.push((left, l));
                }
            }
        }
    }
}

impl DecisionTree {
    /// Grows a tree on `rows` (indices into `x`, repeats allowed).
    pub fn fit(
        x: &Matrix,
        y: &[f64],
        rows: Vec<usize>,
        criterion: Criterion,
        min_leaf: usize,
        features_per_split: Option<usize>,
        rng: Option<&mut StreamRng>,
    ) -> Self {
        let mut b = Builder {
            x,
            y,
            criterion,
            min_leaf,
            features_per_split,
            nodes: Vec::new(),
            scratch: Vec::with_capacity(rows.len()),
        };
        b.build(rows, rng);
        DecisionTree { nodes: b.nodes }
    }

    /// Grows a tree on every row of `x`.
    pub fn fit_all(
        x: &Matrix,
        y: &[f64],
        criterion: Criterion,
        min_leaf: usize,
        features_per_split: Option<usize>,
        seed: u64,
    ) -> Self {
        let rows: Vec<usize> = (0..x.rows()).collect();
        match features_per_split {
            Some(_) => {
                let mut rng = crate::rng::stream(seed, &["tree"]);
                Self::fit(x, y, rows, criterion, min_leaf, features_per_split, Some(&mut rng))
            }
            None => Self::fit(x, y, rows, criterion, min_leaf, None, None),
        }
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, left).max(go(nodes, right)),
            }
        }
        go(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}
