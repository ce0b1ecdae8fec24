//! CART classification trees (Gini) and bootstrap random forests.

use ndarray::ArrayView2;
use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestHyper {
    pub trees: usize,
    /// `None` means ⌈√p⌉.
    pub max_features: Option<usize>,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
}

impl Default for ForestHyper {
    fn default() -> Self {
        ForestHyper {
            trees: 100,
            max_features: None,
            max_depth: None,
            min_samples_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CartNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        label: u8,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationTree {
    pub nodes: Vec<CartNode>,
}

impl ClassificationTree {
    pub fn predict_row(&self, row: impl Fn(usize) -> f64) -> u8 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                CartNode::Leaf { label } => return label,
                CartNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row(feature) <= threshold { left } else { right },
            }
        }
    }
}

pub fn bootstrap_sample(n: usize, rng: &mut impl Rng) -> Vec<usize> {
    (0..n).map(|_| rng.gen_range(0..n)).collect()
}

fn gini(pos: f64, total: f64) -> f64 {
    if total == 0.0 {
        return 0.0;
    }
    let p = pos / total;
    2.0 * p * (1.0 - p)
}

fn majority(rows: &[usize], y: &[u8]) -> u8 {
    let pos = rows.iter().filter(|&&r| y[r] == 1).count();
    u8::from(2 * pos >= rows.len())
}

struct Cart<'a, R: Rng> {
    x: ArrayView2<'a, f64>,
    y: &'a [u8],
    max_features: usize,
    max_depth: Option<usize>,
    min_leaf: usize,
    rng: &'a mut R,
    nodes: Vec<CartNode>,
}

impl<R: Rng> Cart<'_, R> {
    fn best_split(&mut self, rows: &[usize]) -> Option<(usize, f64)> {
        let p = self.x.ncols();
        let mut features = sample(self.rng, p, self.max_features.min(p)).into_vec();
        features.sort_unstable();
        let n = rows.len() as f64;
        let total_pos = rows.iter().filter(|&&r| self.y[r] == 1).count() as f64;
        let parent = gini(total_pos, n);
        let mut best: Option<(f64, usize, f64)> = None;
        let mut sorted = rows.to_vec();
        for j in features {
            sorted.sort_by(|&a, &b| self.x[[a, j]].total_cmp(&self.x[[b, j]]));
            let mut left_pos = 0.0;
            for i in 0..sorted.len() - 1 {
                left_pos += f64::from(self.y[sorted[i]]);
                let (lo, hi) = (self.x[[sorted[i], j]], self.x[[sorted[i + 1], j]]);
                let nl = (i + 1) as f64;
                if lo == hi || i + 1 < self.min_leaf || sorted.len() - i - 1 < self.min_leaf {
                    continue;
                }
                let nr = n - nl;
                let impurity = (nl * gini(left_pos, nl) + nr * gini(total_pos - left_pos, nr)) / n;
                let decrease = parent - impurity;
                if decrease > 1e-12 && best.is_none_or(|b| decrease > b.0) {
                    let mid = lo + (hi - lo) / 2.0;
                    best = Some((decrease, j, if mid < hi { mid } else { lo }));
                }
            }
        }
        best.map(|(_, j, t)| (j, t))
    }

    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        self.nodes.push(CartNode::Leaf {
            label: majority(&rows, self.y),
        });
        let pure = rows.iter().all(|&r| self.y[r] == self.y[rows[0]]);
        if pure || self.max_depth.is_some_and(|d| depth >= d) || rows.len() < 2 * self.min_leaf {
            return id;
        }
        if let Some((feature, threshold)) = self.best_split(&rows) {
            let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| self.x[[i, feature]] <= threshold);
            let left = self.grow(l, depth + 1);
            let right = self.grow(r, depth + 1);
            self.nodes[id] = CartNode::Split {
                feature,
                threshold,
                left,
                right,
            };
        }
        id
    }
}

/// Fit a CART tree on `rows` (indices into `x`, repeats allowed).
pub fn fit_cart(
    x: ArrayView2<f64>,
    y: &[u8],
    rows: &[usize],
    max_features: usize,
    max_depth: Option<usize>,
    min_samples_leaf: usize,
    rng: &mut impl Rng,
) -> ClassificationTree {
    let mut cart = Cart {
        x,
        y,
        max_features: max_features.max(1),
        max_depth,
        min_leaf: min_samples_leaf.max(1),
        rng,
        nodes: Vec::new(),
    };
    cart.grow(rows.to_vec(), 0);
    ClassificationTree { nodes: cart.nodes }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub hyper: ForestHyper,
    pub trees: Vec<ClassificationTree>,
}

pub fn tree_stream(seed: u64, tree: usize) -> ChaCha8Rng {
    rng::stream(seed, &[tree as u64])
}

impl RandomForest {
    pub fn fit(x: ArrayView2<f64>, y: &[u8], hyper: ForestHyper, seed: u64) -> Self {
        let p = x.ncols();
        let mtry = hyper
            .max_features
            .unwrap_or_else(|| (p as f64).sqrt().ceil() as usize)
            .clamp(1, p.max(1));
        let trees = (0..hyper.trees)
            .into_par_iter()
            .map(|t| {
                let mut r = tree_stream(seed, t);
                let rows = bootstrap_sample(y.len(), &mut r);
                fit_cart(x, y, &rows, mtry, hyper.max_depth, hyper.min_samples_leaf, &mut r)
            })
            .collect();
        RandomForest { hyper, trees }
    }

    /// Mean of hard tree votes.
    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Vec<f64> {
        x.rows()
            .into_iter()
            .map(|r| {
                let votes: usize = self.trees.iter().map(|t| t.predict_row(|j| r[j]) as usize).sum();
                votes as f64 / self.trees.len().max(1) as f64
            })
            .collect()
    }
}
