//! Second-order gradient boosting on the logistic loss with depth-limited
//! regression trees and exact greedy splits.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::logistic::{sigmoid, softplus};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbtHyper {
    pub rounds: usize,
    pub max_depth: usize,
    pub eta: f64,
    pub lambda: f64,
    pub min_child_weight: f64,
}

impl Default for GbtHyper {
    fn default() -> Self {
        GbtHyper {
            rounds: 100,
            max_depth: 3,
            eta: 0.1,
            lambda: 1.0,
            min_child_weight: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<TreeNode>,
}

impl RegressionTree {
    pub fn predict_row(&self, row: impl Fn(usize) -> f64) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                TreeNode::Leaf { value } => return value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row(feature) <= threshold { left } else { right },
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientBoostedTrees {
    pub hyper: GbtHyper,
    pub base_margin: f64,
    pub trees: Vec<RegressionTree>,
    /// Mean training log-loss after each round, starting with the base score.
    pub train_loss: Vec<f64>,
}

#[derive(Clone, Copy)]
struct Best {
    gain: f64,
    feature: usize,
    threshold: f64,
}

/// Midpoint that keeps `lo` on the left and `hi` on the right.
fn split_point(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid < hi {
        mid
    } else {
        lo
    }
}

fn mean_log_loss(margin: &[f64], y: &[u8]) -> f64 {
    margin
        .iter()
        .zip(y)
        .map(|(&z, &yi)| softplus(z) - f64::from(yi) * z)
        .sum::<f64>()
        / y.len() as f64
}

struct Presorted {
    columns: Vec<Vec<f64>>,
    /// column values in ascending order, aligned with `order`
    sorted: Vec<Vec<f64>>,
    order: Vec<Vec<u32>>,
}

impl Presorted {
    fn new(x: ArrayView2<f64>) -> Self {
        let columns: Vec<Vec<f64>> = x.columns().into_iter().map(|c| c.to_vec()).collect();
        let order: Vec<Vec<u32>> = columns
            .iter()
            .map(|c| {
                let mut o: Vec<u32> = (0..c.len() as u32).collect();
                o.sort_by(|&a, &b| c[a as usize].total_cmp(&c[b as usize]).then(a.cmp(&b)));
                o
            })
            .collect();
        let sorted = columns
            .iter()
            .zip(&order)
            .map(|(c, o)| o.iter().map(|&r| c[r as usize]).collect())
            .collect();
        Presorted { columns, sorted, order }
    }
}

fn grow_tree(data: &Presorted, g: &[f64], h: &[f64], hyper: &GbtHyper, leaf_of: &mut [usize]) -> RegressionTree {
    let n = g.len();
    let mut nodes = vec![TreeNode::Leaf { value: 0.0 }];
    let mut node_of = vec![0usize; n];
    // frontier: (node id, G, H)
    let mut frontier = vec![(0usize, g.iter().sum::<f64>(), h.iter().sum::<f64>())];
    let score = |gs: f64, hs: f64| gs * gs / (hs + hyper.lambda);
    let leaf_value = |gs: f64, hs: f64| -hyper.eta * gs / (hs + hyper.lambda);
    let mut slot = vec![usize::MAX; 1];

    for depth in 0..=hyper.max_depth {
        if frontier.is_empty() {
            break;
        }
        if depth == hyper.max_depth {
            for &(id, gs, hs) in &frontier {
                nodes[id] = TreeNode::Leaf { value: leaf_value(gs, hs) };
            }
            break;
        }
        slot.resize(nodes.len(), usize::MAX);
        slot.iter_mut().for_each(|s| *s = usize::MAX);
        for (i, &(id, _, _)) in frontier.iter().enumerate() {
            slot[id] = i;
        }
        let m = frontier.len();
        let mut best = vec![
            Best {
                gain: 0.0,
                feature: usize::MAX,
                threshold: 0.0,
            };
            m
        ];
        let mut gl = vec![0.0; m];
        let mut hl = vec![0.0; m];
        let mut last = vec![f64::NAN; m];
        for (j, order) in data.order.iter().enumerate() {
            let vals = &data.sorted[j];
            gl.iter_mut().for_each(|v| *v = 0.0);
            hl.iter_mut().for_each(|v| *v = 0.0);
            last.iter_mut().for_each(|v| *v = f64::NAN);
            for (&r, &v) in order.iter().zip(vals) {
                let r = r as usize;
                let s = slot[node_of[r]];
                if s == usize::MAX {
                    continue;
                }
                if v > last[s] {
                    let (_, gs, hs) = frontier[s];
                    let (gr, hr) = (gs - gl[s], hs - hl[s]);
                    if hl[s] >= hyper.min_child_weight && hr >= hyper.min_child_weight {
                        let gain = 0.5 * (score(gl[s], hl[s]) + score(gr, hr) - score(gs, hs));
                        if gain > best[s].gain {
                            best[s] = Best {
                                gain,
                                feature: j,
                                threshold: split_point(last[s], v),
                            };
                        }
                    }
                }
                gl[s] += g[r];
                hl[s] += h[r];
                last[s] = v;
            }
        }
        let mut next = Vec::new();
        let mut child_stats: Vec<Option<(usize, usize)>> = vec![None; m];
        for (s, &(id, gs, hs)) in frontier.iter().enumerate() {
            let b = best[s];
            if b.feature == usize::MAX || b.gain <= 1e-12 {
                nodes[id] = TreeNode::Leaf { value: leaf_value(gs, hs) };
                continue;
            }
            let left = nodes.len();
            nodes.push(TreeNode::Leaf { value: 0.0 });
            nodes.push(TreeNode::Leaf { value: 0.0 });
            nodes[id] = TreeNode::Split {
                feature: b.feature,
                threshold: b.threshold,
                left,
                right: left + 1,
            };
            child_stats[s] = Some((left, left + 1));
        }
        let mut sums = vec![(0.0, 0.0); nodes.len()];
        for r in 0..n {
            let s = slot[node_of[r]];
            if s == usize::MAX {
                continue;
            }
            if let Some((l, rt)) = child_stats[s] {
                let b = best[s];
                node_of[r] = if data.columns[b.feature][r] <= b.threshold { l } else { rt };
                sums[node_of[r]].0 += g[r];
                sums[node_of[r]].1 += h[r];
            }
        }
        for &(l, r) in child_stats.iter().flatten() {
            next.push((l, sums[l].0, sums[l].1));
            next.push((r, sums[r].0, sums[r].1));
        }
        frontier = next;
    }
    leaf_of.copy_from_slice(&node_of);
    RegressionTree { nodes }
}

impl GradientBoostedTrees {
    pub fn fit(x: ArrayView2<f64>, y: &[u8], hyper: GbtHyper) -> Self {
        let n = y.len();
        let pos = y.iter().filter(|&&v| v == 1).count() as f64 / n as f64;
        let base_margin = (pos / (1.0 - pos)).ln();
        let data = Presorted::new(x);
        let mut margin = vec![base_margin; n];
        let mut g = vec![0.0; n];
        let mut h = vec![0.0; n];
        let mut leaf_of = vec![0usize; n];
        let mut trees = Vec::with_capacity(hyper.rounds);
        let mut train_loss = vec![mean_log_loss(&margin, y)];
        for _ in 0..hyper.rounds {
            for i in 0..n {
                let p = sigmoid(margin[i]);
                g[i] = p - f64::from(y[i]);
                h[i] = p * (1.0 - p);
            }
            let tree = grow_tree(&data, &g, &h, &hyper, &mut leaf_of);
            for i in 0..n {
                if let TreeNode::Leaf { value } = tree.nodes[leaf_of[i]] {
                    margin[i] += value;
                }
            }
            train_loss.push(mean_log_loss(&margin, y));
            trees.push(tree);
        }
        GradientBoostedTrees {
            hyper,
            base_margin,
            trees,
            train_loss,
        }
    }

    pub fn predict_margin(&self, x: ArrayView2<f64>) -> Vec<f64> {
        x.rows()
            .into_iter()
            .map(|r| self.base_margin + self.trees.iter().map(|t| t.predict_row(|j| r[j])).sum::<f64>())
            .collect()
    }

    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Vec<f64> {
        self.predict_margin(x).into_iter().map(sigmoid).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn split_point_keeps_sides() {
        let a = 1.0f64;
        let b = f64::from_bits(a.to_bits() + 1);
        let t = split_point(a, b);
        assert!(a <= t && b > t);
        assert_eq!(split_point(1.0, 3.0), 2.0);
    }

    #[test]
    fn stump_matches_hand_newton_step() {
        let x = array![[0.0], [1.0], [2.0], [3.0]];
        let y = [0, 0, 1, 1];
        let hyper = GbtHyper {
            rounds: 1,
            max_depth: 1,
            min_child_weight: 0.0,
            ..GbtHyper::default()
        };
        let m = GradientBoostedTrees::fit(x.view(), &y, hyper);
        assert_eq!(m.base_margin, 0.0);
        // p = 0.5 everywhere: g = ±0.5, h = 0.25; best split at 1.5, leaf = -0.1 * G / (H + 1)
        let leaf = -0.1 * (-1.0) / (0.5 + 1.0);
        match &m.trees[0].nodes[0] {
            TreeNode::Split { feature, threshold, .. } => assert_eq!((*feature, *threshold), (0, 1.5)),
            other => panic!("{other:?}"),
        }
        let margins = m.predict_margin(x.view());
        assert!((margins[3] - leaf).abs() < 1e-15);
        assert!((margins[0] + leaf).abs() < 1e-15);
    }

    #[test]
    fn fits_interaction_with_depth_two() {
        let x = array![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]];
        let x = Array2::from_shape_fn((40, 2), |(i, j)| x[[i % 4, j]]);
        let y: Vec<u8> = (0..40).map(|i| [0, 0, 0, 1][i % 4]).collect();
        let m = GradientBoostedTrees::fit(x.view(), &y, GbtHyper::default());
        let p = m.predict_proba(x.view());
        assert!(p.iter().zip(&y).all(|(&p, &y)| u8::from(p >= 0.5) == y));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn loss_nonincreasing(seed in any::<u64>()) {
            let mut r = crate::rng::stream(seed, &[]);
            let x = Array2::from_shape_fn((60, 4), |_| r.gen_range(-1.0..1.0));
            let y: Vec<u8> = (0..60).map(|i| u8::from(x[[i, 0]] * x[[i, 1]] + 0.3 * r.gen_range(-1.0..1.0) > 0.0)).collect();
            prop_assume!(y.contains(&0) && y.contains(&1));
            let m = GradientBoostedTrees::fit(x.view(), &y, GbtHyper { rounds: 30, ..GbtHyper::default() });
            for w in m.train_loss.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-15);
            }
        }
    }
}
