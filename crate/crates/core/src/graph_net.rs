//! Weighted message-passing network over star graphs.
//!
//! Architecture: a linear projection of every node's 2048-d image feature to
//! `h` units, two message-passing layers
//! `h'_v = ReLU(W_self h_v + Σ_u w(u,v) W_nbr h_u + b)` with edges used in
//! both directions, mean pooling over nodes, a 16-unit tanh readout (the
//! exported feature vector) and a 2-way softmax head.
//!
//! Training is full-batch gradient descent with momentum on mean
//! cross-entropy. All graphs of a batch are stacked into one node matrix so
//! the projection runs as a single matrix product.

use std::ops::Range;

use ndarray::{s, Array1, Array2, ArrayView1, Axis};
use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::visual::DisparityGraph;

pub const READOUT_DIM: usize = 16;
const CLASSES: usize = 2;
const INIT_RANGE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GcnHyper {
    pub hidden: usize,
    pub lr: f64,
    pub epochs: usize,
    pub momentum: f64,
    pub seed: u64,
}

impl Default for GcnHyper {
    fn default() -> Self {
        GcnHyper {
            hidden: 32,
            lr: 0.02,
            epochs: 100,
            momentum: 0.9,
            seed: 0,
        }
    }
}

/// The trainable tensors, in a fixed order used for flattening.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GcnWeights {
    pub w_in: Array2<f64>,
    pub b_in: Array1<f64>,
    pub w_self1: Array2<f64>,
    pub w_nbr1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w_self2: Array2<f64>,
    pub w_nbr2: Array2<f64>,
    pub b2: Array1<f64>,
    pub w_read: Array2<f64>,
    pub b_read: Array1<f64>,
    pub w_out: Array2<f64>,
    pub b_out: Array1<f64>,
}

macro_rules! each_tensor {
    ($w:expr, $f:ident) => {
        [
            $w.w_in.$f().unwrap(),
            $w.b_in.$f().unwrap(),
            $w.w_self1.$f().unwrap(),
            $w.w_nbr1.$f().unwrap(),
            $w.b1.$f().unwrap(),
            $w.w_self2.$f().unwrap(),
            $w.w_nbr2.$f().unwrap(),
            $w.b2.$f().unwrap(),
            $w.w_read.$f().unwrap(),
            $w.b_read.$f().unwrap(),
            $w.w_out.$f().unwrap(),
            $w.b_out.$f().unwrap(),
        ]
    };
}

impl GcnWeights {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        GcnWeights {
            w_in: Array2::zeros((input_dim, hidden)),
            b_in: Array1::zeros(hidden),
            w_self1: Array2::zeros((hidden, hidden)),
            w_nbr1: Array2::zeros((hidden, hidden)),
            b1: Array1::zeros(hidden),
            w_self2: Array2::zeros((hidden, hidden)),
            w_nbr2: Array2::zeros((hidden, hidden)),
            b2: Array1::zeros(hidden),
            w_read: Array2::zeros((hidden, READOUT_DIM)),
            b_read: Array1::zeros(READOUT_DIM),
            w_out: Array2::zeros((READOUT_DIM, CLASSES)),
            b_out: Array1::zeros(CLASSES),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w_in.nrows()
    }

    pub fn hidden(&self) -> usize {
        self.w_in.ncols()
    }

    pub fn slices(&self) -> [&[f64]; 12] {
        each_tensor!(self, as_slice)
    }

    pub fn slices_mut(&mut self) -> [&mut [f64]; 12] {
        each_tensor!(self, as_slice_mut)
    }

    pub fn len(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, mut idx: usize) -> f64 {
        for s in self.slices() {
            if idx < s.len() {
                return s[idx];
            }
            idx -= s.len();
        }
        panic!("parameter index out of range")
    }

    pub fn set(&mut self, mut idx: usize, v: f64) {
        for s in self.slices_mut() {
            if idx < s.len() {
                s[idx] = v;
                return;
            }
            idx -= s.len();
        }
        panic!("parameter index out of range")
    }

    fn is_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|x| x.is_finite()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphNetParams {
    pub hyper: GcnHyper,
    pub weights: GcnWeights,
}

impl GraphNetParams {
    pub fn zeros(input_dim: usize, hyper: GcnHyper) -> Self {
        GraphNetParams {
            hyper,
            weights: GcnWeights::zeros(input_dim, hyper.hidden),
        }
    }

    /// Uniform(-0.05, 0.05) initialisation from the hyperparameter seed.
    pub fn init(input_dim: usize, hyper: GcnHyper) -> Self {
        let mut p = Self::zeros(input_dim, hyper);
        let mut r = rng::stream(hyper.seed, &[rng::tag::GCN, 0]);
        for s in p.weights.slices_mut() {
            s.iter_mut().for_each(|x| *x = r.gen_range(-INIT_RANGE..INIT_RANGE));
        }
        p
    }

    /// Random network with fan-in scaled weights, for gradient checking.
    /// At the training initialisation the projection gradients are ~1e-7,
    /// where central differences at ε=1e-5 are limited by rounding.
    pub fn random(input_dim: usize, hyper: GcnHyper) -> Self {
        let mut p = Self::zeros(input_dim, hyper);
        let mut r = rng::stream(hyper.seed, &[rng::tag::GRAD_CHECK, 1]);
        let w = &mut p.weights;
        for m in [&mut w.w_in, &mut w.w_self1, &mut w.w_nbr1, &mut w.w_self2, &mut w.w_nbr2, &mut w.w_read, &mut w.w_out] {
            let bound = 1.0 / (m.nrows() as f64).sqrt();
            m.iter_mut().for_each(|x| *x = r.gen_range(-bound..bound));
        }
        for b in [&mut w.b_in, &mut w.b1, &mut w.b2, &mut w.b_read, &mut w.b_out] {
            b.iter_mut().for_each(|x| *x = r.gen_range(-0.1..0.1));
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphNetOutput {
    pub penultimate: [f64; READOUT_DIM],
    pub logits: [f64; 2],
    pub probability: f64,
}

/// Stacked node matrix for a set of graphs.
struct Batch {
    x: Array2<f64>,
    ranges: Vec<Range<usize>>,
    /// (root row, child row, weight)
    edges: Vec<(usize, usize, f64)>,
}

impl Batch {
    fn new(graphs: &[&DisparityGraph], input_dim: usize) -> Result<Self> {
        let n: usize = graphs.iter().map(|g| g.node_count()).sum();
        let mut x = Array2::zeros((n, input_dim));
        let mut ranges = Vec::with_capacity(graphs.len());
        let mut edges = Vec::new();
        let mut row = 0;
        for g in graphs {
            if g.weights.len() != g.children.len() {
                return Err(Error::LengthMismatch {
                    what: "graph edges vs children".into(),
                    left: g.weights.len(),
                    right: g.children.len(),
                });
            }
            let start = row;
            for feat in std::iter::once(&g.root).chain(&g.children) {
                if feat.len() != input_dim {
                    return Err(Error::DimensionMismatch {
                        what: "graph node features".into(),
                        expected: input_dim,
                        found: feat.len(),
                    });
                }
                x.row_mut(row).assign(&ArrayView1::from(feat.as_slice()));
                row += 1;
            }
            for (c, &w) in g.weights.iter().enumerate() {
                edges.push((start, start + 1 + c, w));
            }
            ranges.push(start..row);
        }
        Ok(Batch { x, ranges, edges })
    }

    /// Symmetric weighted neighbour sum.
    fn aggregate(&self, h: &Array2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros(h.raw_dim());
        for &(r, c, w) in &self.edges {
            let (hr, hc) = (h.row(r).to_owned(), h.row(c).to_owned());
            out.row_mut(r).scaled_add(w, &hc);
            out.row_mut(c).scaled_add(w, &hr);
        }
        out
    }
}

struct Cache {
    h0: Array2<f64>,
    a0: Array2<f64>,
    p1: Array2<f64>,
    h1: Array2<f64>,
    a1: Array2<f64>,
    p2: Array2<f64>,
    pooled: Array2<f64>,
    z: Array2<f64>,
    logits: Array2<f64>,
}

fn relu(a: &Array2<f64>) -> Array2<f64> {
    a.mapv(|v| v.max(0.0))
}

fn softmax2(l: ArrayView1<f64>) -> [f64; 2] {
    let m = l[0].max(l[1]);
    let (e0, e1) = ((l[0] - m).exp(), (l[1] - m).exp());
    [e0 / (e0 + e1), e1 / (e0 + e1)]
}

fn forward(w: &GcnWeights, b: &Batch) -> Cache {
    let h0 = b.x.dot(&w.w_in) + &w.b_in;
    let a0 = b.aggregate(&h0);
    let p1 = h0.dot(&w.w_self1) + a0.dot(&w.w_nbr1) + &w.b1;
    let h1 = relu(&p1);
    let a1 = b.aggregate(&h1);
    let p2 = h1.dot(&w.w_self2) + a1.dot(&w.w_nbr2) + &w.b2;
    let h2 = relu(&p2);
    let mut pooled = Array2::zeros((b.ranges.len(), w.hidden()));
    for (g, r) in b.ranges.iter().enumerate() {
        pooled.row_mut(g).assign(&h2.slice(s![r.clone(), ..]).mean_axis(Axis(0)).unwrap());
    }
    let z = (pooled.dot(&w.w_read) + &w.b_read).mapv(f64::tanh);
    let logits = z.dot(&w.w_out) + &w.b_out;
    Cache { h0, a0, p1, h1, a1, p2, pooled, z, logits }
}

fn mean_loss(c: &Cache, labels: &[u8]) -> f64 {
    labels
        .iter()
        .enumerate()
        .map(|(g, &y)| {
            let l = c.logits.row(g);
            let m = l[0].max(l[1]);
            let lse = m + ((l[0] - m).exp() + (l[1] - m).exp()).ln();
            lse - l[y as usize]
        })
        .sum::<f64>()
        / labels.len() as f64
}

/// Backward-pass corruption used to prove the gradient check can fail.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackwardFault {
    None,
    /// Use `W_self2` instead of its transpose when propagating to layer 1.
    TransposedSelfWeight,
}

fn mask(d: &mut Array2<f64>, pre: &Array2<f64>) {
    d.zip_mut_with(pre, |g, &p| {
        if p <= 0.0 {
            *g = 0.0
        }
    });
}

fn backward(w: &GcnWeights, b: &Batch, c: &Cache, labels: &[u8], fault: BackwardFault) -> GcnWeights {
    let n_graphs = labels.len() as f64;
    let mut d_logits = Array2::zeros(c.logits.raw_dim());
    for (g, &y) in labels.iter().enumerate() {
        let p = softmax2(c.logits.row(g));
        d_logits[[g, 0]] = (p[0] - f64::from(u8::from(y == 0))) / n_graphs;
        d_logits[[g, 1]] = (p[1] - f64::from(u8::from(y == 1))) / n_graphs;
    }
    let mut grad = GcnWeights::zeros(w.input_dim(), w.hidden());
    grad.w_out = c.z.t().dot(&d_logits);
    grad.b_out = d_logits.sum_axis(Axis(0));
    let mut dq = d_logits.dot(&w.w_out.t());
    dq.zip_mut_with(&c.z, |g, &z| *g *= 1.0 - z * z);
    grad.w_read = c.pooled.t().dot(&dq);
    grad.b_read = dq.sum_axis(Axis(0));
    let d_pooled = dq.dot(&w.w_read.t());

    let mut dp2 = Array2::zeros(c.p2.raw_dim());
    for (g, r) in b.ranges.iter().enumerate() {
        let scale = 1.0 / r.len() as f64;
        let row = d_pooled.row(g);
        for i in r.clone() {
            dp2.row_mut(i).scaled_add(scale, &row);
        }
    }
    mask(&mut dp2, &c.p2);
    grad.w_self2 = c.h1.t().dot(&dp2);
    grad.w_nbr2 = c.a1.t().dot(&dp2);
    grad.b2 = dp2.sum_axis(Axis(0));
    let self_path = match fault {
        BackwardFault::None => dp2.dot(&w.w_self2.t()),
        BackwardFault::TransposedSelfWeight => dp2.dot(&w.w_self2),
    };
    let mut dp1 = self_path + b.aggregate(&dp2.dot(&w.w_nbr2.t()));
    mask(&mut dp1, &c.p1);
    grad.w_self1 = c.h0.t().dot(&dp1);
    grad.w_nbr1 = c.a0.t().dot(&dp1);
    grad.b1 = dp1.sum_axis(Axis(0));
    let dh0 = dp1.dot(&w.w_self1.t()) + b.aggregate(&dp1.dot(&w.w_nbr1.t()));
    grad.w_in = b.x.t().dot(&dh0);
    grad.b_in = dh0.sum_axis(Axis(0));
    grad
}

fn check_dim(graph: &DisparityGraph, params: &GraphNetParams) -> Result<()> {
    if graph.feature_dim() != params.weights.input_dim() {
        return Err(Error::DimensionMismatch {
            what: "graph node features vs network input".into(),
            expected: params.weights.input_dim(),
            found: graph.feature_dim(),
        });
    }
    Ok(())
}

fn output_row(c: &Cache, g: usize) -> GraphNetOutput {
    let mut penultimate = [0.0; READOUT_DIM];
    penultimate.iter_mut().zip(c.z.row(g)).for_each(|(o, &v)| *o = v);
    let logits = [c.logits[[g, 0]], c.logits[[g, 1]]];
    GraphNetOutput {
        penultimate,
        logits,
        probability: softmax2(c.logits.row(g))[1],
    }
}

pub fn gcn_forward(graph: &DisparityGraph, params: &GraphNetParams) -> Result<GraphNetOutput> {
    check_dim(graph, params)?;
    let batch = Batch::new(&[graph], params.weights.input_dim())?;
    Ok(output_row(&forward(&params.weights, &batch), 0))
}

/// Forward many graphs at once (chunked; chunks run in parallel).
pub fn gcn_forward_many(graphs: &[DisparityGraph], params: &GraphNetParams) -> Result<Vec<GraphNetOutput>> {
    const CHUNK: usize = 64;
    let chunks: Vec<Result<Vec<GraphNetOutput>>> = graphs
        .par_chunks(CHUNK)
        .map(|chunk| {
            for g in chunk {
                check_dim(g, params)?;
            }
            let refs: Vec<&DisparityGraph> = chunk.iter().collect();
            let batch = Batch::new(&refs, params.weights.input_dim())?;
            let c = forward(&params.weights, &batch);
            Ok((0..chunk.len()).map(|g| output_row(&c, g)).collect())
        })
        .collect();
    let mut out = Vec::with_capacity(graphs.len());
    for c in chunks {
        out.extend(c?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainTrace {
    pub params: GraphNetParams,
    /// Mean cross-entropy before each update, plus the final value.
    pub losses: Vec<f64>,
}

pub fn gcn_train(graphs: &[DisparityGraph], labels: &[u8], hyper: GcnHyper) -> Result<GraphNetParams> {
    gcn_train_traced(graphs, labels, hyper).map(|t| t.params)
}

pub fn gcn_train_traced(graphs: &[DisparityGraph], labels: &[u8], hyper: GcnHyper) -> Result<TrainTrace> {
    if graphs.len() != labels.len() {
        return Err(Error::LengthMismatch {
            what: "graphs vs labels".into(),
            left: graphs.len(),
            right: labels.len(),
        });
    }
    if graphs.len() < 2 || !labels.contains(&0) || !labels.contains(&1) {
        return Err(Error::SingleClass);
    }
    let input_dim = graphs[0].feature_dim();
    let refs: Vec<&DisparityGraph> = graphs.iter().collect();
    let batch = Batch::new(&refs, input_dim)?;
    let mut params = GraphNetParams::init(input_dim, hyper);
    let mut velocity = GcnWeights::zeros(input_dim, hyper.hidden);
    let mut losses = Vec::with_capacity(hyper.epochs + 1);
    for _ in 0..hyper.epochs {
        let cache = forward(&params.weights, &batch);
        losses.push(mean_loss(&cache, labels));
        let grad = backward(&params.weights, &batch, &cache, labels, BackwardFault::None);
        for ((p, v), g) in params
            .weights
            .slices_mut()
            .into_iter()
            .zip(velocity.slices_mut())
            .zip(grad.slices())
        {
            for ((pi, vi), gi) in p.iter_mut().zip(v.iter_mut()).zip(g) {
                *vi = hyper.momentum * *vi + gi;
                *pi -= hyper.lr * *vi;
            }
        }
    }
    losses.push(mean_loss(&forward(&params.weights, &batch), labels));
    if !params.weights.is_finite() {
        return Err(Error::NonFinite {
            what: "graph network parameters after training".into(),
        });
    }
    Ok(TrainTrace { params, losses })
}

/// Loss and analytic gradient for one labelled graph.
pub fn gcn_loss_and_grad(
    params: &GraphNetParams,
    graph: &DisparityGraph,
    label: u8,
) -> Result<(f64, GcnWeights)> {
    loss_and_grad(params, graph, label, BackwardFault::None)
}

fn loss_and_grad(
    params: &GraphNetParams,
    graph: &DisparityGraph,
    label: u8,
    fault: BackwardFault,
) -> Result<(f64, GcnWeights)> {
    check_dim(graph, params)?;
    let batch = Batch::new(&[graph], params.weights.input_dim())?;
    let cache = forward(&params.weights, &batch);
    let grad = backward(&params.weights, &batch, &cache, &[label], fault);
    Ok((mean_loss(&cache, &[label]), grad))
}

pub fn gcn_loss(params: &GraphNetParams, graph: &DisparityGraph, label: u8) -> Result<f64> {
    check_dim(graph, params)?;
    let batch = Batch::new(&[graph], params.weights.input_dim())?;
    Ok(mean_loss(&forward(&params.weights, &batch), &[label]))
}

/// Pairs of (analytic, numeric) below this are treated as agreeing zeros.
pub const GRAD_ZERO_FLOOR: f64 = 1e-10;
pub const GRAD_CHECK_MIN_COORDS: usize = 200;

/// Relative error used by every gradient check in the crate, `None` for a
/// degenerate (both near-zero) pair.
pub fn relative_error(analytic: f64, numeric: f64) -> Option<f64> {
    if analytic.abs() < GRAD_ZERO_FLOOR && numeric.abs() < GRAD_ZERO_FLOOR {
        None
    } else {
        Some((analytic - numeric).abs() / analytic.abs().max(numeric.abs()))
    }
}

/// Max relative error between the analytic gradient and central finite
/// differences over a seeded subsample of at least 200 coordinates.
pub fn gcn_grad_check(params: &GraphNetParams, graph: &DisparityGraph, label: u8, eps: f64) -> Result<f64> {
    grad_check_with_fault(params, graph, label, eps, BackwardFault::None)
}

#[doc(hidden)]
pub fn grad_check_with_fault(
    params: &GraphNetParams,
    graph: &DisparityGraph,
    label: u8,
    eps: f64,
    fault: BackwardFault,
) -> Result<f64> {
    if !(eps > 0.0 && eps <= 1e-3) {
        return Err(Error::InvalidInput(format!("finite-difference step {eps} outside (0, 1e-3]")));
    }
    let (_, grad) = loss_and_grad(params, graph, label, fault)?;
    let total = params.weights.len();
    let coords: Vec<usize> = if total <= GRAD_CHECK_MIN_COORDS {
        (0..total).collect()
    } else {
        // include every non-projection coordinate, plus a sample of the projection
        let proj = params.weights.w_in.len();
        let rest: Vec<usize> = (proj..total).collect();
        let want = GRAD_CHECK_MIN_COORDS.max(rest.len() + 64);
        let mut r = rng::stream(params.hyper.seed, &[rng::tag::GRAD_CHECK]);
        let mut picked: Vec<usize> = sample(&mut r, proj, (want - rest.len()).min(proj)).into_vec();
        picked.sort_unstable();
        picked.extend(rest);
        picked
    };
    let mut probe = params.clone();
    let mut worst = 0.0f64;
    for idx in coords {
        let orig = probe.weights.get(idx);
        probe.weights.set(idx, orig + eps);
        let up = gcn_loss(&probe, graph, label)?;
        probe.weights.set(idx, orig - eps);
        let down = gcn_loss(&probe, graph, label)?;
        probe.weights.set(idx, orig);
        let numeric = (up - down) / (2.0 * eps);
        if let Some(e) = relative_error(grad.get(idx), numeric) {
            worst = worst.max(e);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_graph(seed: u64, dim: usize, children: usize) -> DisparityGraph {
        let mut r = rng::stream(seed, &[99]);
        let vec = |r: &mut rand_chacha::ChaCha8Rng| (0..dim).map(|_| r.gen_range(0.0..1.0)).collect::<Vec<f64>>();
        DisparityGraph {
            root: vec(&mut r),
            children: (0..children).map(|_| vec(&mut r)).collect(),
            weights: (0..children).map(|_| r.gen_range(0.0..1.0)).collect(),
        }
    }

    fn small_hyper(seed: u64) -> GcnHyper {
        GcnHyper {
            hidden: 4,
            seed,
            ..GcnHyper::default()
        }
    }

    #[test]
    fn zero_network() {
        let g = random_graph(1, 2048, 3);
        let p = GraphNetParams::zeros(2048, GcnHyper::default());
        let out = gcn_forward(&g, &p).unwrap();
        assert_eq!(out.penultimate, [0.0; 16]);
        assert_eq!(out.logits, [0.0, 0.0]);
        assert_eq!(out.probability, 0.5);
    }

    #[test]
    fn zero_weights_equal_no_edges() {
        let mut g = random_graph(2, 64, 4);
        g.weights = vec![0.0; 4];
        let p = GraphNetParams::init(64, small_hyper(3));
        let with_zero = gcn_forward(&g, &p).unwrap();
        let batch = Batch {
            edges: Vec::new(),
            ..Batch::new(&[&g], 64).unwrap()
        };
        let c = forward(&p.weights, &batch);
        assert_eq!(output_row(&c, 0), with_zero);
    }

    #[test]
    fn permuting_children_preserves_output() {
        for seed in 0..10 {
            let g = random_graph(seed, 32, 5);
            let p = GraphNetParams::init(32, GcnHyper { hidden: 8, seed, ..GcnHyper::default() });
            let order = [3usize, 0, 4, 2, 1];
            let permuted = DisparityGraph {
                root: g.root.clone(),
                children: order.iter().map(|&i| g.children[i].clone()).collect(),
                weights: order.iter().map(|&i| g.weights[i]).collect(),
            };
            let (a, b) = (gcn_forward(&g, &p).unwrap(), gcn_forward(&permuted, &p).unwrap());
            for (x, y) in a.penultimate.iter().zip(&b.penultimate) {
                assert!((x - y).abs() < 1e-12);
            }
            assert!((a.probability - b.probability).abs() < 1e-12);
        }
    }

    #[test]
    fn batched_forward_matches_single() {
        let graphs: Vec<_> = (0..5).map(|s| random_graph(s, 16, 1 + s as usize % 3)).collect();
        let p = GraphNetParams::init(16, GcnHyper { hidden: 6, ..GcnHyper::default() });
        let many = gcn_forward_many(&graphs, &p).unwrap();
        for (g, m) in graphs.iter().zip(&many) {
            let one = gcn_forward(g, &p).unwrap();
            assert!((one.probability - m.probability).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for seed in 0..10 {
            let g = random_graph(seed + 100, 2048, 3);
            let p = GraphNetParams::random(2048, small_hyper(seed));
            let err = gcn_grad_check(&p, &g, (seed % 2) as u8, 1e-5).unwrap();
            assert!(err <= 1e-4, "seed {seed}: {err}");
        }
    }

    #[test]
    fn corrupted_backward_is_caught() {
        let g = random_graph(7, 2048, 3);
        let p = GraphNetParams::random(2048, small_hyper(7));
        let err = grad_check_with_fault(&p, &g, 1, 1e-5, BackwardFault::TransposedSelfWeight).unwrap();
        assert!(err > 1e-2, "{err}");
    }

    #[test]
    fn degenerate_pairs_are_excluded() {
        assert_eq!(relative_error(0.0, 5e-11), None);
        assert!(relative_error(1.0, 1.0).unwrap() == 0.0);
        assert!(gcn_grad_check(&GraphNetParams::zeros(4, small_hyper(0)), &random_graph(0, 4, 1), 0, 2e-3).is_err());
    }

    fn planted(n: usize, seed: u64) -> (Vec<DisparityGraph>, Vec<u8>) {
        let mut graphs = Vec::new();
        let mut labels = Vec::new();
        let mut r = rng::stream(seed, &[5]);
        for i in 0..n {
            let mut g = random_graph(seed * 1000 + i as u64, 2048, 3);
            let bait = i % 2 == 0;
            g.weights = (0..3)
                .map(|_| if bait { r.gen_range(0.0..0.25) } else { r.gen_range(0.4..1.0) })
                .collect();
            labels.push(u8::from(g.mean_weight() < 0.3));
            graphs.push(g);
        }
        (graphs, labels)
    }

    #[test]
    fn learns_planted_edge_weight_rule() {
        let (graphs, labels) = planted(20, 11);
        let hyper = GcnHyper {
            epochs: 200,
            lr: 0.05,
            seed: 3,
            ..GcnHyper::default()
        };
        let trace = gcn_train_traced(&graphs, &labels, hyper).unwrap();
        assert!(trace.losses.last().unwrap() <= &trace.losses[0]);
        let out = gcn_forward_many(&graphs, &trace.params).unwrap();
        let correct = out.iter().zip(&labels).filter(|(o, &y)| u8::from(o.probability >= 0.5) == y).count();
        assert!(correct as f64 / 20.0 >= 0.95, "train accuracy {correct}/20");
    }

    #[test]
    fn training_is_deterministic() {
        let (graphs, labels) = planted(12, 4);
        let hyper = GcnHyper { hidden: 4, epochs: 20, ..GcnHyper::default() };
        let a = gcn_train(&graphs, &labels, hyper).unwrap();
        let b = gcn_train(&graphs, &labels, hyper).unwrap();
        let bits = |p: &GraphNetParams| p.weights.slices().iter().flat_map(|s| s.iter().map(|x| x.to_bits())).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn single_class_rejected() {
        let (graphs, _) = planted(4, 1);
        assert!(matches!(gcn_train(&graphs, &[1, 1, 1, 1], GcnHyper::default()), Err(Error::SingleClass)));
    }
}
