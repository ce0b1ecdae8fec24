//! Thumbnail–keyframe similarity weights and the per-video star graph.
//!
//! For each keyframe three weights are computed against the thumbnail:
//! face overlap `2·CF / (F_th + F_kf)`, object overlap `2·CO / (O_th + O_kf)`
//! and a histogram-statistics similarity. The first two are undefined when
//! both images are empty of faces (objects); the edge weight is the mean of
//! whichever weights are defined.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{ColorHistogram, FaceSet, ModalityBundle, ObjectSet, HISTOGRAM_BINS};
use crate::error::{Error, Result};

pub const DEFAULT_FACE_THRESHOLD: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeWeights {
    pub w1: Option<f64>,
    pub w2: Option<f64>,
    pub w3: f64,
    pub w_bar: f64,
    pub cf: usize,
    pub co: usize,
    pub d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisparityGraph {
    pub root: Vec<f64>,
    pub children: Vec<Vec<f64>>,
    /// Weight of the root → child edge, one per child.
    pub weights: Vec<f64>,
}

impl DisparityGraph {
    pub fn node_count(&self) -> usize {
        1 + self.children.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.root.len()
    }

    pub fn mean_weight(&self) -> f64 {
        self.weights.iter().sum::<f64>() / self.weights.len().max(1) as f64
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Greedy one-to-one matching in ascending distance; returns `(w1, CF)` or
/// `None` when neither image has faces.
pub fn face_overlap_weight(th: &FaceSet, kf: &FaceSet, threshold: f64) -> Result<Option<(f64, usize)>> {
    let total = th.count() + kf.count();
    if total == 0 {
        return Ok(None);
    }
    if th.count() > 0 && kf.count() > 0 && th.dim != kf.dim {
        return Err(Error::DimensionMismatch {
            what: "face embeddings".into(),
            expected: th.dim,
            found: kf.dim,
        });
    }
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, a) in th.faces.iter().enumerate() {
        for (j, b) in kf.faces.iter().enumerate() {
            let d = euclidean(a, b);
            if d <= threshold {
                pairs.push((d, i, j));
            }
        }
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut used_th = vec![false; th.count()];
    let mut used_kf = vec![false; kf.count()];
    let mut cf = 0;
    for (_, i, j) in pairs {
        if !used_th[i] && !used_kf[j] {
            used_th[i] = true;
            used_kf[j] = true;
            cf += 1;
        }
    }
    Ok(Some((2.0 * cf as f64 / total as f64, cf)))
}

/// Multiset intersection; returns `(w2, CO)` or `None` when both are empty.
pub fn object_overlap_weight(th: &ObjectSet, kf: &ObjectSet) -> Option<(f64, usize)> {
    let total = th.count() + kf.count();
    if total == 0 {
        return None;
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for l in &th.labels {
        *counts.entry(l.as_str()).or_default() += 1;
    }
    let mut co = 0;
    for l in &kf.labels {
        if let Some(c) = counts.get_mut(l.as_str()) {
            if *c > 0 {
                *c -= 1;
                co += 1;
            }
        }
    }
    Some((2.0 * co as f64 / total as f64, co))
}

/// (sum, mean, population std) of the bins.
pub fn histogram_stats(h: &ColorHistogram) -> [f64; 3] {
    let n = h.bins.len() as f64;
    let sum: f64 = h.bins.iter().sum();
    let mean = sum / n;
    let var = h.bins.iter().map(|b| (b - mean) * (b - mean)).sum::<f64>() / n;
    [sum, mean, var.sqrt()]
}

/// `(w3, d)` with `d` the Manhattan distance between the stats vectors and
/// `w3 = 1 / (1 + d / N̄)`, `N̄` the mean pixel total.
pub fn histogram_similarity(th: &ColorHistogram, kf: &ColorHistogram) -> Result<(f64, f64)> {
    for h in [th, kf] {
        if h.bins.len() != HISTOGRAM_BINS {
            return Err(Error::DimensionMismatch {
                what: "histogram bins".into(),
                expected: HISTOGRAM_BINS,
                found: h.bins.len(),
            });
        }
    }
    let (a, b) = (histogram_stats(th), histogram_stats(kf));
    let d: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum();
    let n_bar = (th.total_pixels as f64 + kf.total_pixels as f64) / 2.0;
    Ok((1.0 / (1.0 + d / n_bar), d))
}

/// Mean of the defined weights.
pub fn edge_weight(w1: Option<f64>, w2: Option<f64>, w3: f64) -> f64 {
    let (sum, n) = [w1, w2, Some(w3)]
        .into_iter()
        .flatten()
        .fold((0.0, 0usize), |(s, n), w| (s + w, n + 1));
    sum / n as f64
}

pub fn edge_weights(
    faces: (&FaceSet, &FaceSet),
    objects: (&ObjectSet, &ObjectSet),
    histograms: (&ColorHistogram, &ColorHistogram),
    face_threshold: f64,
) -> Result<EdgeWeights> {
    let face = face_overlap_weight(faces.0, faces.1, face_threshold)?;
    let obj = object_overlap_weight(objects.0, objects.1);
    let (w3, d) = histogram_similarity(histograms.0, histograms.1)?;
    let (w1, w2) = (face.map(|f| f.0), obj.map(|o| o.0));
    Ok(EdgeWeights {
        w1,
        w2,
        w3,
        w_bar: edge_weight(w1, w2, w3),
        cf: face.map_or(0, |f| f.1),
        co: obj.map_or(0, |o| o.1),
        d,
    })
}

pub fn keyframe_weights(bundle: &ModalityBundle, face_threshold: f64) -> Result<Vec<EdgeWeights>> {
    (0..bundle.keyframe_count())
        .map(|k| {
            edge_weights(
                (&bundle.thumbnail_faces, &bundle.keyframe_faces[k]),
                (&bundle.thumbnail_objects, &bundle.keyframe_objects[k]),
                (&bundle.thumbnail_histogram, &bundle.keyframe_histograms[k]),
                face_threshold,
            )
        })
        .collect()
}

pub fn build_star_graph(bundle: &ModalityBundle, face_threshold: f64) -> Result<DisparityGraph> {
    let weights = keyframe_weights(bundle, face_threshold)?;
    Ok(DisparityGraph {
        root: bundle.thumbnail_embedding.clone(),
        children: bundle.keyframe_embeddings.clone(),
        weights: weights.iter().map(|w| w.w_bar).collect(),
    })
}
