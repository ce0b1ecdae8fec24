use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auc: f64,
    pub fit_time_s: f64,
    pub score_time_s: f64,
}

impl Metrics {
    /// Field-wise arithmetic mean.
    pub fn mean(rows: &[Metrics]) -> Metrics {
        let n = rows.len().max(1) as f64;
        let sum = |f: fn(&Metrics) -> f64| rows.iter().map(f).sum::<f64>() / n;
        Metrics {
            accuracy: sum(|m| m.accuracy),
            precision: sum(|m| m.precision),
            recall: sum(|m| m.recall),
            f1: sum(|m| m.f1),
            auc: sum(|m| m.auc),
            fit_time_s: sum(|m| m.fit_time_s),
            score_time_s: sum(|m| m.score_time_s),
        }
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Accuracy, precision, recall and F1 at `score ≥ threshold`; zero
/// denominators give 0. `auc` and the times are left at 0.
pub fn binary_metrics(y_true: &[u8], y_score: &[f64], threshold: f64) -> Result<Metrics> {
    if y_true.len() != y_score.len() {
        return Err(Error::LengthMismatch {
            what: "labels vs scores".into(),
            left: y_true.len(),
            right: y_score.len(),
        });
    }
    if y_true.is_empty() {
        return Err(Error::InvalidInput("no rows to score".into()));
    }
    let (mut tp, mut fp, mut fneg, mut tn) = (0, 0, 0, 0);
    for (&y, &s) in y_true.iter().zip(y_score) {
        match (y == 1, s >= threshold) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fneg += 1,
            (false, false) => tn += 1,
        }
    }
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fneg);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(Metrics {
        accuracy: ratio(tp + tn, y_true.len()),
        precision,
        recall,
        f1,
        ..Metrics::default()
    })
}

fn check_scored(y_true: &[u8], y_score: &[f64]) -> Result<(usize, usize)> {
    if y_true.len() != y_score.len() {
        return Err(Error::LengthMismatch {
            what: "labels vs scores".into(),
            left: y_true.len(),
            right: y_score.len(),
        });
    }
    if y_score.iter().any(|s| s.is_nan()) {
        return Err(Error::NonFinite { what: "scores".into() });
    }
    let pos = y_true.iter().filter(|&&y| y == 1).count();
    let neg = y_true.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    Ok((pos, neg))
}

/// Rank-sum AUC with average ranks for ties, i.e. P(s⁺ > s⁻) + ½P(tie).
pub fn roc_auc(y_true: &[u8], y_score: &[f64]) -> Result<f64> {
    let (pos, neg) = check_scored(y_true, y_score)?;
    let mut order: Vec<usize> = (0..y_score.len()).collect();
    order.sort_by(|&a, &b| y_score[a].total_cmp(&y_score[b]));
    // twice the rank sum keeps every quantity an integer
    let mut rank_sum2: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && y_score[order[j + 1]] == y_score[order[i]] {
            j += 1;
        }
        let avg2 = (i + 1 + j + 1) as u64;
        let pos_in_group = order[i..=j].iter().filter(|&&k| y_true[k] == 1).count() as u64;
        rank_sum2 += avg2 * pos_in_group;
        i = j + 1;
    }
    let (p, n) = (pos as u64, neg as u64);
    let u2 = rank_sum2 - p * (p + 1);
    Ok(u2 as f64 / (2 * p * n) as f64)
}

/// ROC points (FPR, TPR) from (0,0) to (1,1), one per distinct threshold.
pub fn roc_curve(y_true: &[u8], y_score: &[f64]) -> Result<Vec<(f64, f64)>> {
    let (pos, neg) = check_scored(y_true, y_score)?;
    let mut order: Vec<usize> = (0..y_score.len()).collect();
    order.sort_by(|&a, &b| y_score[b].total_cmp(&y_score[a]));
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    for (i, &k) in order.iter().enumerate() {
        if y_true[k] == 1 {
            tp += 1;
        } else {
            fp += 1;
        }
        let last_of_group = i + 1 == order.len() || y_score[order[i + 1]] != y_score[k];
        if last_of_group {
            points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
        }
    }
    Ok(points)
}
