use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::folds::{stratified_holdout, stratified_kfold, train_indices};
use super::metrics::{binary_metrics, roc_auc, roc_curve, Metrics};
use crate::ensemble::{ModelKind, StackingOutput};
use crate::error::{Error, Result};
use crate::pipeline::{fit_model_with_k, predict_model, ClickbaitModel, PipelineSettings, PreparedCorpus};
use crate::rng::{self, tag};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalSettings {
    pub folds: usize,
    /// Fraction held out before cross-validation, if any.
    pub holdout: Option<f64>,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings {
            folds: 10,
            holdout: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub stacking: Metrics,
    /// Level-0 learners scored on the same fold (times are not split out).
    pub learners: BTreeMap<String, Metrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoldoutReport {
    pub n_train: usize,
    pub n_test: usize,
    pub stacking: Metrics,
    pub learners: BTreeMap<String, Metrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub seed: u64,
    pub config: serde_json::Value,
    pub folds: Vec<FoldReport>,
    pub mean: Metrics,
    pub learner_means: BTreeMap<String, Metrics>,
    /// Pooled out-of-fold stacking ROC curve.
    pub roc_points: Vec<(f64, f64)>,
    pub holdout: Option<HoldoutReport>,
}

impl EvalReport {
    pub fn best_base_auc(&self) -> f64 {
        self.learner_means.values().map(|m| m.auc).fold(f64::NEG_INFINITY, f64::max)
    }
}

fn score(y: &[u8], p: &[f64]) -> Result<Metrics> {
    let mut m = binary_metrics(y, p, 0.5)?;
    m.auc = roc_auc(y, p)?;
    Ok(m)
}

fn score_output(y: &[u8], out: &StackingOutput) -> Result<(Metrics, BTreeMap<String, Metrics>)> {
    let stacking = score(y, &out.probability)?;
    let mut learners = BTreeMap::new();
    for (j, kind) in ModelKind::BASE.iter().enumerate() {
        let col = out.base_probabilities.column(j).to_vec();
        learners.insert(kind.to_string(), score(y, &col)?);
    }
    Ok((stacking, learners))
}

struct FoldRun {
    per_k: Vec<(Metrics, BTreeMap<String, Metrics>, Vec<f64>)>,
    test: Vec<usize>,
    n_train: usize,
}

fn run_fold(
    corpus: &PreparedCorpus,
    train: &[usize],
    test: &[usize],
    settings: &PipelineSettings,
    seed: u64,
    ks: &[Option<usize>],
) -> Result<FoldRun> {
    let start = Instant::now();
    let models = fit_model_with_k(corpus, train, settings, seed, ks)?;
    let fit_time = start.elapsed().as_secs_f64() / ks.len() as f64;
    let y: Vec<u8> = test.iter().map(|&r| corpus.videos[r].label).collect();
    let mut per_k = Vec::with_capacity(ks.len());
    for m in &models {
        let t = Instant::now();
        let out = predict_model(m, corpus, test)?;
        let score_time = t.elapsed().as_secs_f64();
        let (mut stacking, learners) = score_output(&y, &out)?;
        stacking.fit_time_s = fit_time;
        stacking.score_time_s = score_time;
        per_k.push((stacking, learners, out.probability));
    }
    Ok(FoldRun {
        per_k,
        test: test.to_vec(),
        n_train: train.len(),
    })
}

fn mean_learners(folds: &[&BTreeMap<String, Metrics>]) -> BTreeMap<String, Metrics> {
    let mut out = BTreeMap::new();
    if let Some(first) = folds.first() {
        for name in first.keys() {
            let rows: Vec<Metrics> = folds.iter().map(|f| f[name]).collect();
            out.insert(name.clone(), Metrics::mean(&rows));
        }
    }
    out
}

fn split_rows(corpus: &PreparedCorpus, eval: &EvalSettings, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    let labels = corpus.labels();
    match eval.holdout {
        Some(f) => stratified_holdout(&labels, f, seed, &[tag::HOLDOUT]),
        None => Ok(((0..labels.len()).collect(), Vec::new())),
    }
}

/// Run every fold for each selection size in `ks`.
fn cross_validate_many(
    corpus: &PreparedCorpus,
    settings: &PipelineSettings,
    eval: &EvalSettings,
    seed: u64,
    ks: &[Option<usize>],
    config: &serde_json::Value,
) -> Result<Vec<EvalReport>> {
    let (cv_rows, holdout_rows) = split_rows(corpus, eval, seed)?;
    let cv_labels: Vec<u8> = cv_rows.iter().map(|&r| corpus.videos[r].label).collect();
    let folds = stratified_kfold(&cv_labels, eval.folds, seed, &[tag::FOLDS])?;
    let runs = folds
        .par_iter()
        .enumerate()
        .map(|(f, test_local)| {
            let train: Vec<usize> = train_indices(&folds, f).into_iter().map(|i| cv_rows[i]).collect();
            let test: Vec<usize> = test_local.iter().map(|&i| cv_rows[i]).collect();
            run_fold(corpus, &train, &test, settings, rng::derive_seed(seed, &[tag::FOLDS, f as u64]), ks)
        })
        .collect::<Result<Vec<_>>>()?;

    let holdout = if holdout_rows.is_empty() {
        None
    } else {
        let models = fit_model_with_k(corpus, &cv_rows, settings, rng::derive_seed(seed, &[tag::HOLDOUT, 1]), ks)?;
        let y: Vec<u8> = holdout_rows.iter().map(|&r| corpus.videos[r].label).collect();
        Some(
            models
                .iter()
                .map(|m| {
                    let out = predict_model(m, corpus, &holdout_rows)?;
                    let (stacking, learners) = score_output(&y, &out)?;
                    Ok(HoldoutReport {
                        n_train: cv_rows.len(),
                        n_test: holdout_rows.len(),
                        stacking,
                        learners,
                    })
                })
                .collect::<Result<Vec<_>>>()?,
        )
    };

    let mut reports = Vec::with_capacity(ks.len());
    for ki in 0..ks.len() {
        let fold_reports: Vec<FoldReport> = runs
            .iter()
            .enumerate()
            .map(|(f, run)| FoldReport {
                fold: f,
                n_train: run.n_train,
                n_test: run.test.len(),
                stacking: run.per_k[ki].0,
                learners: run.per_k[ki].1.clone(),
            })
            .collect();
        let mut pooled_y = Vec::new();
        let mut pooled_p = Vec::new();
        for run in &runs {
            pooled_y.extend(run.test.iter().map(|&r| corpus.videos[r].label));
            pooled_p.extend_from_slice(&run.per_k[ki].2);
        }
        let stacking_rows: Vec<Metrics> = fold_reports.iter().map(|f| f.stacking).collect();
        let learner_rows: Vec<&BTreeMap<String, Metrics>> = fold_reports.iter().map(|f| &f.learners).collect();
        reports.push(EvalReport {
            seed,
            config: config.clone(),
            mean: Metrics::mean(&stacking_rows),
            learner_means: mean_learners(&learner_rows),
            roc_points: roc_curve(&pooled_y, &pooled_p)?,
            folds: fold_reports,
            holdout: holdout.as_ref().map(|h| h[ki].clone()),
        });
    }
    Ok(reports)
}

/// Stratified k-fold evaluation of the whole pipeline. Standardiser,
/// selection, graph net and stacking are fit on each fold's training rows.
pub fn cross_validate(
    corpus: &PreparedCorpus,
    settings: &PipelineSettings,
    eval: &EvalSettings,
    seed: u64,
    config: &serde_json::Value,
) -> Result<EvalReport> {
    cross_validate_many(corpus, settings, eval, seed, &[settings.effective_k()], config).map(|mut v| v.remove(0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub k: usize,
    pub mean: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub seed: u64,
    pub config: serde_json::Value,
    pub points: Vec<SweepPoint>,
}

impl SweepReport {
    /// k with the highest mean accuracy (smallest k on ties).
    pub fn best_k(&self) -> Option<usize> {
        self.points
            .iter()
            .fold(None::<&SweepPoint>, |best, p| match best {
                Some(b) if b.mean.accuracy >= p.mean.accuracy => Some(b),
                _ => Some(p),
            })
            .map(|p| p.k)
    }
}

/// Cross-validation at each selection size, on one shared fold assignment
/// with the graph net fitted once per fold.
pub fn feature_sweep(
    corpus: &PreparedCorpus,
    settings: &PipelineSettings,
    eval: &EvalSettings,
    ks: &[usize],
    seed: u64,
    config: &serde_json::Value,
) -> Result<SweepReport> {
    let width: usize = settings.groups.iter().map(|g| g.dim()).sum();
    for &k in ks {
        if k == 0 || k > width {
            return Err(Error::KOutOfRange { k, max: width });
        }
    }
    let points = if ks.is_empty() {
        Vec::new()
    } else {
        let opts: Vec<Option<usize>> = ks.iter().map(|&k| Some(k)).collect();
        cross_validate_many(corpus, settings, eval, seed, &opts, config)?
            .into_iter()
            .zip(ks)
            .map(|(r, &k)| SweepPoint { k, mean: r.mean })
            .collect()
    };
    Ok(SweepReport {
        seed,
        config: config.clone(),
        points,
    })
}

/// Fit on all rows (used by `train`).
pub fn fit_full(corpus: &PreparedCorpus, settings: &PipelineSettings, seed: u64) -> Result<ClickbaitModel> {
    let rows: Vec<usize> = (0..corpus.len()).collect();
    crate::pipeline::fit_model(corpus, &rows, settings, seed)
}
