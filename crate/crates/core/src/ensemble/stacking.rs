use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_training, train_base, BaseModel, ModelHyper, ModelKind, RandomForest};
use crate::error::{Error, Result};
use crate::evaluation::{stratified_kfold, train_indices};
use crate::features::{anova_f, select_top_k, SelectionState, Standardizer};
use crate::rng::{self, tag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetaProtocol {
    /// Meta learner trained on out-of-fold base predictions.
    OutOfFold,
    /// Meta learner trained on in-sample predictions of bases fit on all rows.
    PaperLiteral,
}

impl fmt::Display for MetaProtocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetaProtocol::OutOfFold => "out_of_fold",
            MetaProtocol::PaperLiteral => "paper_literal",
        })
    }
}

impl FromStr for MetaProtocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "out_of_fold" => Ok(MetaProtocol::OutOfFold),
            "paper_literal" => Ok(MetaProtocol::PaperLiteral),
            _ => Err(Error::Config(format!("unknown meta protocol `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackingConfig {
    pub protocol: MetaProtocol,
    pub inner_folds: usize,
    /// Number of columns kept by ANOVA selection; `None` keeps all.
    pub select_k: Option<usize>,
    pub hyper: ModelHyper,
}

impl Default for StackingConfig {
    fn default() -> Self {
        StackingConfig {
            protocol: MetaProtocol::OutOfFold,
            inner_folds: 5,
            select_k: Some(825),
            hyper: ModelHyper::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackingModel {
    pub protocol: MetaProtocol,
    pub input_dim: usize,
    pub selection: SelectionState,
    pub standardizer: Standardizer,
    pub base_models: Vec<BaseModel>,
    pub meta_model: RandomForest,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StackingOutput {
    pub probability: Vec<f64>,
    pub label: Vec<u8>,
    /// `n × 6` clickbait probabilities, one column per base learner.
    pub base_probabilities: Array2<f64>,
}

fn base_matrix(models: &[BaseModel], x: ArrayView2<f64>) -> Result<Array2<f64>> {
    let cols = models
        .par_iter()
        .map(|m| m.predict_proba(x))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Array2::zeros((x.nrows(), models.len()));
    for (j, c) in cols.iter().enumerate() {
        out.column_mut(j).iter_mut().zip(c).for_each(|(o, &v)| *o = v);
    }
    Ok(out)
}

type BaseTrainer<'a> = dyn Fn(ModelKind, ArrayView2<f64>, &[u8], &ModelHyper, u64) -> Result<BaseModel> + Sync + 'a;

fn fit_bases(trainer: &BaseTrainer, x: ArrayView2<f64>, y: &[u8], hyper: &ModelHyper, seed: u64, slot: u64) -> Result<Vec<BaseModel>> {
    ModelKind::BASE
        .par_iter()
        .enumerate()
        .map(|(b, &kind)| trainer(kind, x, y, hyper, rng::derive_seed(seed, &[tag::BASE, slot, b as u64])))
        .collect()
}

pub fn train_stacking(x: ArrayView2<f64>, y: &[u8], config: &StackingConfig, seed: u64) -> Result<StackingModel> {
    train_stacking_with(x, y, config, seed, &train_base)
}

/// As [`train_stacking`], with a substitute for the level-0 trainer.
#[doc(hidden)]
pub fn train_stacking_with(
    x: ArrayView2<f64>,
    y: &[u8],
    config: &StackingConfig,
    seed: u64,
    trainer: &BaseTrainer,
) -> Result<StackingModel> {
    check_training(x, y)?;
    if y.len() < 20 {
        return Err(Error::InvalidInput(format!("stacking needs at least 20 rows, got {}", y.len())));
    }
    let scores = anova_f(&x.to_owned(), y)?;
    let k = config.select_k.unwrap_or(x.ncols());
    let selection = select_top_k(&scores, k)?;
    let xs = x.select(Axis(1), &selection.selected);
    let standardizer = Standardizer::fit(&xs);
    let z = standardizer.apply(&xs);

    let meta_x = match config.protocol {
        MetaProtocol::OutOfFold => {
            let folds = stratified_kfold(y, config.inner_folds, seed, &[tag::STACK_FOLDS])?;
            let parts = folds
                .par_iter()
                .enumerate()
                .map(|(f, test)| {
                    let train = train_indices(&folds, f);
                    let zt = z.select(Axis(0), &train);
                    let yt: Vec<u8> = train.iter().map(|&i| y[i]).collect();
                    let models = fit_bases(trainer, zt.view(), &yt, &config.hyper, seed, f as u64)?;
                    base_matrix(&models, z.select(Axis(0), test).view())
                })
                .collect::<Result<Vec<_>>>()?;
            let mut m = Array2::zeros((y.len(), ModelKind::BASE.len()));
            for (test, part) in folds.iter().zip(&parts) {
                for (r, &i) in test.iter().enumerate() {
                    m.row_mut(i).assign(&part.row(r));
                }
            }
            Some(m)
        }
        MetaProtocol::PaperLiteral => None,
    };
    let base_models = fit_bases(trainer, z.view(), y, &config.hyper, seed, config.inner_folds as u64)?;
    let meta_x = match meta_x {
        Some(m) => m,
        None => base_matrix(&base_models, z.view())?,
    };
    let meta_model = RandomForest::fit(meta_x.view(), y, config.hyper.forest, rng::derive_seed(seed, &[tag::META]));
    Ok(StackingModel {
        protocol: config.protocol,
        input_dim: x.ncols(),
        selection,
        standardizer,
        base_models,
        meta_model,
    })
}

/// Standardise → select → base probabilities → meta probability; label 1
/// iff probability ≥ 0.5.
pub fn stacking_predict(model: &StackingModel, x: ArrayView2<f64>) -> Result<StackingOutput> {
    if x.ncols() != model.input_dim {
        return Err(Error::DimensionMismatch {
            what: "stacking input".into(),
            expected: model.input_dim,
            found: x.ncols(),
        });
    }
    let z = model.standardizer.apply(&x.select(Axis(1), &model.selection.selected));
    let base_probabilities = base_matrix(&model.base_models, z.view())?;
    let probability = model.meta_model.predict_proba(base_probabilities.view());
    let label = probability.iter().map(|&p| u8::from(p >= 0.5)).collect();
    Ok(StackingOutput {
        probability,
        label,
        base_probabilities,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{ForestHyper, GbtHyper, MlpHyper};
    use rand::Rng;

    fn data(seed: u64, n: usize) -> (Array2<f64>, Vec<u8>) {
        let mut r = rng::stream(seed, &[3]);
        let y: Vec<u8> = (0..n).map(|i| u8::from(i % 5 < 3)).collect();
        let x = Array2::from_shape_fn((n, 8), |(i, j)| {
            let shift = if j < 3 && y[i] == 1 { 1.2 } else { 0.0 };
            shift + r.gen_range(-1.0..1.0)
        });
        (x, y)
    }

    fn quick() -> StackingConfig {
        StackingConfig {
            select_k: Some(6),
            hyper: ModelHyper {
                gbt: GbtHyper { rounds: 10, ..GbtHyper::default() },
                mlp: MlpHyper { epochs: 30, hidden: 8, ..MlpHyper::default() },
                forest: ForestHyper { trees: 25, ..ForestHyper::default() },
                ..ModelHyper::default()
            },
            ..StackingConfig::default()
        }
    }

    #[test]
    fn deterministic_and_round_trips() {
        let (x, y) = data(1, 60);
        let a = train_stacking(x.view(), &y, &quick(), 5).unwrap();
        let b = train_stacking(x.view(), &y, &quick(), 5).unwrap();
        assert_eq!(a, b);
        let text = serde_json::to_string(&a).unwrap();
        let back: StackingModel = serde_json::from_str(&text).unwrap();
        assert_eq!(
            stacking_predict(&back, x.view()).unwrap().probability,
            stacking_predict(&a, x.view()).unwrap().probability
        );
    }

    #[test]
    fn learns_planted_shift() {
        let (x, y) = data(2, 100);
        for protocol in [MetaProtocol::OutOfFold, MetaProtocol::PaperLiteral] {
            let cfg = StackingConfig { protocol, ..quick() };
            let m = train_stacking(x.view(), &y, &cfg, 9).unwrap();
            assert_eq!(m.base_models.len(), 6);
            let (xt, yt) = data(3, 100);
            let out = stacking_predict(&m, xt.view()).unwrap();
            let acc = out.label.iter().zip(&yt).filter(|(a, b)| a == b).count() as f64 / 100.0;
            assert!(acc > 0.8, "{protocol}: {acc}");
            assert_eq!(out.base_probabilities.ncols(), 6);
        }
    }

    #[test]
    fn constant_bases_predict_majority() {
        let (x, y) = data(4, 50);
        let constant = |_: ModelKind, x: ArrayView2<f64>, _: &[u8], _: &ModelHyper, _: u64| {
            Ok(BaseModel::Constant {
                probability: 0.5,
                inputs: x.ncols(),
            })
        };
        let m = train_stacking_with(x.view(), &y, &quick(), 1, &constant).unwrap();
        let out = stacking_predict(&m, x.view()).unwrap();
        // 60% positives: every bootstrap majority leaf votes 1 in most trees
        assert!(out.label.iter().all(|&l| l == 1));
        assert!(out.probability.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn threshold_is_inclusive() {
        let (x, y) = data(5, 40);
        let mut m = train_stacking(x.view(), &y, &quick(), 2).unwrap();
        m.meta_model = RandomForest {
            hyper: ForestHyper::default(),
            trees: (0..2)
                .map(|i| crate::ensemble::ClassificationTree {
                    nodes: vec![crate::ensemble::CartNode::Leaf { label: i }],
                })
                .collect(),
        };
        let out = stacking_predict(&m, x.view()).unwrap();
        assert!(out.probability.iter().all(|&p| p == 0.5));
        assert!(out.label.iter().all(|&l| l == 1));
    }
}
