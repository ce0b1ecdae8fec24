//! Level-0 learners, the random-forest meta learner, and stacking.

mod forest;
mod gbt;
mod knn;
mod logistic;
mod mlp;
mod naive_bayes;
mod stacking;
mod svm;

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, ArrayView2};
use serde::{Deserialize, Serialize};

pub use forest::{bootstrap_sample, fit_cart, tree_stream, CartNode, ClassificationTree, ForestHyper, RandomForest};
pub use gbt::{GbtHyper, GradientBoostedTrees, RegressionTree, TreeNode};
pub use knn::Knn;
pub use logistic::{logistic_loss_and_grad, LogisticRegression};
pub use mlp::{mlp_loss_and_grad, Mlp, MlpHyper, MlpParams};
pub use naive_bayes::{GaussianNb, VARIANCE_FLOOR};
pub use stacking::{
    stacking_predict, train_stacking, train_stacking_with, MetaProtocol, StackingConfig, StackingModel,
    StackingOutput,
};
pub use svm::{LinearSvm, SvmHyper};

use crate::error::{Error, Result};
use crate::graph_net::relative_error;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    Knn,
    GaussianNb,
    LogisticRegression,
    GradientBoostedTrees,
    Mlp,
    LinearSvm,
    RandomForest,
}

impl ModelKind {
    /// The six level-0 learners in meta-feature column order.
    pub const BASE: [ModelKind; 6] = [
        ModelKind::Knn,
        ModelKind::GaussianNb,
        ModelKind::LogisticRegression,
        ModelKind::GradientBoostedTrees,
        ModelKind::Mlp,
        ModelKind::LinearSvm,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Knn => "knn",
            ModelKind::GaussianNb => "gaussian_nb",
            ModelKind::LogisticRegression => "logistic_regression",
            ModelKind::GradientBoostedTrees => "gradient_boosted_trees",
            ModelKind::Mlp => "mlp",
            ModelKind::LinearSvm => "linear_svm",
            ModelKind::RandomForest => "random_forest",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::BASE
            .iter()
            .chain(&[ModelKind::RandomForest])
            .copied()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown model kind `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelHyper {
    pub knn_k: usize,
    pub nb_var_floor: f64,
    pub lr_lambda: f64,
    pub lr_max_epochs: usize,
    pub lr_tol: f64,
    pub gbt: GbtHyper,
    pub mlp: MlpHyper,
    pub svm: SvmHyper,
    pub forest: ForestHyper,
}

impl Default for ModelHyper {
    fn default() -> Self {
        ModelHyper {
            knn_k: 5,
            nb_var_floor: VARIANCE_FLOOR,
            lr_lambda: 1e-4,
            lr_max_epochs: 300,
            lr_tol: 1e-6,
            gbt: GbtHyper::default(),
            mlp: MlpHyper::default(),
            svm: SvmHyper::default(),
            forest: ForestHyper::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum BaseModel {
    Knn(Knn),
    GaussianNb(GaussianNb),
    LogisticRegression(LogisticRegression),
    GradientBoostedTrees(GradientBoostedTrees),
    Mlp(Mlp),
    LinearSvm(LinearSvm),
    RandomForest(RandomForest),
    /// Fixed-output stand-in used to probe the meta layer.
    #[doc(hidden)]
    Constant { probability: f64, inputs: usize },
}

impl BaseModel {
    pub fn kind(&self) -> Option<ModelKind> {
        Some(match self {
            BaseModel::Knn(_) => ModelKind::Knn,
            BaseModel::GaussianNb(_) => ModelKind::GaussianNb,
            BaseModel::LogisticRegression(_) => ModelKind::LogisticRegression,
            BaseModel::GradientBoostedTrees(_) => ModelKind::GradientBoostedTrees,
            BaseModel::Mlp(_) => ModelKind::Mlp,
            BaseModel::LinearSvm(_) => ModelKind::LinearSvm,
            BaseModel::RandomForest(_) => ModelKind::RandomForest,
            BaseModel::Constant { .. } => return None,
        })
    }

    pub fn input_dim(&self) -> usize {
        match self {
            BaseModel::Knn(m) => m.rows.ncols(),
            BaseModel::GaussianNb(m) => m.means[0].len(),
            BaseModel::LogisticRegression(m) => m.weights.len(),
            BaseModel::GradientBoostedTrees(_) | BaseModel::RandomForest(_) => usize::MAX,
            BaseModel::Mlp(m) => m.params.w1.nrows(),
            BaseModel::LinearSvm(m) => m.weights.len(),
            BaseModel::Constant { inputs, .. } => *inputs,
        }
    }

    /// Clickbait probability per row.
    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        let dim = self.input_dim();
        if dim != usize::MAX && dim != x.ncols() {
            return Err(Error::DimensionMismatch {
                what: "model input".into(),
                expected: dim,
                found: x.ncols(),
            });
        }
        check_finite(x)?;
        let p = match self {
            BaseModel::Knn(m) => m.predict_proba(x),
            BaseModel::GaussianNb(m) => m.predict_proba(x),
            BaseModel::LogisticRegression(m) => m.predict_proba(x),
            BaseModel::GradientBoostedTrees(m) => m.predict_proba(x),
            BaseModel::Mlp(m) => m.predict_proba(x),
            BaseModel::LinearSvm(m) => m.predict_proba(x),
            BaseModel::RandomForest(m) => m.predict_proba(x),
            BaseModel::Constant { probability, .. } => vec![*probability; x.nrows()],
        };
        Ok(p.into_iter().map(|v| v.clamp(0.0, 1.0)).collect())
    }
}

fn check_finite(x: ArrayView2<f64>) -> Result<()> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "model input".into(),
        });
    }
    Ok(())
}

pub(crate) fn check_training(x: ArrayView2<f64>, y: &[u8]) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::LengthMismatch {
            what: "rows vs labels".into(),
            left: x.nrows(),
            right: y.len(),
        });
    }
    if y.len() < 2 || !y.contains(&0) || !y.contains(&1) {
        return Err(Error::SingleClass);
    }
    if y.iter().any(|&v| v > 1) {
        return Err(Error::InvalidInput("labels must be 0 or 1".into()));
    }
    check_finite(x)
}

pub fn train_base(kind: ModelKind, x: ArrayView2<f64>, y: &[u8], hyper: &ModelHyper, seed: u64) -> Result<BaseModel> {
    check_training(x, y)?;
    let mut r = rng::stream(seed, &[]);
    Ok(match kind {
        ModelKind::Knn => BaseModel::Knn(Knn::fit(x, y, hyper.knn_k)),
        ModelKind::GaussianNb => BaseModel::GaussianNb(GaussianNb::fit(x, y, hyper.nb_var_floor)),
        ModelKind::LogisticRegression => BaseModel::LogisticRegression(LogisticRegression::fit(
            x,
            y,
            hyper.lr_lambda,
            hyper.lr_max_epochs,
            hyper.lr_tol,
        )),
        ModelKind::GradientBoostedTrees => BaseModel::GradientBoostedTrees(GradientBoostedTrees::fit(x, y, hyper.gbt)),
        ModelKind::Mlp => BaseModel::Mlp(Mlp::fit(x, y, hyper.mlp, &mut r)),
        ModelKind::LinearSvm => BaseModel::LinearSvm(LinearSvm::fit(x, y, hyper.svm, &mut r)),
        ModelKind::RandomForest => BaseModel::RandomForest(RandomForest::fit(x, y, hyper.forest, seed)),
    })
}

fn central_difference(f: impl Fn(f64) -> f64, at: f64, eps: f64) -> f64 {
    (f(at + eps) - f(at - eps)) / (2.0 * eps)
}

/// Max relative error of the logistic-regression gradient over every
/// coordinate (weights then bias).
pub fn logistic_grad_check(w: &[f64], b: f64, x: ArrayView2<f64>, y: &[u8], lambda: f64, eps: f64) -> f64 {
    let w0 = Array1::from(w.to_vec());
    let (_, gw, gb) = logistic_loss_and_grad(w0.view(), b, x, y, lambda);
    let mut worst = 0.0f64;
    for j in 0..=w.len() {
        let numeric = if j < w.len() {
            central_difference(
                |v| {
                    let mut t = w0.clone();
                    t[j] = v;
                    logistic_loss_and_grad(t.view(), b, x, y, lambda).0
                },
                w0[j],
                eps,
            )
        } else {
            central_difference(|v| logistic_loss_and_grad(w0.view(), v, x, y, lambda).0, b, eps)
        };
        let analytic = if j < w.len() { gw[j] } else { gb };
        if let Some(e) = relative_error(analytic, numeric) {
            worst = worst.max(e);
        }
    }
    worst
}

/// Max relative error of the MLP gradient over every coordinate.
pub fn mlp_grad_check(params: &MlpParams, x: ArrayView2<f64>, y: &[u8], l2: f64, eps: f64) -> f64 {
    let (_, g) = mlp_loss_and_grad(params, x, y, l2);
    let mut probe = params.clone();
    let mut worst = 0.0f64;
    for i in 0..params.len() {
        let orig = params.get(i);
        probe.set(i, orig + eps);
        let up = mlp_loss_and_grad(&probe, x, y, l2).0;
        probe.set(i, orig - eps);
        let down = mlp_loss_and_grad(&probe, x, y, l2).0;
        probe.set(i, orig);
        if let Some(e) = relative_error(g.get(i), (up - down) / (2.0 * eps)) {
            worst = worst.max(e);
        }
    }
    worst
}
