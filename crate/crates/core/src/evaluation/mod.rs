//! Cross-validation, metrics and corpus analyses.

mod analysis;
mod cv;
mod folds;
mod metrics;

pub use analysis::{category_correlation, clickbait_word_frequency};
pub use cv::{
    cross_validate, feature_sweep, fit_full, EvalReport, EvalSettings, FoldReport, HoldoutReport, SweepPoint,
    SweepReport,
};
pub use folds::{stratified_holdout, stratified_kfold, train_indices};
pub use metrics::{binary_metrics, roc_auc, roc_curve, Metrics};
