//! Feature extraction, preprocessing, classifiers, cross-validation and
//! evaluation for binary attack detection.

mod cv;
mod dataset;
mod eval;
mod features;
pub mod models;

pub use cv::{grid_search_cv, CvOutcome, CvScore};
pub use dataset::{
    pad_rows, preprocess, split, stratified_folds, Dataset, Preprocessor, RowTag, ATTACK, NORMAL,
};
pub use eval::{
    evaluate, pr_auc, pr_curve, roc_auc, roc_curve, trapezoid, ConfusionCounts, EvalReport, PrPoint,
    RocPoint, DEFAULT_THRESHOLD,
};
pub use features::{extract_features, FeatureKind};
pub use models::{predict_labels, predict_scores, train, Algorithm, ClassifierSpec, TrainedModel};

use crate::info::MetricError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MlError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("empty dataset: {0}")]
    EmptyDataset(String),
    #[error("training set contains a single class")]
    SingleClass,
    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("AUC is undefined when only one class is present")]
    UndefinedAuc,
    #[error(transparent)]
    Metric(#[from] MetricError),
}
