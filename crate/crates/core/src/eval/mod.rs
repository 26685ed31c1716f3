//! Classification metrics, ROC/AUC, stratified cross-validation, grid
//! search and timing.

mod cv;
mod grid;
mod metrics;
mod roc;
mod timing;

pub use cv::{stratified_folds, stratified_kfold_cv, CvResult, MeanStd};
pub use grid::{grid_search, GridEntry, GridSearchResult, HyperGrid, LrGrid, MaxDepth, RfGrid, SvmGrid};
pub use metrics::{classification_metrics, ConfusionMatrix, Metrics, UndefinedMetrics};
pub use roc::{roc_auc, roc_curve};
pub use timing::timed_run;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::matrix::FeatureMatrix;
use crate::models::TrainedModel;

/// Holdout performance of one trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub confusion: ConfusionMatrix,
    pub metrics: Metrics,
    /// `None` when the test set holds a single class.
    pub auc: Option<f64>,
    /// Seconds spent training and validating.
    pub train_time: f64,
    pub config_fingerprint: String,
}

/// Scores `model` on `test`.
pub fn evaluate_model(
    model: &TrainedModel,
    test: &FeatureMatrix,
    train_time: f64,
    config_fingerprint: impl Into<String>,
) -> Result<EvaluationReport> {
    let predicted = model.predict_matrix(test);
    let confusion = ConfusionMatrix::from_predictions(test.labels(), &predicted)?;
    let metrics = classification_metrics(&confusion)?;
    let auc = roc_auc(&model.score_matrix(test), test.labels()).ok();
    Ok(EvaluationReport { confusion, metrics, auc, train_time, config_fingerprint: config_fingerprint.into() })
}
