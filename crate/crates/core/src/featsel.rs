//! Impurity-based feature importance and recursive feature elimination
//! with cross-validated scoring.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{stratified_folds, stratified_kfold_cv, MeanStd};
use crate::matrix::FeatureMatrix;
use crate::models::{train_random_forest, ForestConfig, RandomForest, TrainedModel};

/// Mean decrease in impurity per feature, summing to 1 unless no tree split.
pub fn impurity_importance(forest: &RandomForest) -> Result<Vec<f64>> {
    forest.feature_importances()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RfecvConfig {
    pub folds: usize,
    pub seed: u64,
    /// Forest used both for scoring and for ranking; its seed is replaced by `seed`.
    pub forest: ForestConfig,
}

impl Default for RfecvConfig {
    fn default() -> Self {
        RfecvConfig { folds: 10, seed: 0, forest: ForestConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub n_features: usize,
    pub cv_accuracy: MeanStd,
    pub features: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    /// Chosen columns in their original order.
    pub selected_features: Vec<String>,
    /// One point per feature count, ascending from 1.
    pub cv_score_curve: Vec<CurvePoint>,
    pub best_count: usize,
    /// All features, most important first (reverse elimination order).
    pub ranking: Vec<String>,
    /// Importances of a forest fitted on every feature.
    pub importances: Vec<(String, f64)>,
}

/// Starting from all features, repeatedly scores the current set by
/// stratified CV accuracy of a forest, then fits the forest on all rows and
/// drops the least important feature. The best count maximizes the CV
/// score, ties going to fewer features.
pub fn rfecv_select(m: &FeatureMatrix, cfg: &RfecvConfig) -> Result<SelectionResult> {
    let p = m.n_cols();
    if p < 2 {
        return Err(Error::Selection(format!("need at least 2 features, got {p}")));
    }
    if cfg.folds < 2 {
        return Err(Error::Selection(format!("need at least 2 folds, got {}", cfg.folds)));
    }
    stratified_folds(m.labels(), cfg.folds, cfg.seed).map_err(|e| Error::Selection(e.to_string()))?;
    let forest_cfg = ForestConfig { seed: cfg.seed, ..cfg.forest };

    let mut current: Vec<usize> = (0..p).collect();
    let mut eliminated = Vec::with_capacity(p);
    let mut curve = Vec::with_capacity(p);
    let mut importances = Vec::new();
    loop {
        let sub = m.select_columns(&current);
        let cv = stratified_kfold_cv(&sub, cfg.folds, cfg.seed, |train| {
            Ok(TrainedModel::Rf(train_random_forest(train, &forest_cfg)?))
        })
        .map_err(|e| Error::Selection(e.to_string()))?;
        curve.push(CurvePoint {
            n_features: current.len(),
            cv_accuracy: cv.accuracy,
            features: sub.column_names().to_vec(),
        });
        if current.len() == 1 {
            eliminated.push(current[0]);
            break;
        }
        let imp = train_random_forest(&sub, &forest_cfg)?.feature_importances()?;
        if importances.is_empty() {
            importances = sub.column_names().iter().cloned().zip(imp.iter().copied()).collect();
        }
        let worst = (0..imp.len()).min_by(|&a, &b| imp[a].total_cmp(&imp[b])).expect("non-empty");
        eliminated.push(current.remove(worst));
    }
    curve.reverse();

    let mut best = &curve[0];
    for point in &curve[1..] {
        if point.cv_accuracy.mean > best.cv_accuracy.mean {
            best = point;
        }
    }
    let best_count = best.n_features;
    let ranking: Vec<String> = eliminated.iter().rev().map(|&j| m.column_names()[j].clone()).collect();
    let keep: Vec<&String> = ranking.iter().take(best_count).collect();
    let selected_features = m.column_names().iter().filter(|c| keep.contains(c)).cloned().collect();
    Ok(SelectionResult { selected_features, cv_score_curve: curve, best_count, ranking, importances })
}

/// `n_features,cv_accuracy_mean,cv_accuracy_std` rows.
pub fn curve_to_delimited(result: &SelectionResult, delimiter: char) -> String {
    let d = delimiter;
    let mut out = format!("n_features{d}cv_accuracy_mean{d}cv_accuracy_std\n");
    for p in &result.cv_score_curve {
        out += &format!("{}{d}{}{d}{}\n", p.n_features, p.cv_accuracy.mean, p.cv_accuracy.std);
    }
    out
}

/// `feature,importance` rows, most important first.
pub fn importances_to_delimited(importances: &[(String, f64)], delimiter: char) -> String {
    let mut sorted = importances.to_vec();
    sorted.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut out = format!("feature{delimiter}importance\n");
    for (name, v) in sorted {
        out += &format!("{name}{delimiter}{v}\n");
    }
    out
}
