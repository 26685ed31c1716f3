use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{classification_metrics, ConfusionMatrix, Metrics};
use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;
use crate::models::TrainedModel;

/// Fold index for every row. Rows of each class are shuffled and dealt
/// round-robin; the negative class continues where the positive class
/// stopped so fold sizes differ by at most one.
pub fn stratified_folds(labels: &[bool], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::CrossValidation(format!("need at least 2 folds, got {k}")));
    }
    let pos = labels.iter().filter(|l| **l).count();
    let neg = labels.len() - pos;
    if pos < k || neg < k {
        return Err(Error::CrossValidation(format!(
            "each class needs at least {k} rows for {k}-fold CV (have {pos} positive, {neg} negative)"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold = vec![0; labels.len()];
    let mut offset = 0;
    for class in [true, false] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        for (p, &i) in idx.iter().enumerate() {
            fold[i] = (offset + p) % k;
        }
        offset = (offset + idx.len()) % k;
    }
    Ok(fold)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Population standard deviation.
    pub fn of(values: &[f64]) -> MeanStd {
        if values.is_empty() {
            return MeanStd { mean: 0.0, std: 0.0 };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        MeanStd { mean, std: var.sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub folds: Vec<ConfusionMatrix>,
    pub fold_metrics: Vec<Metrics>,
    pub accuracy: MeanStd,
    pub f_measure: MeanStd,
    pub recall_pos: MeanStd,
    pub precision_pos: MeanStd,
}

/// Trains on `k − 1` folds and tests on the remaining one, for every fold.
pub fn stratified_kfold_cv<F>(m: &FeatureMatrix, k: usize, seed: u64, trainer: F) -> Result<CvResult>
where
    F: Fn(&FeatureMatrix) -> Result<TrainedModel> + Sync,
{
    let fold = stratified_folds(m.labels(), k, seed)?;
    let confusions = (0..k)
        .into_par_iter()
        .map(|f| {
            let train_idx: Vec<usize> = (0..m.n_rows()).filter(|&i| fold[i] != f).collect();
            let test_idx: Vec<usize> = (0..m.n_rows()).filter(|&i| fold[i] == f).collect();
            let model = trainer(&m.select_rows(&train_idx))?;
            let test = m.select_rows(&test_idx);
            ConfusionMatrix::from_predictions(test.labels(), &model.predict_matrix(&test))
        })
        .collect::<Result<Vec<_>>>()?;
    let fold_metrics = confusions.iter().map(classification_metrics).collect::<Result<Vec<_>>>()?;
    let pick = |f: fn(&Metrics) -> f64| MeanStd::of(&fold_metrics.iter().map(f).collect::<Vec<_>>());
    Ok(CvResult {
        accuracy: pick(|m| m.accuracy),
        f_measure: pick(|m| m.f_measure),
        recall_pos: pick(|m| m.recall_pos),
        precision_pos: pick(|m| m.precision_pos),
        folds: confusions,
        fold_metrics,
    })
}
