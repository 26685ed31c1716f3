use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn from_predictions(truth: &[bool], predicted: &[bool]) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::Domain(format!(
                "{} labels but {} predictions",
                truth.len(),
                predicted.len()
            )));
        }
        let mut cm = ConfusionMatrix::default();
        for (&t, &p) in truth.iter().zip(predicted) {
            match (t, p) {
                (true, true) => cm.tp += 1,
                (false, false) => cm.tn += 1,
                (false, true) => cm.fp += 1,
                (true, false) => cm.fn_ += 1,
            }
        }
        Ok(cm)
    }

    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn add(&self, other: &ConfusionMatrix) -> ConfusionMatrix {
        ConfusionMatrix {
            tp: self.tp + other.tp,
            tn: self.tn + other.tn,
            fp: self.fp + other.fp,
            fn_: self.fn_ + other.fn_,
        }
    }
}

/// Metrics whose denominator was zero; each such metric is reported as 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct UndefinedMetrics {
    pub precision_pos: bool,
    pub precision_neg: bool,
    pub recall_pos: bool,
    pub recall_neg: bool,
    pub f_measure: bool,
}

impl UndefinedMetrics {
    pub fn any(&self) -> bool {
        self.precision_pos || self.precision_neg || self.recall_pos || self.recall_neg || self.f_measure
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision_pos: f64,
    pub precision_neg: f64,
    pub recall_pos: f64,
    pub recall_neg: f64,
    /// F-measure of the positive class.
    pub f_measure: f64,
    pub undefined: UndefinedMetrics,
}

fn ratio(num: usize, den: usize, flag: &mut bool) -> f64 {
    if den == 0 {
        *flag = true;
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn classification_metrics(cm: &ConfusionMatrix) -> Result<Metrics> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::Domain("confusion matrix is empty".into()));
    }
    let mut u = UndefinedMetrics::default();
    let precision_pos = ratio(cm.tp, cm.tp + cm.fp, &mut u.precision_pos);
    let precision_neg = ratio(cm.tn, cm.tn + cm.fn_, &mut u.precision_neg);
    let recall_pos = ratio(cm.tp, cm.tp + cm.fn_, &mut u.recall_pos);
    let recall_neg = ratio(cm.tn, cm.tn + cm.fp, &mut u.recall_neg);
    let f_measure = if precision_pos + recall_pos > 0.0 {
        2.0 * precision_pos * recall_pos / (precision_pos + recall_pos)
    } else {
        u.f_measure = true;
        0.0
    };
    Ok(Metrics {
        accuracy: (cm.tp + cm.tn) as f64 / total as f64,
        precision_pos,
        precision_neg,
        recall_pos,
        recall_neg,
        f_measure,
        undefined: u,
    })
}
