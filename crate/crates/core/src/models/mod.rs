//! Binary classifiers: decision tree, random forest, logistic regression and
//! polynomial-kernel SVM.

pub mod forest;
pub mod logistic;
pub mod svm;
pub mod tree;

use serde::{Deserialize, Serialize};

pub use forest::{train_random_forest, ForestConfig, RandomForest};
pub use logistic::{train_logistic_regression, LogisticConfig, LogisticModel};
pub use svm::{train_svm, PolyKernel, SvmConfig, SvmModel};
pub use tree::{Criterion, DecisionTree, MaxFeatures, TreeConfig, TreeNode};

use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Rf,
    Lr,
    Svm,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Rf, Algorithm::Lr, Algorithm::Svm];

    pub fn label(self) -> &'static str {
        match self {
            Algorithm::Rf => "RF",
            Algorithm::Lr => "LR",
            Algorithm::Svm => "SVM",
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rf" | "random_forest" | "randomforest" => Ok(Algorithm::Rf),
            "lr" | "logistic" | "logistic_regression" => Ok(Algorithm::Lr),
            "svm" => Ok(Algorithm::Svm),
            _ => Err(Error::Config(format!("unknown algorithm '{s}'"))),
        }
    }
}

/// An algorithm together with its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "lowercase")]
pub enum ModelSpec {
    Rf(ForestConfig),
    Lr(LogisticConfig),
    Svm(SvmConfig),
}

impl ModelSpec {
    pub fn default_for(algorithm: Algorithm) -> ModelSpec {
        match algorithm {
            Algorithm::Rf => ModelSpec::Rf(ForestConfig::default()),
            Algorithm::Lr => ModelSpec::Lr(LogisticConfig::default()),
            Algorithm::Svm => ModelSpec::Svm(SvmConfig::default()),
        }
    }

    pub fn algorithm(&self) -> Algorithm {
        match self {
            ModelSpec::Rf(_) => Algorithm::Rf,
            ModelSpec::Lr(_) => Algorithm::Lr,
            ModelSpec::Svm(_) => Algorithm::Svm,
        }
    }

    /// Sets the seed of stochastic learners; deterministic ones are unchanged.
    pub fn with_seed(mut self, seed: u64) -> ModelSpec {
        if let ModelSpec::Rf(c) = &mut self {
            c.seed = seed;
        }
        self
    }

    pub fn train(&self, m: &FeatureMatrix) -> Result<TrainedModel> {
        Ok(match self {
            ModelSpec::Rf(c) => TrainedModel::Rf(train_random_forest(m, c)?),
            ModelSpec::Lr(c) => TrainedModel::Lr(train_logistic_regression(m, c)?),
            ModelSpec::Svm(c) => TrainedModel::Svm(train_svm(m, c)?),
        })
    }

    /// Short `key=value` summary of the tunable hyperparameters.
    pub fn describe(&self) -> String {
        match self {
            ModelSpec::Rf(c) => format!(
                "n_estimators={} criterion={} max_features={} max_depth={}",
                c.n_estimators,
                c.criterion,
                c.max_features,
                c.max_depth.map_or("none".to_string(), |d| d.to_string())
            ),
            ModelSpec::Lr(c) => format!("C={} max_iter={}", c.c, c.max_iter),
            ModelSpec::Svm(c) => format!("C={} degree={} coef0={}", c.c, c.kernel.degree, c.kernel.coef0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "lowercase")]
pub enum TrainedModel {
    Rf(RandomForest),
    Lr(LogisticModel),
    Svm(SvmModel),
}

impl TrainedModel {
    pub fn algorithm(&self) -> Algorithm {
        match self {
            TrainedModel::Rf(_) => Algorithm::Rf,
            TrainedModel::Lr(_) => Algorithm::Lr,
            TrainedModel::Svm(_) => Algorithm::Svm,
        }
    }

    /// Real-valued score, larger meaning more likely positive: vote share,
    /// probability or margin.
    pub fn score(&self, x: &[f64]) -> f64 {
        match self {
            TrainedModel::Rf(f) => f.predict_proba(x),
            TrainedModel::Lr(l) => l.predict_proba(x),
            TrainedModel::Svm(s) => s.decision_value(x),
        }
    }

    /// Positive-class probability where the model defines one.
    pub fn probability(&self, x: &[f64]) -> Option<f64> {
        match self {
            TrainedModel::Rf(f) => Some(f.predict_proba(x)),
            TrainedModel::Lr(l) => Some(l.predict_proba(x)),
            TrainedModel::Svm(_) => None,
        }
    }

    pub fn predict(&self, x: &[f64]) -> bool {
        match self {
            TrainedModel::Rf(f) => f.predict(x),
            TrainedModel::Lr(l) => l.predict(x),
            TrainedModel::Svm(s) => s.predict(x),
        }
    }

    pub fn predict_matrix(&self, m: &FeatureMatrix) -> Vec<bool> {
        m.rows().map(|r| self.predict(r)).collect()
    }

    pub fn score_matrix(&self, m: &FeatureMatrix) -> Vec<f64> {
        m.rows().map(|r| self.score(r)).collect()
    }

    /// False when an iterative solver stopped on its iteration budget.
    pub fn converged(&self) -> bool {
        match self {
            TrainedModel::Rf(_) => true,
            TrainedModel::Lr(l) => l.converged,
            TrainedModel::Svm(s) => s.converged,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_round_trips_through_json() {
        for a in Algorithm::ALL {
            let s = ModelSpec::default_for(a).with_seed(3);
            let back: ModelSpec = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
            assert_eq!(back, s);
            assert_eq!(back.algorithm(), a);
        }
    }

    #[test]
    fn algorithm_names() {
        assert_eq!("RF".parse::<Algorithm>().unwrap(), Algorithm::Rf);
        assert_eq!("logistic".parse::<Algorithm>().unwrap(), Algorithm::Lr);
        assert!("knn".parse::<Algorithm>().is_err());
    }

    #[test]
    fn all_models_score_and_predict() {
        let m = FeatureMatrix::from_rows(
            vec!["x".into()],
            &[vec![0.0], vec![0.1], vec![0.2], vec![0.8], vec![0.9], vec![1.0]],
            vec![false, false, false, true, true, true],
        )
        .unwrap();
        for a in Algorithm::ALL {
            let t = ModelSpec::default_for(a).train(&m).unwrap();
            assert_eq!(t.algorithm(), a);
            assert_eq!(t.predict_matrix(&m), m.labels());
            assert!(t.score(&[1.0]) > t.score(&[0.0]));
        }
    }
}
