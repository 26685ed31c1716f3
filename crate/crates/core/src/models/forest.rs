//! Bagged CART ensemble with hard voting.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{Criterion, DecisionTree, MaxFeatures, TreeConfig};
use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_estimators: usize,
    pub criterion: Criterion,
    pub max_features: MaxFeatures,
    pub max_depth: Option<usize>,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_estimators: 100,
            criterion: Criterion::Gini,
            max_features: MaxFeatures::Sqrt,
            max_depth: None,
            seed: 0,
        }
    }
}

impl ForestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_estimators == 0 {
            return Err(Error::Config("n_estimators must be at least 1".into()));
        }
        if self.max_depth == Some(0) {
            return Err(Error::Config("max_depth must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub config: ForestConfig,
    trees: Vec<DecisionTree>,
    n_features: usize,
}

/// Trains `cfg.n_estimators` trees, each on a bootstrap sample of `m.n_rows()`
/// draws. Tree `t` draws from its own ChaCha stream `t` under `cfg.seed`,
/// so the result does not depend on thread scheduling.
pub fn train_random_forest(m: &FeatureMatrix, cfg: &ForestConfig) -> Result<RandomForest> {
    cfg.validate()?;
    if m.n_rows() == 0 {
        return Err(Error::Domain("cannot train a forest on zero rows".into()));
    }
    let (unique, slot) = dedup_rows(m);
    let tree_cfg = TreeConfig {
        criterion: cfg.criterion,
        max_depth: cfg.max_depth,
        max_features: cfg.max_features,
        ..TreeConfig::default()
    };
    let n = m.n_rows();
    let trees = (0..cfg.n_estimators)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(t as u64);
            let mut weights = vec![0.0; unique.n_rows()];
            for _ in 0..n {
                weights[slot[rng.random_range(0..n)]] += 1.0;
            }
            DecisionTree::fit_weighted(&unique, &weights, &tree_cfg, &mut rng)
        })
        .collect();
    Ok(RandomForest { config: *cfg, trees, n_features: m.n_cols() })
}

/// Collapses identical (row, label) pairs. Returns the distinct rows and,
/// for each input row, its position among them.
fn dedup_rows(m: &FeatureMatrix) -> (FeatureMatrix, Vec<usize>) {
    let mut seen: HashMap<(Vec<u64>, bool), usize> = HashMap::new();
    let mut keep = Vec::new();
    let slot = (0..m.n_rows())
        .map(|i| {
            let key = (m.row(i).iter().map(|v| v.to_bits()).collect(), m.labels()[i]);
            *seen.entry(key).or_insert_with(|| {
                keep.push(i);
                keep.len() - 1
            })
        })
        .collect();
    (m.select_rows(&keep), slot)
}

impl RandomForest {
    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Fraction of trees voting positive.
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        if self.trees.is_empty() {
            return 0.5;
        }
        let votes = self.trees.iter().filter(|t| t.predict(x)).count();
        votes as f64 / self.trees.len() as f64
    }

    /// Positive when at least half the trees vote positive.
    pub fn predict(&self, x: &[f64]) -> bool {
        self.predict_proba(x) >= 0.5
    }

    /// Mean decrease in impurity: each tree's decreases normalized to sum 1,
    /// averaged over trees, then renormalized. All zeros when no tree split.
    pub fn feature_importances(&self) -> Result<Vec<f64>> {
        if self.trees.is_empty() {
            return Err(Error::State("forest has no trained trees".into()));
        }
        let mut acc = vec![0.0; self.n_features];
        for t in &self.trees {
            let d = t.impurity_decrease();
            let s: f64 = d.iter().sum();
            if s > 0.0 {
                for (a, v) in acc.iter_mut().zip(d) {
                    *a += v / s;
                }
            }
        }
        let s: f64 = acc.iter().sum();
        if s > 0.0 {
            acc.iter_mut().for_each(|a| *a /= s);
        }
        Ok(acc)
    }

    /// A forest with no trees, as produced by deserializing an empty artifact.
    pub fn untrained(config: ForestConfig, n_features: usize) -> RandomForest {
        RandomForest { config, trees: Vec::new(), n_features }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn separable() -> FeatureMatrix {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..30 {
            let a = (i % 6) as f64;
            let b = (i / 6) as f64;
            rows.push(vec![a, b]);
            labels.push(a + b > 4.0);
        }
        FeatureMatrix::from_rows(vec!["a".into(), "b".into()], &rows, labels).unwrap()
    }

    #[test]
    fn reproducible_per_seed() {
        let m = separable();
        let cfg = ForestConfig { n_estimators: 15, seed: 7, ..Default::default() };
        assert_eq!(train_random_forest(&m, &cfg).unwrap(), train_random_forest(&m, &cfg).unwrap());
        let other = ForestConfig { seed: 8, ..cfg };
        assert_ne!(train_random_forest(&m, &cfg).unwrap(), train_random_forest(&m, &other).unwrap());
    }

    #[test]
    fn single_class_is_constant() {
        let m = FeatureMatrix::from_rows(vec!["a".into()], &[vec![1.0], vec![2.0]], vec![true, true]).unwrap();
        let f = train_random_forest(&m, &ForestConfig { n_estimators: 3, ..Default::default() }).unwrap();
        assert_eq!(f.predict_proba(&[-10.0]), 1.0);
        assert_eq!(f.feature_importances().unwrap(), vec![0.0]);
    }

    #[test]
    fn importances_sum_to_one() {
        let f = train_random_forest(&separable(), &ForestConfig { n_estimators: 10, ..Default::default() }).unwrap();
        let imp = f.feature_importances().unwrap();
        assert!((imp.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(imp.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn vote_tie_is_positive() {
        let m = separable();
        let mut f = train_random_forest(&m, &ForestConfig { n_estimators: 2, ..Default::default() }).unwrap();
        let t = DecisionTree::fit(
            &FeatureMatrix::from_rows(vec!["a".into(), "b".into()], &[vec![0.0, 0.0]], vec![false]).unwrap(),
            &TreeConfig::default(),
            &mut ChaCha8Rng::seed_from_u64(0),
        );
        let u = DecisionTree::fit(
            &FeatureMatrix::from_rows(vec!["a".into(), "b".into()], &[vec![0.0, 0.0]], vec![true]).unwrap(),
            &TreeConfig::default(),
            &mut ChaCha8Rng::seed_from_u64(0),
        );
        f.trees = vec![t, u];
        assert_eq!(f.predict_proba(&[3.0, 3.0]), 0.5);
        assert!(f.predict(&[3.0, 3.0]));
    }

    #[test]
    fn rejects_bad_config() {
        let m = separable();
        assert!(train_random_forest(&m, &ForestConfig { n_estimators: 0, ..Default::default() }).is_err());
        assert!(train_random_forest(&m, &ForestConfig { max_depth: Some(0), ..Default::default() }).is_err());
        assert!(RandomForest::untrained(ForestConfig::default(), 2).feature_importances().is_err());
    }
}
