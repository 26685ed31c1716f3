use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::cv::{stratified_folds, stratified_kfold_cv, MeanStd};
use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;
use crate::models::{
    Algorithm, Criterion, ForestConfig, LogisticConfig, MaxFeatures, ModelSpec, PolyKernel, SvmConfig,
};

/// Tree depth limit; `"none"` in config files means unlimited.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MaxDepth(pub Option<usize>);

impl Serialize for MaxDepth {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.0 {
            Some(d) => s.serialize_u64(d as u64),
            None => s.serialize_str("none"),
        }
    }
}

impl<'de> Deserialize<'de> for MaxDepth {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Depth(usize),
            Word(String),
        }
        match Raw::deserialize(d)? {
            Raw::Depth(v) => Ok(MaxDepth(Some(v))),
            Raw::Word(w) if w.eq_ignore_ascii_case("none") => Ok(MaxDepth(None)),
            Raw::Word(w) => Err(serde::de::Error::custom(format!("max_depth must be an integer or \"none\", got '{w}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RfGrid {
    pub n_estimators: Vec<usize>,
    pub criterion: Vec<Criterion>,
    pub max_features: Vec<MaxFeatures>,
    pub max_depth: Vec<MaxDepth>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LrGrid {
    pub c: Vec<f64>,
    #[serde(default = "default_lr_max_iter")]
    pub max_iter: usize,
}

fn default_lr_max_iter() -> usize {
    LogisticConfig::default().max_iter
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmGrid {
    pub c: Vec<f64>,
    pub degree: Vec<u32>,
    #[serde(default = "default_coef0")]
    pub coef0: f64,
}

fn default_coef0() -> f64 {
    PolyKernel::default().coef0
}

/// Candidate hyperparameter values per algorithm. Omitted axes keep their
/// defaults when deserialized.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HyperGrid {
    pub rf: RfGrid,
    pub lr: LrGrid,
    pub svm: SvmGrid,
}

impl Default for RfGrid {
    /// Tree counts 20–1000 (plus 50), both criteria, all/sqrt/log2 features,
    /// depths none/2/5/8.
    fn default() -> Self {
        RfGrid {
            n_estimators: vec![20, 40, 50, 60, 80, 100, 200, 300, 400, 500, 600, 700, 800, 900, 1000],
            criterion: vec![Criterion::Gini, Criterion::Entropy],
            max_features: vec![MaxFeatures::All, MaxFeatures::Sqrt, MaxFeatures::Log2],
            max_depth: vec![MaxDepth(None), MaxDepth(Some(2)), MaxDepth(Some(5)), MaxDepth(Some(8))],
        }
    }
}

impl Default for LrGrid {
    /// C = 2^-6 … 2^6 in steps of 4×.
    fn default() -> Self {
        LrGrid { c: (-3..=3).map(|e| 4f64.powi(e)).collect(), max_iter: default_lr_max_iter() }
    }
}

impl Default for SvmGrid {
    /// C from 0.001 to 10.
    fn default() -> Self {
        SvmGrid {
            c: vec![0.001, 0.01, 0.1, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0],
            degree: vec![PolyKernel::default().degree],
            coef0: default_coef0(),
        }
    }
}

impl HyperGrid {
    pub fn validate(&self) -> Result<()> {
        let empty = |name: &str, len: usize| {
            if len == 0 {
                Err(Error::Config(format!("grid axis '{name}' is empty")))
            } else {
                Ok(())
            }
        };
        empty("rf.n_estimators", self.rf.n_estimators.len())?;
        empty("rf.criterion", self.rf.criterion.len())?;
        empty("rf.max_features", self.rf.max_features.len())?;
        empty("rf.max_depth", self.rf.max_depth.len())?;
        empty("lr.c", self.lr.c.len())?;
        empty("svm.c", self.svm.c.len())?;
        empty("svm.degree", self.svm.degree.len())
    }

    /// Every grid point for `algorithm`, in declared order (last axis varies fastest).
    pub fn points(&self, algorithm: Algorithm, seed: u64) -> Vec<ModelSpec> {
        match algorithm {
            Algorithm::Rf => {
                let g = &self.rf;
                let mut out = Vec::new();
                for &n in &g.n_estimators {
                    for &criterion in &g.criterion {
                        for &max_features in &g.max_features {
                            for &MaxDepth(max_depth) in &g.max_depth {
                                out.push(ModelSpec::Rf(ForestConfig {
                                    n_estimators: n,
                                    criterion,
                                    max_features,
                                    max_depth,
                                    seed,
                                }));
                            }
                        }
                    }
                }
                out
            }
            Algorithm::Lr => self
                .lr
                .c
                .iter()
                .map(|&c| ModelSpec::Lr(LogisticConfig { c, max_iter: self.lr.max_iter, ..LogisticConfig::default() }))
                .collect(),
            Algorithm::Svm => self
                .svm
                .c
                .iter()
                .flat_map(|&c| {
                    self.svm.degree.iter().map(move |&degree| {
                        ModelSpec::Svm(SvmConfig {
                            c,
                            kernel: PolyKernel { degree, coef0: self.svm.coef0 },
                            ..SvmConfig::default()
                        })
                    })
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridEntry {
    pub spec: ModelSpec,
    pub params: String,
    /// Mean and spread of fold accuracy; `None` when training failed.
    pub cv_accuracy: Option<MeanStd>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub table: Vec<GridEntry>,
    pub best_index: usize,
}

impl GridSearchResult {
    pub fn best(&self) -> &GridEntry {
        &self.table[self.best_index]
    }

    pub fn best_spec(&self) -> ModelSpec {
        self.best().spec
    }

    pub fn best_score(&self) -> f64 {
        self.best().cv_accuracy.map_or(0.0, |s| s.mean)
    }
}

/// Scores every point by stratified `k`-fold mean accuracy on shared folds.
/// The best point is the first one, in `points` order, reaching the maximum.
/// Points that fail to train are kept in the table and skipped.
pub fn grid_search(m: &FeatureMatrix, points: &[ModelSpec], k: usize, seed: u64) -> Result<GridSearchResult> {
    if points.is_empty() {
        return Err(Error::Config("grid has no points".into()));
    }
    stratified_folds(m.labels(), k, seed)?;
    let table: Vec<GridEntry> = points
        .par_iter()
        .map(|spec| {
            let res = stratified_kfold_cv(m, k, seed, |train| spec.train(train));
            let (cv_accuracy, error) = match res {
                Ok(r) => (Some(r.accuracy), None),
                Err(e) => (None, Some(e.to_string())),
            };
            GridEntry { spec: *spec, params: spec.describe(), cv_accuracy, error }
        })
        .collect();
    let mut best: Option<(usize, f64)> = None;
    for (i, e) in table.iter().enumerate() {
        if let Some(s) = e.cv_accuracy {
            if best.is_none_or(|(_, b)| s.mean > b) {
                best = Some((i, s.mean));
            }
        }
    }
    let (best_index, _) = best.ok_or_else(|| Error::Config("every grid point failed to train".into()))?;
    Ok(GridSearchResult { table, best_index })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_shape() {
        let g = HyperGrid::default();
        g.validate().unwrap();
        assert_eq!(g.points(Algorithm::Rf, 0).len(), 15 * 2 * 3 * 4);
        assert_eq!(g.points(Algorithm::Lr, 0).len(), 7);
        assert_eq!(g.lr.c[0], 2f64.powi(-6));
        assert_eq!(g.lr.c[6], 64.0);
        assert_eq!(g.points(Algorithm::Svm, 0).len(), 13);
    }

    #[test]
    fn declared_order() {
        let g = HyperGrid::default();
        let pts = g.points(Algorithm::Rf, 9);
        assert_eq!(
            pts[0],
            ModelSpec::Rf(ForestConfig {
                n_estimators: 20,
                criterion: Criterion::Gini,
                max_features: MaxFeatures::All,
                max_depth: None,
                seed: 9
            })
        );
        match pts[1] {
            ModelSpec::Rf(c) => assert_eq!(c.max_depth, Some(2)),
            _ => unreachable!(),
        }
    }

    #[test]
    fn max_depth_serde() {
        #[derive(Serialize, Deserialize)]
        struct W {
            d: Vec<MaxDepth>,
        }
        let w: W = serde_json::from_str(r#"{"d":["none",5]}"#).unwrap();
        assert_eq!(w.d, vec![MaxDepth(None), MaxDepth(Some(5))]);
        assert_eq!(serde_json::to_string(&w).unwrap(), r#"{"d":["none",5]}"#);
        assert!(serde_json::from_str::<W>(r#"{"d":["deep"]}"#).is_err());
    }

    #[test]
    fn empty_axis_rejected() {
        let mut g = HyperGrid::default();
        g.svm.c.clear();
        assert!(g.validate().is_err());
    }
}
