//! The training pipeline shared by DPMT and the reproduction harness.
//!
//! Order: preprocess → optional RFECV on the cleaned data → stratified
//! holdout split → min-max fit on train → optional SMOTE on train → grid
//! search by CV accuracy → final fit → holdout evaluation. Each stage hands
//! its artifact bytes to a [`StageSink`].

use std::fmt;

use dmp_core::eval::{evaluate_model, grid_search, timed_run, EvaluationReport, GridSearchResult, HyperGrid};
use dmp_core::featsel::{rfecv_select, RfecvConfig, SelectionResult};
use dmp_core::models::{Algorithm, ForestConfig};
use dmp_core::preprocess::{fit_normalizer, smote_oversample, stratified_holdout_split, SmoteConfig};
use dmp_core::{FeatureMatrix, ModelArtifact};
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::data::PreparedData;
use crate::error::{OrchestratorError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Extract,
    Preprocess,
    FeatureSelection,
    Split,
    Normalize,
    Balance,
    GridSearch,
    Fit,
    Evaluate,
    Deploy,
    Failed,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Extract => "extract",
            Stage::Preprocess => "preprocess",
            Stage::FeatureSelection => "feature_selection",
            Stage::Split => "split",
            Stage::Normalize => "normalize",
            Stage::Balance => "balance",
            Stage::GridSearch => "grid_search",
            Stage::Fit => "fit",
            Stage::Evaluate => "evaluate",
            Stage::Deploy => "deploy",
            Stage::Failed => "failed",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Receives each completed stage's artifact.
pub trait StageSink {
    fn record(&mut self, stage: Stage, artifact: &[u8]) -> Result<()>;
}

/// Discards stage artifacts.
pub struct NoSink;

impl StageSink for NoSink {
    fn record(&mut self, _: Stage, _: &[u8]) -> Result<()> {
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineOptions {
    pub algorithm: Algorithm,
    pub feature_selection: bool,
    pub balancing: bool,
    pub seed: u64,
    pub train_fraction: f64,
    pub cv_folds: usize,
    pub smote_k: usize,
    pub rfecv_folds: usize,
    pub rfecv_trees: usize,
    pub grid: HyperGrid,
}

impl PipelineOptions {
    pub fn from_config(cfg: &Config, algorithm: Algorithm, feature_selection: bool, balancing: bool, seed: u64) -> Self {
        let e = &cfg.experiment;
        PipelineOptions {
            algorithm,
            feature_selection,
            balancing,
            seed,
            train_fraction: e.train_fraction,
            cv_folds: e.cv_folds,
            smote_k: e.smote_k,
            rfecv_folds: e.rfecv_folds,
            rfecv_trees: e.rfecv_trees,
            grid: cfg.effective_grid(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSummary {
    pub train_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub artifact: ModelArtifact,
    pub report: EvaluationReport,
    pub selection: Option<SelectionResult>,
    /// `None` when the grid has a single point and CV was skipped.
    pub grid: Option<GridSearchResult>,
    /// Matrix the final model was fitted on.
    pub train: FeatureMatrix,
    pub test: FeatureMatrix,
}

fn stage_err(stage: Stage) -> impl FnOnce(dmp_core::Error) -> OrchestratorError {
    move |source| OrchestratorError::Train { stage: stage.name().to_string(), source }
}

fn json<T: Serialize>(v: &T) -> Vec<u8> {
    serde_json::to_vec(v).expect("stage artifact serializes")
}

fn matrix_bytes(m: &FeatureMatrix) -> Vec<u8> {
    m.to_delimited(b',', "label").into_bytes()
}

/// Runs every stage for one seed. The first failing stage aborts the run.
pub fn run_pipeline(data: &PreparedData, opts: &PipelineOptions, sink: &mut dyn StageSink) -> Result<PipelineOutcome> {
    sink.record(Stage::Extract, data.raw.to_csv_string().as_bytes())?;
    sink.record(Stage::Preprocess, &matrix_bytes(&data.matrix))?;

    let (matrix, selection) = if opts.feature_selection {
        let cfg = RfecvConfig {
            folds: opts.rfecv_folds,
            seed: opts.seed,
            forest: ForestConfig { n_estimators: opts.rfecv_trees, ..ForestConfig::default() },
        };
        let sel = rfecv_select(&data.matrix, &cfg).map_err(stage_err(Stage::FeatureSelection))?;
        sink.record(Stage::FeatureSelection, &json(&sel))?;
        let m = data.matrix.select_named(&sel.selected_features).map_err(stage_err(Stage::FeatureSelection))?;
        (m, Some(sel))
    } else {
        (data.matrix.clone(), None)
    };

    let split = stratified_holdout_split(&matrix, opts.train_fraction, opts.seed).map_err(stage_err(Stage::Split))?;
    sink.record(Stage::Split, &json(&SplitSummary { train_idx: split.train_idx.clone(), test_idx: split.test_idx.clone() }))?;

    let normalizer = fit_normalizer(&split.train).map_err(stage_err(Stage::Normalize))?;
    let mut train = normalizer.apply(&split.train).map_err(stage_err(Stage::Normalize))?;
    let test = normalizer.apply(&split.test).map_err(stage_err(Stage::Normalize))?;
    sink.record(Stage::Normalize, &json(&normalizer))?;

    if opts.balancing {
        train = smote_oversample(&train, &SmoteConfig { k: opts.smote_k, seed: opts.seed }).map_err(stage_err(Stage::Balance))?;
        sink.record(Stage::Balance, &matrix_bytes(&train))?;
    }

    let points = opts.grid.points(opts.algorithm, opts.seed);
    let (spec, grid) = match points.as_slice() {
        [] => return Err(stage_err(Stage::GridSearch)(dmp_core::Error::Config("grid has no points".into()))),
        [only] => (only.with_seed(opts.seed), None),
        _ => {
            let g = grid_search(&train, &points, opts.cv_folds, opts.seed).map_err(stage_err(Stage::GridSearch))?;
            sink.record(Stage::GridSearch, &json(&g))?;
            (g.best_spec().with_seed(opts.seed), Some(g))
        }
    };

    let (model, secs) = timed_run(|| spec.train(&train));
    let model = model.map_err(stage_err(Stage::Fit))?;
    let artifact = ModelArtifact::new(
        data.clean.schema.clone(),
        data.encoder.clone(),
        matrix.column_names().to_vec(),
        normalizer,
        spec,
        model,
    )
    .map_err(stage_err(Stage::Fit))?;
    sink.record(Stage::Fit, artifact.to_json().as_bytes())?;

    let report = evaluate_model(&artifact.model, &test, secs, spec.describe()).map_err(stage_err(Stage::Evaluate))?;
    sink.record(Stage::Evaluate, &json(&report))?;

    Ok(PipelineOutcome { artifact, report, selection, grid, train, test })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::prepare;
    use dmp_core::eval::RfGrid;

    struct Collect(Vec<Stage>);

    impl StageSink for Collect {
        fn record(&mut self, stage: Stage, artifact: &[u8]) -> Result<()> {
            assert!(!artifact.is_empty());
            self.0.push(stage);
            Ok(())
        }
    }

    fn small_config() -> Config {
        let mut cfg = Config::default();
        cfg.cohort.n = 600;
        cfg.experiment.cv_folds = 3;
        cfg.experiment.rfecv_folds = 3;
        cfg.experiment.rfecv_trees = 10;
        cfg.grid.rf = RfGrid { n_estimators: vec![5, 10], ..cfg.grid.rf };
        cfg.grid.rf.max_depth.truncate(1);
        cfg.grid.rf.max_features.truncate(1);
        cfg.grid.rf.criterion.truncate(1);
        cfg
    }

    #[test]
    fn stages_in_order() {
        let cfg = small_config();
        let data = prepare(&cfg, "mimic").unwrap();
        let mut sink = Collect(Vec::new());
        let opts = PipelineOptions::from_config(&cfg, Algorithm::Rf, true, true, 1);
        let out = run_pipeline(&data, &opts, &mut sink).unwrap();
        use Stage::*;
        assert_eq!(sink.0, vec![Extract, Preprocess, FeatureSelection, Split, Normalize, Balance, GridSearch, Fit, Evaluate]);
        let (p, n) = out.train.class_counts();
        assert_eq!(p, n);
        assert_eq!(out.artifact.selected_features, out.selection.unwrap().selected_features);
    }

    #[test]
    fn single_point_grid_skips_search() {
        let cfg = small_config();
        let data = prepare(&cfg, "mimic").unwrap();
        let mut sink = Collect(Vec::new());
        let opts = PipelineOptions::from_config(&cfg, Algorithm::Lr, false, false, 0);
        let opts = PipelineOptions { grid: HyperGrid { lr: dmp_core::eval::LrGrid { c: vec![1.0], max_iter: 100 }, ..opts.grid }, ..opts };
        let out = run_pipeline(&data, &opts, &mut sink).unwrap();
        assert!(out.grid.is_none());
        assert!(!sink.0.contains(&Stage::GridSearch));
    }
}
