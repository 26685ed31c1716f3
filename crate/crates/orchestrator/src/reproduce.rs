//! Experiment matrix: dataset × algorithm × feature selection × balancing,
//! run over several seeds with per-seed and mean metrics.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use dmp_core::eval::{ConfusionMatrix, EvaluationReport, HyperGrid, MeanStd};
use dmp_core::models::Algorithm;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::data::{prepare, PreparedData};
use crate::error::{OrchestratorError, Result};
use crate::pipeline::{run_pipeline, NoSink, PipelineOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub dataset: String,
    pub algorithm: Algorithm,
    pub feature_selection: bool,
    pub balancing: bool,
    pub seeds: Vec<u64>,
    pub grid: HyperGrid,
}

impl ExperimentSpec {
    /// Seeds and grid taken from the config.
    pub fn new(cfg: &Config, dataset: &str, algorithm: Algorithm, feature_selection: bool, balancing: bool) -> Self {
        ExperimentSpec {
            dataset: dataset.to_string(),
            algorithm,
            feature_selection,
            balancing,
            seeds: cfg.experiment.seeds.clone(),
            grid: cfg.effective_grid(),
        }
    }

    pub fn validate(&self, cfg: &Config) -> Result<()> {
        cfg.dataset_source(&self.dataset)?;
        if self.seeds.is_empty() {
            return Err(OrchestratorError::Config("experiment spec needs at least one seed".into()));
        }
        self.grid.validate().map_err(|e| OrchestratorError::Config(e.to_string()))
    }

    pub fn options(&self, cfg: &Config, seed: u64) -> PipelineOptions {
        PipelineOptions {
            grid: self.grid.clone(),
            ..PipelineOptions::from_config(cfg, self.algorithm, self.feature_selection, self.balancing, seed)
        }
    }

    pub fn label(&self) -> String {
        format!(
            "{} {} fs={} smote={}",
            self.dataset,
            self.algorithm.label(),
            if self.feature_selection { "on" } else { "off" },
            if self.balancing { "on" } else { "off" }
        )
    }

    /// Every combination for the given datasets and algorithms.
    pub fn matrix(cfg: &Config, datasets: &[&str], algorithms: &[Algorithm]) -> Vec<ExperimentSpec> {
        let mut out = Vec::new();
        for d in datasets {
            for &a in algorithms {
                for fs in [false, true] {
                    for bal in [false, true] {
                        out.push(ExperimentSpec::new(cfg, d, a, fs, bal));
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed: u64,
    pub report: EvaluationReport,
    pub selected_features: Option<Vec<String>>,
    /// Top-ranked feature when RFECV ran.
    pub top_feature: Option<String>,
    pub best_params: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanMetrics {
    pub accuracy: MeanStd,
    pub precision: MeanStd,
    pub recall: MeanStd,
    pub f_measure: MeanStd,
    /// Over seeds whose test split held both classes.
    pub auc: MeanStd,
    pub train_time: MeanStd,
    pub false_negatives: MeanStd,
    pub false_positives: MeanStd,
    /// Confusion matrices summed over seeds.
    pub confusion_total: ConfusionMatrix,
}

impl MeanMetrics {
    pub fn of(runs: &[SeedRun]) -> MeanMetrics {
        let col = |f: &dyn Fn(&EvaluationReport) -> f64| MeanStd::of(&runs.iter().map(|r| f(&r.report)).collect::<Vec<_>>());
        let aucs: Vec<f64> = runs.iter().filter_map(|r| r.report.auc).collect();
        let zero = ConfusionMatrix { tp: 0, tn: 0, fp: 0, fn_: 0 };
        MeanMetrics {
            accuracy: col(&|r| r.metrics.accuracy),
            precision: col(&|r| r.metrics.precision_pos),
            recall: col(&|r| r.metrics.recall_pos),
            f_measure: col(&|r| r.metrics.f_measure),
            auc: MeanStd::of(&aucs),
            train_time: col(&|r| r.train_time),
            false_negatives: col(&|r| r.confusion.fn_ as f64),
            false_positives: col(&|r| r.confusion.fp as f64),
            confusion_total: runs.iter().fold(zero, |acc, r| acc.add(&r.report.confusion)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecResult {
    pub spec: ExperimentSpec,
    pub runs: Vec<SeedRun>,
    pub mean: MeanMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedSpec {
    pub spec: ExperimentSpec,
    pub notice: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub results: Vec<SpecResult>,
    pub skipped: Vec<SkippedSpec>,
}

impl ReportBundle {
    pub fn is_empty(&self) -> bool {
        self.results.is_empty() && self.skipped.is_empty()
    }

    pub fn find(&self, dataset: &str, algorithm: Algorithm, fs: bool, balancing: bool) -> Option<&SpecResult> {
        self.results.iter().find(|r| {
            r.spec.dataset == dataset
                && r.spec.algorithm == algorithm
                && r.spec.feature_selection == fs
                && r.spec.balancing == balancing
        })
    }

    /// Mean-metric table, one row per spec.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<32} {:>6} {:>8} {:>8} {:>8} {:>8} {:>8} {:>7} {:>7} {:>9}",
            "experiment", "seeds", "acc", "prec", "recall", "f1", "auc", "FN", "FP", "train_s"
        );
        for r in &self.results {
            let m = &r.mean;
            let _ = writeln!(
                s,
                "{:<32} {:>6} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>7.1} {:>7.1} {:>9.4}",
                r.spec.label(),
                r.runs.len(),
                m.accuracy.mean,
                m.precision.mean,
                m.recall.mean,
                m.f_measure.mean,
                m.auc.mean,
                m.false_negatives.mean,
                m.false_positives.mean,
                m.train_time.mean
            );
        }
        for k in &self.skipped {
            let _ = writeln!(s, "skipped {}: {}", k.spec.label(), k.notice);
        }
        s
    }

    /// One JSON object per spec result, then one per skipped spec.
    pub fn to_json_lines(&self) -> String {
        let mut s = String::new();
        for r in &self.results {
            s.push_str(&serde_json::to_string(r).expect("result serializes"));
            s.push('\n');
        }
        for k in &self.skipped {
            s.push_str(&serde_json::to_string(k).expect("notice serializes"));
            s.push('\n');
        }
        s
    }
}

/// Runs every spec over its seeds. Specs whose dataset cannot be loaded are
/// skipped with a notice; training failures abort.
pub fn reproduce_experiment(specs: &[ExperimentSpec], cfg: &Config) -> Result<ReportBundle> {
    let mut bundle = ReportBundle::default();
    let mut cache: BTreeMap<String, std::result::Result<PreparedData, String>> = BTreeMap::new();
    for spec in specs {
        spec.validate(cfg)?;
        let data = cache.entry(spec.dataset.clone()).or_insert_with(|| match prepare(cfg, &spec.dataset) {
            Ok(d) => Ok(d),
            Err(e @ OrchestratorError::Load(_)) => Err(e.to_string()),
            Err(e) => Err(format!("unexpected: {e}")),
        });
        let data = match data {
            Ok(d) => d,
            Err(notice) => {
                bundle.skipped.push(SkippedSpec { spec: spec.clone(), notice: notice.clone() });
                continue;
            }
        };
        let mut runs = Vec::with_capacity(spec.seeds.len());
        for &seed in &spec.seeds {
            let out = run_pipeline(data, &spec.options(cfg, seed), &mut NoSink)?;
            runs.push(SeedRun {
                seed,
                top_feature: out.selection.as_ref().and_then(|s| s.ranking.first().cloned()),
                selected_features: out.selection.map(|s| s.selected_features),
                best_params: out.artifact.spec.describe(),
                report: out.report,
            });
        }
        let mean = MeanMetrics::of(&runs);
        bundle.results.push(SpecResult { spec: spec.clone(), runs, mean });
    }
    Ok(bundle)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_covers_all_flag_combinations() {
        let cfg = Config::default();
        let specs = ExperimentSpec::matrix(&cfg, &["pima", "mimic"], &Algorithm::ALL);
        assert_eq!(specs.len(), 2 * 3 * 4);
        assert!(specs.iter().all(|s| s.validate(&cfg).is_ok()));
    }

    #[test]
    fn missing_file_is_skipped() {
        let mut cfg = Config::default();
        cfg.datasets.insert("pima".into(), "/nonexistent/pima.csv".into());
        let spec = ExperimentSpec::new(&cfg, "pima", Algorithm::Lr, false, false);
        let b = reproduce_experiment(&[spec], &cfg).unwrap();
        assert!(b.results.is_empty());
        assert_eq!(b.skipped.len(), 1);
        assert!(b.skipped[0].notice.contains("not found"));
        assert!(b.to_table().contains("skipped"));
    }
}
