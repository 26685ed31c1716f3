//! TOML configuration: dataset manifest, experiment knobs, grids, ledger.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use dmp_core::eval::HyperGrid;
use serde::{Deserialize, Serialize};

use crate::error::{OrchestratorError, Result};

/// Manifest value selecting the generated ICU-like cohort instead of files.
pub const SYNTHETIC: &str = "synthetic";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSettings {
    pub seeds: Vec<u64>,
    pub train_fraction: f64,
    pub cv_folds: usize,
    pub smote_k: usize,
    /// Overrides the SVM grid's degree axis when set.
    pub svm_degree: Option<u32>,
    pub rfecv_folds: usize,
    pub rfecv_trees: usize,
}

impl Default for ExperimentSettings {
    fn default() -> Self {
        ExperimentSettings {
            seeds: (0..10).collect(),
            train_fraction: 0.7,
            cv_folds: 10,
            smote_k: 5,
            svm_degree: None,
            rfecv_folds: 10,
            rfecv_trees: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CohortSettings {
    pub n: usize,
    pub class_ratio: f64,
    pub seed: u64,
}

impl Default for CohortSettings {
    fn default() -> Self {
        CohortSettings { n: 46_520, class_ratio: 0.225, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LedgerSettings {
    /// Transactions per sealed block.
    pub seal_every: usize,
    pub channel: String,
}

impl Default for LedgerSettings {
    fn default() -> Self {
        LedgerSettings { seal_every: 1, channel: dmp_ledger::DEFAULT_CHANNEL.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Dataset name → CSV path, an exported-tables directory for `mimic`, or
    /// `"synthetic"`.
    pub datasets: BTreeMap<String, String>,
    pub experiment: ExperimentSettings,
    pub cohort: CohortSettings,
    pub grid: HyperGrid,
    pub ledger: LedgerSettings,
}

impl Default for Config {
    fn default() -> Self {
        let datasets = [
            ("pima", "data/pima-indians-diabetes.csv"),
            ("sylhet", "data/diabetes_data_upload.csv"),
            ("mimic", SYNTHETIC),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
        Config {
            datasets,
            experiment: ExperimentSettings::default(),
            cohort: CohortSettings::default(),
            grid: HyperGrid::default(),
            ledger: LedgerSettings::default(),
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Config> {
        let cfg: Config = toml::from_str(text).map_err(|e| OrchestratorError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative dataset paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| OrchestratorError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Config::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for v in cfg.datasets.values_mut() {
            if v != SYNTHETIC && Path::new(v.as_str()).is_relative() {
                *v = base.join(&*v).to_string_lossy().into_owned();
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(OrchestratorError::Config(m));
        let e = &self.experiment;
        if e.seeds.is_empty() {
            return bad("experiment.seeds must not be empty".into());
        }
        if !(e.train_fraction > 0.0 && e.train_fraction < 1.0) {
            return bad(format!("experiment.train_fraction must lie in (0, 1), got {}", e.train_fraction));
        }
        if e.cv_folds < 2 || e.rfecv_folds < 2 {
            return bad("cross-validation needs at least 2 folds".into());
        }
        if e.smote_k == 0 || e.rfecv_trees == 0 {
            return bad("smote_k and rfecv_trees must be positive".into());
        }
        if self.ledger.seal_every == 0 {
            return bad("ledger.seal_every must be positive".into());
        }
        self.effective_grid().validate().map_err(|e| OrchestratorError::Config(e.to_string()))
    }

    /// The grid with `svm_degree` applied.
    pub fn effective_grid(&self) -> HyperGrid {
        let mut g = self.grid.clone();
        if let Some(d) = self.experiment.svm_degree {
            g.svm.degree = vec![d];
        }
        g
    }

    pub fn dataset_source(&self, name: &str) -> Result<&str> {
        self.datasets
            .get(name)
            .map(String::as_str)
            .ok_or_else(|| OrchestratorError::Config(format!("dataset '{name}' is not in the manifest")))
    }

    pub fn dataset_path(&self, name: &str) -> Result<Option<PathBuf>> {
        let src = self.dataset_source(name)?;
        Ok((src != SYNTHETIC).then(|| PathBuf::from(src)))
    }
}
