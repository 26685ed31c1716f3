//! Versioned model artifact bundling the fitted preprocessing with the model.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::DatasetSchema;
use crate::error::{Error, Result};
use crate::models::{ModelSpec, TrainedModel};
use crate::preprocess::{CategoricalEncoder, NormalizerParams};

pub const ARTIFACT_FORMAT_VERSION: u32 = 1;

/// Everything needed to turn a raw record into a prediction exactly as
/// during training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub format_version: u32,
    pub schema_fingerprint: String,
    pub schema: DatasetSchema,
    pub encoder: CategoricalEncoder,
    /// Model input columns, in order.
    pub selected_features: Vec<String>,
    /// Min-max ranges of `selected_features`, fitted on the training split.
    pub normalizer: NormalizerParams,
    pub spec: ModelSpec,
    pub model: TrainedModel,
}

/// Outcome of running one record through an artifact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub positive: bool,
    pub score: f64,
    pub probability: Option<f64>,
}

impl ModelArtifact {
    pub fn new(
        schema: DatasetSchema,
        encoder: CategoricalEncoder,
        selected_features: Vec<String>,
        normalizer: NormalizerParams,
        spec: ModelSpec,
        model: TrainedModel,
    ) -> Result<Self> {
        let a = ModelArtifact {
            format_version: ARTIFACT_FORMAT_VERSION,
            schema_fingerprint: schema.fingerprint(),
            schema,
            encoder,
            selected_features,
            normalizer,
            spec,
            model,
        };
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != ARTIFACT_FORMAT_VERSION {
            return Err(Error::Artifact(format!(
                "unsupported format version {} (expected {ARTIFACT_FORMAT_VERSION})",
                self.format_version
            )));
        }
        if self.schema.fingerprint() != self.schema_fingerprint {
            return Err(Error::Artifact("schema fingerprint does not match the embedded schema".into()));
        }
        let norm: Vec<&str> = self.normalizer.columns.iter().map(|c| c.name.as_str()).collect();
        if norm != self.selected_features.iter().map(String::as_str).collect::<Vec<_>>() {
            return Err(Error::Artifact("normalizer columns differ from the selected features".into()));
        }
        let arity = match &self.model {
            TrainedModel::Rf(f) => Some(f.n_features()),
            TrainedModel::Lr(l) => Some(l.coefficients.len()),
            TrainedModel::Svm(s) => s.support_vectors.first().map(Vec::len),
        };
        if let Some(a) = arity {
            if a != self.selected_features.len() {
                return Err(Error::Artifact(format!(
                    "model expects {a} inputs but {} features are selected",
                    self.selected_features.len()
                )));
            }
        }
        if let Some(f) = self.selected_features.iter().find(|f| !self.encoder.column_names.contains(f)) {
            return Err(Error::Artifact(format!("selected feature '{f}' is not produced by the encoder")));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("artifact serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let a: ModelArtifact = serde_json::from_str(s).map_err(|e| Error::Artifact(e.to_string()))?;
        a.validate()?;
        Ok(a)
    }

    /// SHA-256 of [`Self::to_json`], lowercase hex.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }

    /// Encodes and normalizes a raw `feature → text` record into model inputs.
    pub fn transform_record(&self, record: &BTreeMap<String, String>) -> Result<Vec<f64>> {
        let raw = self.encoder.encode_fields(record, &self.selected_features)?;
        self.normalizer.apply_named(&self.selected_features, &raw)
    }

    pub fn predict_record(&self, record: &BTreeMap<String, String>) -> Result<Prediction> {
        let x = self.transform_record(record)?;
        Ok(Prediction { positive: self.model.predict(&x), score: self.model.score(&x), probability: self.model.probability(&x) })
    }
}
