//! Dataset loading through the manifest, and DP input records.

use std::collections::BTreeMap;
use std::path::Path;

use dmp_core::dataset::{load_tabular_dataset, schemas, Dataset};
use dmp_core::mimic::{build_mimic_like_dataset, generate_cohort, BuildReport, CohortConfig, MimicTables};
use dmp_core::preprocess::{drop_missing_rows, encode_categoricals, CategoricalEncoder};
use dmp_core::risk::{Gender, RiskFactorProfile, BMI_OBESE};
use dmp_core::FeatureMatrix;
use serde::{Deserialize, Serialize};

use crate::config::{Config, SYNTHETIC};
use crate::error::{OrchestratorError, Result};

/// A dataset after cleaning and encoding.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub name: String,
    pub raw: Dataset,
    pub clean: Dataset,
    pub matrix: FeatureMatrix,
    pub encoder: CategoricalEncoder,
    pub cohort_report: Option<BuildReport>,
}

fn load_err(msg: String) -> OrchestratorError {
    OrchestratorError::Load(dmp_core::Error::Domain(msg))
}

/// Loads the raw dataset named in the manifest.
pub fn load_dataset(cfg: &Config, name: &str) -> Result<(Dataset, Option<BuildReport>)> {
    let schema = schemas::by_name(name).ok_or_else(|| load_err(format!("no schema for dataset '{name}'")))?;
    let source = cfg.dataset_source(name)?;
    if name == "mimic" {
        let tables = if source == SYNTHETIC {
            let c = &cfg.cohort;
            generate_cohort(&CohortConfig::new(c.n, c.class_ratio, c.seed)).map_err(OrchestratorError::Load)?
        } else {
            MimicTables::read_dir(Path::new(source)).map_err(OrchestratorError::Load)?
        };
        let built = build_mimic_like_dataset(&tables).map_err(OrchestratorError::Load)?;
        return Ok((built.dataset, Some(built.report)));
    }
    if source == SYNTHETIC {
        return Err(load_err(format!("dataset '{name}' has no synthetic generator")));
    }
    let path = Path::new(source);
    if !path.exists() {
        return Err(load_err(format!("dataset file {} not found", path.display())));
    }
    Ok((load_tabular_dataset(path, &schema).map_err(OrchestratorError::Load)?, None))
}

/// Loads, drops incomplete rows and one-hot encodes.
pub fn prepare(cfg: &Config, name: &str) -> Result<PreparedData> {
    let (raw, cohort_report) = load_dataset(cfg, name)?;
    let clean = drop_missing_rows(&raw).map_err(OrchestratorError::Load)?;
    let (matrix, encoder) = encode_categoricals(&clean).map_err(OrchestratorError::Load)?;
    Ok(PreparedData { name: name.to_string(), raw, clean, matrix, encoder, cohort_report })
}

/// What an end user submits for a prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DpInput {
    Profile(Box<RiskFactorProfile>),
    Record(BTreeMap<String, String>),
}

impl DpInput {
    /// Raw `feature → text` view fed to the deployed model.
    pub fn to_record(&self) -> BTreeMap<String, String> {
        match self {
            DpInput::Record(r) => r.clone(),
            DpInput::Profile(p) => profile_to_record(p),
        }
    }

    /// Canonical bytes stored off-chain.
    pub fn to_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(&self.to_record()).expect("record serializes")
    }

    pub fn from_record_bytes(bytes: &[u8]) -> Result<DpInput> {
        serde_json::from_slice(bytes)
            .map(DpInput::Record)
            .map_err(|e| load_err(format!("stored record is not a JSON object: {e}")))
    }
}

/// Column values a profile supplies for each known schema.
pub fn profile_to_record(p: &RiskFactorProfile) -> BTreeMap<String, String> {
    let s = &p.self_reported;
    let male = s.gender == Gender::Male;
    let yes_no = |b: bool| if b { "Yes" } else { "No" }.to_string();
    let mut r = BTreeMap::new();
    r.insert("Glucose".into(), p.fasting_glucose.to_string());
    r.insert("BloodPressure".into(), p.diastolic_bp.to_string());
    r.insert("BMI".into(), p.bmi.to_string());
    r.insert("Age".into(), s.age.to_string());
    r.insert("AGE".into(), s.age.to_string());
    r.insert("GENDER".into(), if male { "M" } else { "F" }.into());
    r.insert("Gender".into(), if male { "Male" } else { "Female" }.into());
    r.insert("ETHNICITY".into(), s.ethnicity.clone());
    r.insert("FAMILY_HISTORY".into(), if s.family_history { "1" } else { "0" }.into());
    r.insert("Obesity".into(), yes_no(p.bmi >= BMI_OBESE));
    r
}

fn json_scalar(v: &serde_json::Value) -> Option<String> {
    match v {
        serde_json::Value::String(s) => Some(s.clone()),
        serde_json::Value::Number(n) => Some(n.to_string()),
        serde_json::Value::Bool(b) => Some(if *b { "1" } else { "0" }.to_string()),
        _ => None,
    }
}

/// Parses a JSON object (a risk-factor profile or a flat record) or a
/// one-row CSV with a header.
pub fn parse_dp_input(text: &str, csv_format: bool) -> Result<DpInput> {
    if csv_format {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let headers = rdr.headers().map_err(|e| load_err(e.to_string()))?.clone();
        let row = rdr
            .records()
            .next()
            .ok_or_else(|| load_err("record file has a header but no row".into()))?
            .map_err(|e| load_err(e.to_string()))?;
        return Ok(DpInput::Record(headers.iter().zip(row.iter()).map(|(k, v)| (k.to_string(), v.to_string())).collect()));
    }
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| load_err(format!("invalid JSON record: {e}")))?;
    if let Ok(p) = serde_json::from_value::<RiskFactorProfile>(value.clone()) {
        p.validate().map_err(OrchestratorError::Load)?;
        return Ok(DpInput::Profile(Box::new(p)));
    }
    let obj = value.as_object().ok_or_else(|| load_err("record must be a JSON object".into()))?;
    let mut rec = BTreeMap::new();
    for (k, v) in obj {
        let s = json_scalar(v).ok_or_else(|| load_err(format!("field '{k}' must be a string, number or boolean")))?;
        rec.insert(k.clone(), s);
    }
    Ok(DpInput::Record(rec))
}

pub fn read_dp_input(path: &Path) -> Result<DpInput> {
    let text = std::fs::read_to_string(path).map_err(|e| load_err(format!("cannot read {}: {e}", path.display())))?;
    let csv_format = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    parse_dp_input(&text, csv_format)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_json_and_csv_records() {
        let j = parse_dp_input(r#"{"Glucose": 190, "BMI": "41.5", "smoker": true}"#, false).unwrap();
        let r = j.to_record();
        assert_eq!(r["Glucose"], "190");
        assert_eq!(r["smoker"], "1");
        let c = parse_dp_input("Glucose, BMI\n190, 41.5\n", true).unwrap();
        assert_eq!(c.to_record()["BMI"], "41.5");
        assert!(parse_dp_input("[1,2]", false).is_err());
        assert!(parse_dp_input("a,b\n", true).is_err());
    }

    #[test]
    fn stored_bytes_round_trip() {
        let j = parse_dp_input(r#"{"AGE": 70, "GENDER": "M"}"#, false).unwrap();
        assert_eq!(DpInput::from_record_bytes(&j.to_bytes()).unwrap().to_record(), j.to_record());
    }
}
