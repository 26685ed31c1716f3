//! Tabular datasets with an explicit schema, and the comma-separated loader.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureKind {
    Numeric,
    /// Two-valued text column; `one` encodes to 1.0 and `zero` to 0.0.
    Binary { one: String, zero: String },
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
    /// A literal zero in this column means "not measured".
    #[serde(default)]
    pub zero_is_missing: bool,
}

impl FeatureSpec {
    pub fn numeric(name: &str) -> Self {
        FeatureSpec { name: name.into(), kind: FeatureKind::Numeric, zero_is_missing: false }
    }

    pub fn numeric_zero_missing(name: &str) -> Self {
        FeatureSpec { name: name.into(), kind: FeatureKind::Numeric, zero_is_missing: true }
    }

    pub fn binary(name: &str, one: &str, zero: &str) -> Self {
        FeatureSpec {
            name: name.into(),
            kind: FeatureKind::Binary { one: one.into(), zero: zero.into() },
            zero_is_missing: false,
        }
    }

    pub fn categorical(name: &str) -> Self {
        FeatureSpec { name: name.into(), kind: FeatureKind::Categorical, zero_is_missing: false }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DatasetSchema {
    pub name: String,
    pub features: Vec<FeatureSpec>,
    pub label_name: String,
    pub positive_label: String,
    pub negative_label: String,
}

impl DatasetSchema {
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for f in &self.features {
            if !seen.insert(f.name.as_str()) {
                return Err(Error::Domain(format!("duplicate feature name '{}'", f.name)));
            }
            if f.zero_is_missing && f.kind != FeatureKind::Numeric {
                return Err(Error::Domain(format!("zero_is_missing set on non-numeric feature '{}'", f.name)));
            }
        }
        if seen.contains(self.label_name.as_str()) {
            return Err(Error::Domain(format!("label '{}' is also a feature", self.label_name)));
        }
        if self.positive_label == self.negative_label {
            return Err(Error::Domain("positive and negative labels must differ".into()));
        }
        Ok(())
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn feature_names(&self) -> Vec<&str> {
        self.features.iter().map(|f| f.name.as_str()).collect()
    }

    /// SHA-256 over the canonical JSON form, lowercase hex.
    pub fn fingerprint(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("schema serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

/// One cell of a raw record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Value {
    Num(f64),
    Text(String),
    Missing,
}

impl Value {
    pub fn as_num(&self) -> Option<f64> {
        match self {
            Value::Num(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Value::Text(s) => Some(s),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(v) => write!(f, "{v}"),
            Value::Text(s) => f.write_str(s),
            Value::Missing => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    /// One value per schema feature, in schema order.
    pub values: Vec<Value>,
    pub label: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub schema: DatasetSchema,
    pub rows: Vec<Record>,
}

impl Dataset {
    pub fn new(schema: DatasetSchema, rows: Vec<Record>) -> Result<Self> {
        schema.validate()?;
        let width = schema.features.len();
        for (i, r) in rows.iter().enumerate() {
            if r.values.len() != width {
                return Err(Error::Domain(format!("row {i} has {} values, schema has {width}", r.values.len())));
            }
        }
        Ok(Dataset { schema, rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// `(positive, negative)` row counts.
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.rows.iter().filter(|r| r.label).count();
        (pos, self.rows.len() - pos)
    }

    /// Serializes to the same comma-separated layout the loader reads.
    pub fn to_csv_string(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<&str> = self.schema.feature_names();
        header.push(&self.schema.label_name);
        w.write_record(&header).expect("in-memory write");
        for r in &self.rows {
            let mut cells: Vec<String> = r.values.iter().map(|v| v.to_string()).collect();
            cells.push(if r.label { self.schema.positive_label.clone() } else { self.schema.negative_label.clone() });
            w.write_record(&cells).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }
}

/// Reads a comma-separated file with a header row. Columns may appear in any
/// order but the header must name exactly the schema's features plus the label.
pub fn load_tabular_dataset(path: &Path, schema: &DatasetSchema) -> Result<Dataset> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::load(format!("cannot open {}: {e}", path.display())))?;
    read_tabular(file, schema)
}

pub fn parse_tabular(text: &str, schema: &DatasetSchema) -> Result<Dataset> {
    read_tabular(text.as_bytes(), schema)
}

fn read_tabular<R: std::io::Read>(reader: R, schema: &DatasetSchema) -> Result<Dataset> {
    schema.validate()?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(|e| Error::load(format!("cannot read header: {e}")))?.clone();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(Error::load("file is empty"));
    }

    let mut column_of = Vec::with_capacity(schema.features.len());
    for f in &schema.features {
        let idx = header.iter().position(|h| h == f.name);
        column_of.push(idx.ok_or_else(|| Error::Load {
            row: None,
            column: Some(f.name.clone()),
            message: "missing from header".into(),
        })?);
    }
    let label_col = header.iter().position(|h| h == schema.label_name).ok_or_else(|| Error::Load {
        row: None,
        column: Some(schema.label_name.clone()),
        message: "label column missing from header".into(),
    })?;
    if header.len() != schema.features.len() + 1 {
        let known: HashSet<&str> =
            schema.features.iter().map(|f| f.name.as_str()).chain([schema.label_name.as_str()]).collect();
        let extra: Vec<&str> = header.iter().filter(|h| !known.contains(h)).collect();
        return Err(Error::load(format!("header has unexpected columns: {extra:?}")));
    }

    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        // Data rows are numbered from 1, after the header.
        let row_no = i + 1;
        let rec = rec.map_err(|e| Error::Load { row: Some(row_no), column: None, message: e.to_string() })?;
        let mut values = Vec::with_capacity(schema.features.len());
        for (f, &col) in schema.features.iter().zip(&column_of) {
            let cell = rec.get(col).unwrap_or("");
            values.push(parse_cell(cell, f).map_err(|m| Error::load_at(row_no, &f.name, m))?);
        }
        let label_cell = rec.get(label_col).unwrap_or("");
        let label = if label_cell == schema.positive_label {
            true
        } else if label_cell == schema.negative_label {
            false
        } else {
            return Err(Error::load_at(row_no, &schema.label_name, format!("unknown label '{label_cell}'")));
        };
        rows.push(Record { values, label });
    }
    if rows.is_empty() {
        return Err(Error::load("no data rows"));
    }
    Dataset::new(schema.clone(), rows)
}

fn parse_cell(cell: &str, spec: &FeatureSpec) -> std::result::Result<Value, String> {
    if cell.is_empty() || cell.eq_ignore_ascii_case("na") || cell == "?" {
        return Ok(Value::Missing);
    }
    match &spec.kind {
        FeatureKind::Numeric => cell
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .map(Value::Num)
            .ok_or_else(|| format!("cannot parse '{cell}' as a number")),
        FeatureKind::Binary { one, zero } => {
            if cell == one || cell == zero {
                Ok(Value::Text(cell.to_string()))
            } else {
                Err(format!("expected '{one}' or '{zero}', found '{cell}'"))
            }
        }
        FeatureKind::Categorical => Ok(Value::Text(cell.to_string())),
    }
}

/// Built-in schemas for the three datasets.
pub mod schemas {
    use super::{DatasetSchema, FeatureSpec};

    /// Column order of the usual PIMA file. Zero means "not measured" for
    /// glucose, blood pressure, skin thickness and BMI.
    pub fn pima() -> DatasetSchema {
        DatasetSchema {
            name: "pima".into(),
            features: vec![
                FeatureSpec::numeric("Pregnancies"),
                FeatureSpec::numeric_zero_missing("Glucose"),
                FeatureSpec::numeric_zero_missing("BloodPressure"),
                FeatureSpec::numeric_zero_missing("SkinThickness"),
                FeatureSpec::numeric("Insulin"),
                FeatureSpec::numeric_zero_missing("BMI"),
                FeatureSpec::numeric("DiabetesPedigreeFunction"),
                FeatureSpec::numeric("Age"),
            ],
            label_name: "Outcome".into(),
            positive_label: "1".into(),
            negative_label: "0".into(),
        }
    }

    pub const SYLHET_SYMPTOMS: [&str; 14] = [
        "Polyuria",
        "Polydipsia",
        "sudden weight loss",
        "weakness",
        "Polyphagia",
        "Genital thrush",
        "visual blurring",
        "Itching",
        "Irritability",
        "delayed healing",
        "partial paresis",
        "muscle stiffness",
        "Alopecia",
        "Obesity",
    ];

    /// Questionnaire dataset: numeric age, Male/Female gender, 14 Yes/No symptoms.
    pub fn sylhet() -> DatasetSchema {
        let mut features = vec![FeatureSpec::numeric("Age"), FeatureSpec::binary("Gender", "Male", "Female")];
        features.extend(SYLHET_SYMPTOMS.iter().map(|s| FeatureSpec::binary(s, "Yes", "No")));
        DatasetSchema {
            name: "sylhet".into(),
            features,
            label_name: "class".into(),
            positive_label: "Positive".into(),
            negative_label: "Negative".into(),
        }
    }

    /// The four-feature dataset derived from the ICU tables.
    pub fn mimic() -> DatasetSchema {
        DatasetSchema {
            name: "mimic".into(),
            features: vec![
                FeatureSpec::numeric("AGE"),
                FeatureSpec::binary("GENDER", "M", "F"),
                FeatureSpec::categorical("ETHNICITY"),
                FeatureSpec::binary("FAMILY_HISTORY", "1", "0"),
            ],
            label_name: "DIABETES".into(),
            positive_label: "1".into(),
            negative_label: "0".into(),
        }
    }

    pub fn by_name(name: &str) -> Option<DatasetSchema> {
        match name {
            "pima" => Some(pima()),
            "sylhet" => Some(sylhet()),
            "mimic" => Some(mimic()),
            _ => None,
        }
    }
}
