use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, DatasetSchema, FeatureKind, Value};
use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;

/// How one output column is computed from the raw record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EncodedColumn {
    Numeric { source: String },
    /// 1.0 when the cell equals `one`, 0.0 when it equals `zero`.
    Binary { source: String, one: String, zero: String },
    /// 1.0 when the cell equals `level`.
    Indicator { source: String, level: String },
}

impl EncodedColumn {
    pub fn source(&self) -> &str {
        match self {
            EncodedColumn::Numeric { source }
            | EncodedColumn::Binary { source, .. }
            | EncodedColumn::Indicator { source, .. } => source,
        }
    }
}

/// Maps raw records to numeric columns. Binary columns encode to {1, 0};
/// a categorical column with `c` levels becomes `c` indicator columns
/// named `FEATURE_level`, levels in sorted order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoricalEncoder {
    pub column_names: Vec<String>,
    pub columns: Vec<EncodedColumn>,
    /// Known levels per categorical feature.
    pub levels: BTreeMap<String, Vec<String>>,
}

impl CategoricalEncoder {
    pub fn fit(d: &Dataset) -> Result<Self> {
        let mut names = Vec::new();
        let mut columns = Vec::new();
        let mut levels_out = BTreeMap::new();
        for (j, f) in d.schema.features.iter().enumerate() {
            match &f.kind {
                FeatureKind::Numeric => {
                    names.push(f.name.clone());
                    columns.push(EncodedColumn::Numeric { source: f.name.clone() });
                }
                FeatureKind::Binary { one, zero } => {
                    names.push(f.name.clone());
                    columns.push(EncodedColumn::Binary { source: f.name.clone(), one: one.clone(), zero: zero.clone() });
                }
                FeatureKind::Categorical => {
                    let mut levels = BTreeSet::new();
                    for (i, r) in d.rows.iter().enumerate() {
                        match &r.values[j] {
                            Value::Text(s) => {
                                levels.insert(s.clone());
                            }
                            other => {
                                return Err(Error::Encoding(format!(
                                    "row {i}, column '{}': expected a category, found {other:?}",
                                    f.name
                                )))
                            }
                        }
                    }
                    for l in &levels {
                        names.push(format!("{}_{l}", f.name));
                        columns.push(EncodedColumn::Indicator { source: f.name.clone(), level: l.clone() });
                    }
                    levels_out.insert(f.name.clone(), levels.into_iter().collect());
                }
            }
        }
        Ok(CategoricalEncoder { column_names: names, columns, levels: levels_out })
    }

    pub fn transform(&self, d: &Dataset) -> Result<FeatureMatrix> {
        let index = source_index(&d.schema);
        let mut values = Vec::with_capacity(d.len() * self.columns.len());
        for (i, r) in d.rows.iter().enumerate() {
            for col in &self.columns {
                let j = *index.get(col.source()).ok_or_else(|| {
                    Error::Encoding(format!("dataset has no feature '{}'", col.source()))
                })?;
                values.push(
                    self.encode_cell(col, &r.values[j]).map_err(|m| Error::Encoding(format!("row {i}: {m}")))?,
                );
            }
        }
        FeatureMatrix::new(self.column_names.clone(), values, d.rows.iter().map(|r| r.label).collect())
    }

    /// Encodes the requested output columns from a name → raw-text record.
    pub fn encode_fields(&self, record: &BTreeMap<String, String>, wanted: &[String]) -> Result<Vec<f64>> {
        wanted
            .iter()
            .map(|name| {
                let pos = self
                    .column_names
                    .iter()
                    .position(|c| c == name)
                    .ok_or_else(|| Error::Encoding(format!("model column '{name}' is unknown to the encoder")))?;
                let col = &self.columns[pos];
                let raw = record
                    .get(col.source())
                    .ok_or_else(|| Error::Encoding(format!("record is missing feature '{}'", col.source())))?;
                let value = match col {
                    EncodedColumn::Numeric { .. } => match raw.trim().parse::<f64>() {
                        Ok(v) if v.is_finite() => Value::Num(v),
                        _ => return Err(Error::Encoding(format!("'{}' = '{raw}' is not a number", col.source()))),
                    },
                    _ => Value::Text(raw.trim().to_string()),
                };
                self.encode_cell(col, &value).map_err(Error::Encoding)
            })
            .collect()
    }

    fn encode_cell(&self, col: &EncodedColumn, v: &Value) -> std::result::Result<f64, String> {
        match (col, v) {
            (EncodedColumn::Numeric { .. }, Value::Num(x)) => Ok(*x),
            (EncodedColumn::Binary { source, one, zero }, Value::Text(s)) => {
                if s == one {
                    Ok(1.0)
                } else if s == zero {
                    Ok(0.0)
                } else {
                    Err(format!("'{source}' = '{s}' is neither '{one}' nor '{zero}'"))
                }
            }
            (EncodedColumn::Indicator { source, level }, Value::Text(s)) => {
                let known = self.levels.get(source).is_some_and(|ls| ls.iter().any(|l| l == s));
                if !known {
                    return Err(format!("unseen category '{s}' for '{source}'"));
                }
                Ok(if s == level { 1.0 } else { 0.0 })
            }
            (c, other) => Err(format!("cannot encode {other:?} for '{}'", c.source())),
        }
    }
}

fn source_index(schema: &DatasetSchema) -> BTreeMap<&str, usize> {
    schema.features.iter().enumerate().map(|(j, f)| (f.name.as_str(), j)).collect()
}

/// Fits an encoder on `d` and applies it.
pub fn encode_categoricals(d: &Dataset) -> Result<(FeatureMatrix, CategoricalEncoder)> {
    let enc = CategoricalEncoder::fit(d)?;
    Ok((enc.transform(d)?, enc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{parse_tabular, schemas};

    fn mimic_rows() -> Dataset {
        parse_tabular(
            "AGE,GENDER,ETHNICITY,FAMILY_HISTORY,DIABETES\n\
             60,M,WHITE,0,1\n\
             40,F,ASIAN,1,0\n\
             50,F,BLACK/AFRICAN AMERICAN,0,0\n",
            &schemas::mimic(),
        )
        .unwrap()
    }

    #[test]
    fn indicators_one_hot() {
        let (m, enc) = encode_categoricals(&mimic_rows()).unwrap();
        assert_eq!(
            m.column_names(),
            &["AGE", "GENDER", "ETHNICITY_ASIAN", "ETHNICITY_BLACK/AFRICAN AMERICAN", "ETHNICITY_WHITE", "FAMILY_HISTORY"]
        );
        for r in m.rows() {
            assert_eq!(r[2] + r[3] + r[4], 1.0);
        }
        assert_eq!(m.row(0), &[60.0, 1.0, 0.0, 0.0, 1.0, 0.0]);
        assert_eq!(m.row(1)[1], 0.0);
        assert_eq!(enc.levels["ETHNICITY"].len(), 3);
    }

    #[test]
    fn yes_no_and_gender() {
        let d = parse_tabular(
            &format!(
                "Age,Gender,{},class\n30,Male,{},Positive\n",
                schemas::SYLHET_SYMPTOMS.join(","),
                ["Yes", "No"].repeat(7).join(",")
            ),
            &schemas::sylhet(),
        )
        .unwrap();
        let (m, _) = encode_categoricals(&d).unwrap();
        assert_eq!(m.row(0)[..4], [30.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn unseen_category_at_apply_time() {
        let enc = CategoricalEncoder::fit(&mimic_rows()).unwrap();
        let other = parse_tabular("AGE,GENDER,ETHNICITY,FAMILY_HISTORY,DIABETES\n60,M,OTHER,0,1\n", &schemas::mimic()).unwrap();
        assert!(matches!(enc.transform(&other), Err(Error::Encoding(_))));
    }

    #[test]
    fn field_records() {
        let enc = CategoricalEncoder::fit(&mimic_rows()).unwrap();
        let rec: BTreeMap<String, String> =
            [("AGE", "71"), ("ETHNICITY", "ASIAN")].iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        let v = enc.encode_fields(&rec, &["ETHNICITY_ASIAN".into(), "AGE".into()]).unwrap();
        assert_eq!(v, vec![1.0, 71.0]);
        assert!(enc.encode_fields(&rec, &["GENDER".into()]).is_err());
    }
}
