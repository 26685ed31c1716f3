//! Data transformation between raw records and model-ready matrices.

mod encode;
mod normalize;
mod smote;
mod split;

pub use encode::{encode_categoricals, CategoricalEncoder, EncodedColumn};
pub use normalize::{fit_normalizer, ColumnRange, NormalizerParams};
pub use smote::{smote_oversample, smote_with_provenance, SmoteConfig, SmoteOutput, SyntheticOrigin};
pub use split::{stratified_holdout_split, HoldoutSplit};

use crate::dataset::{Dataset, Value};
use crate::error::{Error, Result};

/// Removes rows with an absent cell or with a zero in a `zero_is_missing`
/// column. Surviving rows are untouched and keep their order.
pub fn drop_missing_rows(d: &Dataset) -> Result<Dataset> {
    let sentinel: Vec<bool> = d.schema.features.iter().map(|f| f.zero_is_missing).collect();
    let rows: Vec<_> = d
        .rows
        .iter()
        .filter(|r| {
            r.values.iter().zip(&sentinel).all(|(v, &zero_missing)| match v {
                Value::Missing => false,
                Value::Num(x) => !(zero_missing && *x == 0.0),
                Value::Text(_) => true,
            })
        })
        .cloned()
        .collect();
    if rows.is_empty() {
        return Err(Error::Preprocess("every row has a missing value".into()));
    }
    Dataset::new(d.schema.clone(), rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{parse_tabular, DatasetSchema, FeatureSpec};

    fn schema() -> DatasetSchema {
        DatasetSchema {
            name: "t".into(),
            features: vec![FeatureSpec::numeric_zero_missing("bmi"), FeatureSpec::numeric("preg")],
            label_name: "y".into(),
            positive_label: "1".into(),
            negative_label: "0".into(),
        }
    }

    #[test]
    fn drops_sentinels_and_blanks() {
        let d = parse_tabular("bmi,preg,y\n0,1,1\n30,0,0\n,2,1\n25,3,1\n", &schema()).unwrap();
        let out = drop_missing_rows(&d).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out.rows[0], d.rows[1]);
        assert_eq!(out.rows[1], d.rows[3]);
    }

    #[test]
    fn no_sentinel_columns_is_identity() {
        let mut s = schema();
        s.features[0].zero_is_missing = false;
        let d = parse_tabular("bmi,preg,y\n0,1,1\n30,0,0\n", &s).unwrap();
        assert_eq!(drop_missing_rows(&d).unwrap(), d);
    }

    #[test]
    fn all_rows_missing_is_an_error() {
        let d = parse_tabular("bmi,preg,y\n0,1,1\n", &schema()).unwrap();
        assert!(matches!(drop_missing_rows(&d), Err(Error::Preprocess(_))));
    }
}
