use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnRange {
    pub name: String,
    pub min: f64,
    pub max: f64,
}

/// Per-column min-max ranges fitted on training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizerParams {
    pub columns: Vec<ColumnRange>,
}

pub fn fit_normalizer(train: &FeatureMatrix) -> Result<NormalizerParams> {
    if train.n_rows() == 0 {
        return Err(Error::Preprocess("cannot fit a normalizer on an empty matrix".into()));
    }
    let columns = train
        .column_names()
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let (min, max) = train
                .rows()
                .map(|r| r[j])
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
            ColumnRange { name: name.clone(), min, max }
        })
        .collect();
    Ok(NormalizerParams { columns })
}

impl NormalizerParams {
    /// `(v − min)/(max − min)`; a constant column maps to 0. Values outside
    /// the fitted range land outside `[0, 1]`.
    #[inline]
    pub fn scale(&self, col: usize, v: f64) -> f64 {
        let r = &self.columns[col];
        let span = r.max - r.min;
        if span > 0.0 {
            (v - r.min) / span
        } else {
            0.0
        }
    }

    pub fn apply(&self, m: &FeatureMatrix) -> Result<FeatureMatrix> {
        let names: Vec<&str> = self.columns.iter().map(|c| c.name.as_str()).collect();
        if m.column_names().iter().map(String::as_str).ne(names.iter().copied()) {
            return Err(Error::Preprocess("matrix columns differ from the fitted normalizer".into()));
        }
        Ok(m.map_values(|j, v| self.scale(j, v)))
    }

    /// Scales a row laid out like `column_names`, a subset of the fitted columns.
    pub fn apply_named(&self, column_names: &[String], row: &[f64]) -> Result<Vec<f64>> {
        column_names
            .iter()
            .zip(row)
            .map(|(name, &v)| {
                let j = self
                    .columns
                    .iter()
                    .position(|c| &c.name == name)
                    .ok_or_else(|| Error::Preprocess(format!("normalizer has no column '{name}'")))?;
                Ok(self.scale(j, v))
            })
            .collect()
    }

    /// Restricts the parameters to the named columns, in that order.
    pub fn subset(&self, names: &[String]) -> Result<NormalizerParams> {
        let columns = names
            .iter()
            .map(|n| {
                self.columns
                    .iter()
                    .find(|c| &c.name == n)
                    .cloned()
                    .ok_or_else(|| Error::Preprocess(format!("normalizer has no column '{n}'")))
            })
            .collect::<Result<_>>()?;
        Ok(NormalizerParams { columns })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(vals: &[f64]) -> FeatureMatrix {
        FeatureMatrix::new(vec!["x".into()], vals.to_vec(), vec![true; vals.len()]).unwrap()
    }

    #[test]
    fn min_max() {
        let p = fit_normalizer(&col(&[44.0, 199.0, 100.0])).unwrap();
        let m = p.apply(&col(&[44.0, 199.0, 121.5])).unwrap();
        assert_eq!(m.values(), &[0.0, 1.0, 0.5]);
    }

    #[test]
    fn constant_column_maps_to_zero() {
        let p = fit_normalizer(&col(&[5.0, 5.0, 5.0])).unwrap();
        assert_eq!(p.apply(&col(&[5.0, 5.0, 5.0])).unwrap().values(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn test_rows_may_leave_unit_interval() {
        let p = fit_normalizer(&col(&[10.0, 20.0])).unwrap();
        assert_eq!(p.apply(&col(&[30.0, 0.0])).unwrap().values(), &[2.0, -1.0]);
    }

    #[test]
    fn idempotent_on_normalized_training_data() {
        let train = col(&[3.0, 9.0, 4.5, 7.0]);
        let once = fit_normalizer(&train).unwrap().apply(&train).unwrap();
        let twice = fit_normalizer(&once).unwrap().apply(&once).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn column_mismatch() {
        let p = fit_normalizer(&col(&[1.0, 2.0])).unwrap();
        let other = FeatureMatrix::new(vec!["y".into()], vec![1.0], vec![true]).unwrap();
        assert!(p.apply(&other).is_err());
    }
}
