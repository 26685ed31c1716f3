use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Dense row-major numeric features with binary labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    column_names: Vec<String>,
    values: Vec<f64>,
    labels: Vec<bool>,
}

impl FeatureMatrix {
    /// `values` is row-major with `column_names.len()` columns. Rejects
    /// non-finite entries and ragged shapes.
    pub fn new(column_names: Vec<String>, values: Vec<f64>, labels: Vec<bool>) -> Result<Self> {
        let n_cols = column_names.len();
        if n_cols == 0 {
            return Err(Error::Domain("feature matrix needs at least one column".into()));
        }
        if values.len() != n_cols * labels.len() {
            return Err(Error::Domain(format!(
                "{} values do not fill {} rows of {n_cols} columns",
                values.len(),
                labels.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "non-finite value at row {}, column '{}'",
                pos / n_cols,
                column_names[pos % n_cols]
            )));
        }
        Ok(FeatureMatrix { column_names, values, labels })
    }

    pub fn from_rows(column_names: Vec<String>, rows: &[Vec<f64>], labels: Vec<bool>) -> Result<Self> {
        let n_cols = column_names.len();
        if let Some(r) = rows.iter().find(|r| r.len() != n_cols) {
            return Err(Error::Domain(format!("row of length {} in a {n_cols}-column matrix", r.len())));
        }
        Self::new(column_names, rows.concat(), labels)
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_cols(&self) -> usize {
        self.column_names.len()
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.n_cols();
        &self.values[i * c..(i + 1) * c]
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n_cols() + col]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.n_cols())
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        self.rows().map(|r| r[col]).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|c| c == name)
    }

    /// `(positive, negative)`.
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.labels.iter().filter(|l| **l).count();
        (pos, self.labels.len() - pos)
    }

    pub fn select_rows(&self, idx: &[usize]) -> FeatureMatrix {
        let c = self.n_cols();
        let mut values = Vec::with_capacity(idx.len() * c);
        let mut labels = Vec::with_capacity(idx.len());
        for &i in idx {
            values.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        FeatureMatrix { column_names: self.column_names.clone(), values, labels }
    }

    pub fn select_columns(&self, cols: &[usize]) -> FeatureMatrix {
        let names = cols.iter().map(|&c| self.column_names[c].clone()).collect();
        let mut values = Vec::with_capacity(self.n_rows() * cols.len());
        for r in self.rows() {
            values.extend(cols.iter().map(|&c| r[c]));
        }
        FeatureMatrix { column_names: names, values, labels: self.labels.clone() }
    }

    /// Keeps the named columns, in the order given.
    pub fn select_named(&self, names: &[String]) -> Result<FeatureMatrix> {
        let idx = names
            .iter()
            .map(|n| self.column_index(n).ok_or_else(|| Error::Domain(format!("no column named '{n}'"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.select_columns(&idx))
    }

    /// Appends rows from a matrix with identical columns.
    pub fn append(&mut self, other: &FeatureMatrix) -> Result<()> {
        if other.column_names != self.column_names {
            return Err(Error::Domain("cannot append matrices with different columns".into()));
        }
        self.values.extend_from_slice(&other.values);
        self.labels.extend_from_slice(&other.labels);
        Ok(())
    }

    pub(crate) fn push_row(&mut self, row: &[f64], label: bool) {
        debug_assert_eq!(row.len(), self.n_cols());
        self.values.extend_from_slice(row);
        self.labels.push(label);
    }

    pub(crate) fn map_values(&self, f: impl Fn(usize, f64) -> f64) -> FeatureMatrix {
        let c = self.n_cols();
        let values = self.values.iter().enumerate().map(|(i, v)| f(i % c, *v)).collect();
        FeatureMatrix { column_names: self.column_names.clone(), values, labels: self.labels.clone() }
    }

    /// SHA-256 over column names, shape, bit patterns of every value and the labels.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.n_cols() as u64).to_be_bytes());
        for n in &self.column_names {
            h.update((n.len() as u64).to_be_bytes());
            h.update(n.as_bytes());
        }
        h.update((self.n_rows() as u64).to_be_bytes());
        for v in &self.values {
            h.update(v.to_bits().to_be_bytes());
        }
        for l in &self.labels {
            h.update([u8::from(*l)]);
        }
        hex::encode(h.finalize())
    }

    /// Header plus one line per row; the label is the last column.
    pub fn to_delimited(&self, delimiter: u8, label_name: &str) -> String {
        let mut w = csv::WriterBuilder::new().delimiter(delimiter).from_writer(Vec::new());
        let mut header: Vec<&str> = self.column_names.iter().map(String::as_str).collect();
        header.push(label_name);
        w.write_record(&header).expect("in-memory write");
        for (r, l) in self.rows().zip(&self.labels) {
            let mut cells: Vec<String> = r.iter().map(|v| v.to_string()).collect();
            cells.push(u8::from(*l).to_string());
            w.write_record(&cells).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}
