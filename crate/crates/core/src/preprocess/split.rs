use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;

#[derive(Debug, Clone)]
pub struct HoldoutSplit {
    pub train: FeatureMatrix,
    pub test: FeatureMatrix,
    /// Row indices into the source matrix, ascending.
    pub train_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
}

/// Per class, `floor(train_fraction × count)` rows go to training; the rest
/// to test. Rows keep their source order within each partition.
pub fn stratified_holdout_split(m: &FeatureMatrix, train_fraction: f64, seed: u64) -> Result<HoldoutSplit> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Split(format!("train fraction must lie in (0, 1), got {train_fraction}")));
    }
    let (pos, neg) = m.class_counts();
    if pos < 2 || neg < 2 {
        return Err(Error::Split(format!("each class needs at least 2 rows (have {pos} positive, {neg} negative)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for class in [true, false] {
        let mut idx: Vec<usize> = (0..m.n_rows()).filter(|&i| m.labels()[i] == class).collect();
        idx.shuffle(&mut rng);
        let n_train = (train_fraction * idx.len() as f64).floor() as usize;
        train_idx.extend_from_slice(&idx[..n_train]);
        test_idx.extend_from_slice(&idx[n_train..]);
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    Ok(HoldoutSplit { train: m.select_rows(&train_idx), test: m.select_rows(&test_idx), train_idx, test_idx })
}
