use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoteConfig {
    /// Neighbours considered per minority sample.
    pub k: usize,
    pub seed: u64,
}

impl Default for SmoteConfig {
    fn default() -> Self {
        SmoteConfig { k: 5, seed: 42 }
    }
}

/// Parents and interpolation weight of one synthetic row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticOrigin {
    /// Row index (in the input matrix) of the sampled minority point.
    pub base: usize,
    /// Row index of the chosen neighbour.
    pub neighbor: usize,
    pub lambda: f64,
}

#[derive(Debug, Clone)]
pub struct SmoteOutput {
    /// Input rows first, in order, followed by the synthetic rows.
    pub matrix: FeatureMatrix,
    pub origins: Vec<SyntheticOrigin>,
}

/// Oversamples the minority class to parity with the majority.
pub fn smote_oversample(train: &FeatureMatrix, cfg: &SmoteConfig) -> Result<FeatureMatrix> {
    Ok(smote_with_provenance(train, cfg)?.matrix)
}

/// Like [`smote_oversample`] but also reports where each synthetic row came from.
///
/// Each synthetic row is `x + λ(n − x)` with `x` a uniformly drawn minority
/// row, `n` one of its `k` nearest minority neighbours (Euclidean, ties to
/// the lower index) and `λ ~ U[0, 1]`.
pub fn smote_with_provenance(train: &FeatureMatrix, cfg: &SmoteConfig) -> Result<SmoteOutput> {
    if cfg.k == 0 {
        return Err(Error::Config("SMOTE k must be at least 1".into()));
    }
    let (pos, neg) = train.class_counts();
    if pos == neg {
        return Ok(SmoteOutput { matrix: train.clone(), origins: Vec::new() });
    }
    let minority_label = pos < neg;
    let minority: Vec<usize> = (0..train.n_rows()).filter(|&i| train.labels()[i] == minority_label).collect();
    if minority.len() <= cfg.k {
        return Err(Error::Config(format!(
            "SMOTE needs more than k = {} minority rows, found {}",
            cfg.k,
            minority.len()
        )));
    }
    let neighbours: Vec<Vec<usize>> = minority.iter().map(|&i| nearest(train, &minority, i, cfg.k)).collect();

    let needed = pos.max(neg) - minority.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = train.clone();
    let mut origins = Vec::with_capacity(needed);
    let mut row = vec![0.0; train.n_cols()];
    for _ in 0..needed {
        let m = rng.random_range(0..minority.len());
        let nb = neighbours[m][rng.random_range(0..cfg.k)];
        let lambda: f64 = rng.random();
        let (x, n) = (train.row(minority[m]), train.row(nb));
        for ((r, a), b) in row.iter_mut().zip(x).zip(n) {
            *r = a + lambda * (b - a);
        }
        out.push_row(&row, minority_label);
        origins.push(SyntheticOrigin { base: minority[m], neighbor: nb, lambda });
    }
    Ok(SmoteOutput { matrix: out, origins })
}

fn nearest(m: &FeatureMatrix, pool: &[usize], i: usize, k: usize) -> Vec<usize> {
    let x = m.row(i);
    let mut d: Vec<(f64, usize)> = pool
        .iter()
        .filter(|&&j| j != i)
        .map(|&j| (m.row(j).iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), j))
        .collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    d.into_iter().take(k).map(|(_, j)| j).collect()
}
