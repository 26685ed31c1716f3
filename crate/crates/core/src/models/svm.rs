//! Soft-margin SVM with a polynomial kernel, trained by SMO with
//! second-order working-set selection.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;

const TAU: f64 = 1e-12;

/// `K(u, v) = (u·v + coef0)^degree`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolyKernel {
    pub degree: u32,
    pub coef0: f64,
}

impl Default for PolyKernel {
    fn default() -> Self {
        PolyKernel { degree: 3, coef0: 1.0 }
    }
}

impl PolyKernel {
    #[inline]
    pub fn eval(&self, u: &[f64], v: &[f64]) -> f64 {
        let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
        (dot + self.coef0).powi(self.degree as i32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    pub c: f64,
    pub kernel: PolyKernel,
    /// Stop when the maximal KKT violation falls below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Kernel row cache budget in bytes.
    pub cache_bytes: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig { c: 1.0, kernel: PolyKernel::default(), tol: 1e-3, max_iter: 1_000_000, cache_bytes: 256 << 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub support_vectors: Vec<Vec<f64>>,
    /// `αᵢ·yᵢ` per support vector.
    pub dual_coef: Vec<f64>,
    pub bias: f64,
    pub kernel: PolyKernel,
    pub c: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Dual objective `½ αᵀQα − Σ α` at the solution (minimization form).
    pub dual_objective: f64,
}

impl SvmModel {
    /// `Σ αᵢ yᵢ K(xᵢ, x) + b`.
    pub fn decision_value(&self, x: &[f64]) -> f64 {
        self.support_vectors.iter().zip(&self.dual_coef).map(|(sv, a)| a * self.kernel.eval(sv, x)).sum::<f64>()
            + self.bias
    }

    /// Positive when the decision value is non-negative.
    pub fn predict(&self, x: &[f64]) -> bool {
        self.decision_value(x) >= 0.0
    }
}

struct KernelCache<'a> {
    x: &'a FeatureMatrix,
    kernel: PolyKernel,
    rows: HashMap<usize, (Vec<f64>, u64)>,
    capacity: usize,
    clock: u64,
}

impl<'a> KernelCache<'a> {
    fn new(x: &'a FeatureMatrix, kernel: PolyKernel, bytes: usize) -> Self {
        let per_row = (x.n_rows() * 8).max(1);
        KernelCache { x, kernel, rows: HashMap::new(), capacity: (bytes / per_row).max(2), clock: 0 }
    }

    fn row(&mut self, i: usize) -> &[f64] {
        self.clock += 1;
        let now = self.clock;
        if !self.rows.contains_key(&i) {
            if self.rows.len() >= self.capacity {
                let victim = *self.rows.iter().min_by_key(|(_, (_, t))| *t).map(|(k, _)| k).expect("non-empty cache");
                self.rows.remove(&victim);
            }
            let xi = self.x.row(i);
            let r = self.x.rows().map(|xj| self.kernel.eval(xi, xj)).collect();
            self.rows.insert(i, (r, now));
        }
        let e = self.rows.get_mut(&i).expect("just inserted");
        e.1 = now;
        &e.0
    }
}

/// Trains on all rows of `m` with labels mapped to ±1. Identical
/// (row, label) pairs are merged into one variable whose upper bound is
/// `C` times the multiplicity, which leaves the optimum unchanged.
pub fn train_svm(m: &FeatureMatrix, cfg: &SvmConfig) -> Result<SvmModel> {
    if !(cfg.c > 0.0 && cfg.c.is_finite()) {
        return Err(Error::Config(format!("C must be positive, got {}", cfg.c)));
    }
    if cfg.kernel.degree == 0 {
        return Err(Error::Config("polynomial degree must be at least 1".into()));
    }
    let (pos, neg) = m.class_counts();
    if pos == 0 || neg == 0 {
        return Err(Error::Domain("SVM training needs both classes".into()));
    }
    let (x, mult) = merge_duplicates(m);
    let n = x.n_rows();
    let y: Vec<f64> = x.labels().iter().map(|&l| if l { 1.0 } else { -1.0 }).collect();
    let ub: Vec<f64> = mult.iter().map(|&k| cfg.c * k as f64).collect();
    let qd: Vec<f64> = x.rows().map(|r| cfg.kernel.eval(r, r)).collect();
    let mut cache = KernelCache::new(&x, cfg.kernel, cfg.cache_bytes);

    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let mut iterations = 0;
    let mut converged = false;
    let in_up = |t: usize, a: &[f64]| (y[t] > 0.0 && a[t] < ub[t]) || (y[t] < 0.0 && a[t] > 0.0);
    let in_low = |t: usize, a: &[f64]| (y[t] > 0.0 && a[t] > 0.0) || (y[t] < 0.0 && a[t] < ub[t]);

    while iterations < cfg.max_iter {
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..n {
            if in_up(t, &alpha) && -y[t] * grad[t] > gmax {
                gmax = -y[t] * grad[t];
                i = t;
            }
        }
        if i == usize::MAX {
            converged = true;
            break;
        }
        let ki = cache.row(i).to_vec();
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut best = f64::INFINITY;
        for t in 0..n {
            if !in_low(t, &alpha) {
                continue;
            }
            gmax2 = gmax2.max(y[t] * grad[t]);
            let b = gmax + y[t] * grad[t];
            if b > 0.0 {
                let a = qd[i] + qd[t] - 2.0 * ki[t];
                let a = if a > 0.0 { a } else { TAU };
                if -(b * b) / a < best {
                    best = -(b * b) / a;
                    j = t;
                }
            }
        }
        if gmax + gmax2 < cfg.tol || j == usize::MAX {
            converged = true;
            break;
        }
        iterations += 1;
        let kj = cache.row(j).to_vec();
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let (ci, cj) = (ub[i], ub[j]);
        let qij = y[i] * y[j] * ki[j];
        if y[i] != y[j] {
            let quad = (qd[i] + qd[j] + 2.0 * qij).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > ci - cj {
                if alpha[i] > ci {
                    alpha[i] = ci;
                    alpha[j] = ci - diff;
                }
            } else if alpha[j] > cj {
                alpha[j] = cj;
                alpha[i] = cj + diff;
            }
        } else {
            let quad = (qd[i] + qd[j] - 2.0 * qij).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > ci {
                if alpha[i] > ci {
                    alpha[i] = ci;
                    alpha[j] = sum - ci;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > cj {
                if alpha[j] > cj {
                    alpha[j] = cj;
                    alpha[i] = sum - cj;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += y[t] * (y[i] * ki[t] * di + y[j] * kj[t] * dj);
        }
    }

    let bias = -rho(&alpha, &grad, &y, &ub);
    let dual_objective = alpha.iter().zip(&grad).map(|(a, g)| 0.5 * a * (g - 1.0)).sum();
    let sv: Vec<usize> = (0..n).filter(|&t| alpha[t] > 0.0).collect();
    Ok(SvmModel {
        support_vectors: sv.iter().map(|&t| x.row(t).to_vec()).collect(),
        dual_coef: sv.iter().map(|&t| alpha[t] * y[t]).collect(),
        bias,
        kernel: cfg.kernel,
        c: cfg.c,
        converged,
        iterations,
        dual_objective,
    })
}

/// Offset from free support vectors, or the midpoint of the feasible interval.
fn rho(alpha: &[f64], grad: &[f64], y: &[f64], ub: &[f64]) -> f64 {
    let (mut upper, mut lower) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut sum) = (0usize, 0.0);
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= ub[t] {
            if y[t] < 0.0 {
                upper = upper.min(yg);
            } else {
                lower = lower.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                upper = upper.min(yg);
            } else {
                lower = lower.max(yg);
            }
        } else {
            free += 1;
            sum += yg;
        }
    }
    if free > 0 {
        sum / free as f64
    } else {
        0.5 * (upper + lower)
    }
}

fn merge_duplicates(m: &FeatureMatrix) -> (FeatureMatrix, Vec<usize>) {
    let mut index: HashMap<(Vec<u64>, bool), usize> = HashMap::new();
    let mut keep = Vec::new();
    let mut mult = Vec::new();
    for i in 0..m.n_rows() {
        let key = (m.row(i).iter().map(|v| v.to_bits()).collect(), m.labels()[i]);
        match index.get(&key) {
            Some(&k) => mult[k] += 1,
            None => {
                index.insert(key, keep.len());
                keep.push(i);
                mult.push(1);
            }
        }
    }
    (m.select_rows(&keep), mult)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(c: f64, degree: u32) -> SvmConfig {
        SvmConfig { c, kernel: PolyKernel { degree, coef0: 1.0 }, tol: 1e-10, ..Default::default() }
    }

    #[test]
    fn two_point_margin() {
        let m = FeatureMatrix::from_rows(vec!["x".into()], &[vec![0.0], vec![1.0]], vec![false, true]).unwrap();
        let s = train_svm(&m, &cfg(1e6, 1)).unwrap();
        assert!(s.converged);
        assert!(s.decision_value(&[0.5]).abs() < 1e-9);
        assert!((s.decision_value(&[1.0]) - 1.0).abs() < 1e-9);
        assert!((s.decision_value(&[0.0]) + 1.0).abs() < 1e-9);
        assert!(s.dual_coef.iter().sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn duplicates_merge_without_changing_solution() {
        let rows = [vec![0.0, 0.0], vec![1.0, 0.2], vec![0.2, 1.0], vec![0.9, 0.8], vec![0.5, 0.6]];
        let labels = vec![false, false, true, true, false];
        let m = FeatureMatrix::from_rows(vec!["a".into(), "b".into()], &rows, labels.clone()).unwrap();
        let doubled = {
            let mut d = m.clone();
            d.append(&m).unwrap();
            d
        };
        let a = train_svm(&m, &cfg(2.0, 2)).unwrap();
        let b = train_svm(&doubled, &cfg(1.0, 2)).unwrap();
        for r in &rows {
            assert!((a.decision_value(r) - b.decision_value(r)).abs() < 1e-6);
        }
    }

    #[test]
    fn box_constraints_hold() {
        let rows: Vec<Vec<f64>> = (0..12).map(|i| vec![(i % 4) as f64 / 3.0, (i / 4) as f64 / 2.0]).collect();
        let labels: Vec<bool> = (0..12).map(|i| (i * 7) % 3 == 0).collect();
        let m = FeatureMatrix::from_rows(vec!["a".into(), "b".into()], &rows, labels).unwrap();
        let s = train_svm(&m, &cfg(0.5, 3)).unwrap();
        assert!(s.dual_coef.iter().all(|a| a.abs() <= 0.5 + 1e-12));
        assert!(s.dual_coef.iter().sum::<f64>().abs() < 1e-6);
    }

    #[test]
    fn tiny_cache_matches_full_cache() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![(i as f64 * 0.37).sin(), (i as f64 * 0.91).cos()]).collect();
        let labels: Vec<bool> = (0..10).map(|i| i % 3 == 0).collect();
        let m = FeatureMatrix::from_rows(vec!["a".into(), "b".into()], &rows, labels).unwrap();
        let full = train_svm(&m, &cfg(1.0, 3)).unwrap();
        let tiny = train_svm(&m, &SvmConfig { cache_bytes: 0, ..cfg(1.0, 3) }).unwrap();
        assert_eq!(full, tiny);
    }

    #[test]
    fn rejects_single_class_and_bad_c() {
        let m = FeatureMatrix::from_rows(vec!["x".into()], &[vec![0.0], vec![1.0]], vec![true, true]).unwrap();
        assert!(train_svm(&m, &SvmConfig::default()).is_err());
        let m = FeatureMatrix::from_rows(vec!["x".into()], &[vec![0.0], vec![1.0]], vec![false, true]).unwrap();
        assert!(train_svm(&m, &SvmConfig { c: -1.0, ..Default::default() }).is_err());
    }
}
