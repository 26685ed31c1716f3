//! Independent numerical oracles for the learners and metrics.

use dmp_core::eval::{classification_metrics, roc_auc, ConfusionMatrix};
use dmp_core::models::logistic::{gradient, penalized_log_likelihood};
use dmp_core::models::{
    train_random_forest, train_svm, ForestConfig, PolyKernel, SvmConfig, SvmModel,
};
use dmp_core::FeatureMatrix;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(rng: &mut ChaCha8Rng, n: usize, p: usize) -> FeatureMatrix {
    let names = (0..p).map(|j| format!("x{j}")).collect();
    let values = (0..n * p).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut labels: Vec<bool> = (0..n).map(|_| rng.random()).collect();
    labels[0] = true;
    labels[1] = false;
    FeatureMatrix::new(names, values, labels).unwrap()
}

#[test]
fn logistic_gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let n = rng.random_range(5..25);
        let p = rng.random_range(1..5);
        let m = random_matrix(&mut rng, n, p);
        let c = 10f64.powf(rng.random_range(-2.0..2.0));
        let theta: Vec<f64> = (0..=p).map(|_| rng.random_range(-2.0..2.0)).collect();
        let g = gradient(&m, theta[0], &theta[1..], c);
        for k in 0..=p {
            let h = 1e-5;
            let mut up = theta.clone();
            let mut dn = theta.clone();
            up[k] += h;
            dn[k] -= h;
            let fd = (penalized_log_likelihood(&m, up[0], &up[1..], c) - penalized_log_likelihood(&m, dn[0], &dn[1..], c))
                / (2.0 * h);
            let rel = (fd - g[k]).abs() / g[k].abs().max(1.0);
            assert!(rel < 1e-5, "component {k}: fd {fd} analytic {}", g[k]);
        }
    }
}

fn kernel_matrix(m: &FeatureMatrix, k: &PolyKernel) -> DMatrix<f64> {
    let n = m.n_rows();
    DMatrix::from_fn(n, n, |i, j| k.eval(m.row(i), m.row(j)))
}

/// Exact minimum of `½αᵀQα − Σα` subject to `yᵀα = 0`, `0 ≤ α ≤ C`, found by
/// enumerating which variables sit at 0, at C, or strictly between and
/// solving the stationarity system of every feasible assignment.
fn qp_oracle(m: &FeatureMatrix, kernel: &PolyKernel, c: f64) -> f64 {
    let n = m.n_rows();
    let y: Vec<f64> = m.labels().iter().map(|&l| if l { 1.0 } else { -1.0 }).collect();
    let k = kernel_matrix(m, kernel);
    let q = DMatrix::from_fn(n, n, |i, j| y[i] * y[j] * k[(i, j)]);
    let objective = |a: &[f64]| {
        let av = DVector::from_column_slice(a);
        0.5 * (av.transpose() * &q * &av)[(0, 0)] - a.iter().sum::<f64>()
    };
    let mut best = f64::INFINITY;
    for code in 0..3usize.pow(n as u32) {
        let mut state = vec![0u8; n];
        let mut c_ = code;
        for s in state.iter_mut() {
            *s = (c_ % 3) as u8;
            c_ /= 3;
        }
        let mut alpha: Vec<f64> = state.iter().map(|&s| if s == 2 { c } else { 0.0 }).collect();
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 1).collect();
        if free.is_empty() {
            if y.iter().zip(&alpha).map(|(a, b)| a * b).sum::<f64>().abs() > 1e-12 {
                continue;
            }
        } else {
            let f = free.len();
            let mut a = DMatrix::<f64>::zeros(f + 1, f + 1);
            let mut rhs = DVector::<f64>::zeros(f + 1);
            for (r, &i) in free.iter().enumerate() {
                for (s, &j) in free.iter().enumerate() {
                    a[(r, s)] = q[(i, j)];
                }
                a[(r, f)] = y[i];
                a[(f, r)] = y[i];
                rhs[r] = 1.0 - (0..n).filter(|j| state[*j] == 2).map(|j| q[(i, j)] * c).sum::<f64>();
            }
            rhs[f] = -(0..n).filter(|j| state[*j] == 2).map(|j| y[j] * c).sum::<f64>();
            let Some(sol) = a.lu().solve(&rhs) else { continue };
            if free.iter().enumerate().any(|(r, _)| !(sol[r] > -1e-12 && sol[r] < c + 1e-12)) {
                continue;
            }
            for (r, &i) in free.iter().enumerate() {
                alpha[i] = sol[r].clamp(0.0, c);
            }
        }
        best = best.min(objective(&alpha));
    }
    best
}

/// Dual objective recomputed from the support vectors alone.
fn model_objective(s: &SvmModel) -> f64 {
    let mut quad = 0.0;
    for (a, u) in s.dual_coef.iter().zip(&s.support_vectors) {
        for (b, v) in s.dual_coef.iter().zip(&s.support_vectors) {
            quad += a * b * s.kernel.eval(u, v);
        }
    }
    0.5 * quad - s.dual_coef.iter().map(|a| a.abs()).sum::<f64>()
}

#[test]
fn svm_dual_matches_enumerated_qp() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for trial in 0..20 {
        let n = rng.random_range(4..8);
        let m = random_matrix(&mut rng, n, 2);
        let c = [0.1, 1.0, 10.0][trial % 3];
        let kernel = PolyKernel { degree: [1, 2, 3][trial % 3], coef0: 1.0 };
        let s = train_svm(&m, &SvmConfig { c, kernel, tol: 1e-10, ..SvmConfig::default() }).unwrap();
        let oracle = qp_oracle(&m, &kernel, c);
        assert!(s.converged);
        assert!((s.dual_objective - oracle).abs() < 1e-4, "trial {trial}: smo {} oracle {oracle}", s.dual_objective);
        assert!((model_objective(&s) - oracle).abs() < 1e-4);
        assert!(s.dual_coef.iter().sum::<f64>().abs() < 1e-6);
    }
}

#[test]
fn svm_kkt_and_non_support_vector_removal() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let m = random_matrix(&mut rng, 30, 2);
    let cfg = SvmConfig { c: 2.0, kernel: PolyKernel { degree: 3, coef0: 1.0 }, tol: 1e-8, ..SvmConfig::default() };
    let s = train_svm(&m, &cfg).unwrap();
    let is_sv = |x: &[f64]| s.support_vectors.iter().any(|v| v.as_slice() == x);
    let mut keep = Vec::new();
    for i in 0..m.n_rows() {
        let y = if m.labels()[i] { 1.0 } else { -1.0 };
        if !is_sv(m.row(i)) {
            assert!(y * s.decision_value(m.row(i)) >= 1.0 - 1e-6);
        } else {
            keep.push(i);
        }
    }
    let reduced = train_svm(&m.select_rows(&keep), &cfg).unwrap();
    for a in 0..=10 {
        for b in 0..=10 {
            let x = [a as f64 / 5.0 - 1.0, b as f64 / 5.0 - 1.0];
            assert!((s.decision_value(&x) - reduced.decision_value(&x)).abs() < 1e-6);
        }
    }
}

fn rank_statistic(scores: &[f64], labels: &[bool]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for i in 0..scores.len() {
        for j in 0..scores.len() {
            if labels[i] && !labels[j] {
                pairs += 1.0;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
    }
    wins / pairs
}

#[test]
fn auc_matches_pairwise_rank_statistic() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let n = rng.random_range(2..40);
        let scores: Vec<f64> = (0..n).map(|_| (rng.random_range(0..8) as f64) / 4.0).collect();
        let mut labels: Vec<bool> = (0..n).map(|_| rng.random()).collect();
        labels[0] = true;
        labels[1] = false;
        let auc = roc_auc(&scores, &labels).unwrap();
        assert!((auc - rank_statistic(&scores, &labels)).abs() < 1e-12);
    }
}

#[test]
fn metric_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..200 {
        let cm = ConfusionMatrix {
            tp: rng.random_range(1..50),
            tn: rng.random_range(0..50),
            fp: rng.random_range(0..50),
            fn_: rng.random_range(0..50),
        };
        let m = classification_metrics(&cm).unwrap();
        let total = (cm.tp + cm.tn + cm.fp + cm.fn_) as f64;
        assert!((m.accuracy - (cm.tp + cm.tn) as f64 / total).abs() < 1e-12);
        let p = cm.tp as f64 / (cm.tp + cm.fp) as f64;
        let r = cm.tp as f64 / (cm.tp + cm.fn_) as f64;
        assert!((m.precision_pos - p).abs() < 1e-12);
        assert!((m.recall_pos - r).abs() < 1e-12);
        assert!((m.f_measure - 2.0 * p * r / (p + r)).abs() < 1e-12);
    }
}

/// True when some tree of depth ≤ 2 with axis-aligned midpoint splits
/// classifies every row correctly.
fn depth_two_separable(m: &FeatureMatrix) -> bool {
    let pure = |idx: &[usize]| idx.iter().all(|&i| m.labels()[i]) || idx.iter().all(|&i| !m.labels()[i]);
    let splits = |idx: &[usize]| {
        let mut out = Vec::new();
        for f in 0..m.n_cols() {
            for &i in idx {
                let t = m.get(i, f);
                let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&k| m.get(k, f) <= t);
                if !r.is_empty() {
                    out.push((l, r));
                }
            }
        }
        out
    };
    let all: Vec<usize> = (0..m.n_rows()).collect();
    if pure(&all) {
        return true;
    }
    splits(&all).into_iter().any(|(l, r)| {
        let ok = |side: &[usize]| pure(side) || splits(side).iter().any(|(a, b)| pure(a) && pure(b));
        ok(&l) && ok(&r)
    })
}

#[test]
fn forest_fits_depth_two_separable_set() {
    let rows: Vec<Vec<f64>> =
        (0..16).map(|i| vec![(i % 4) as f64, (i / 4) as f64]).collect();
    let labels: Vec<bool> = rows.iter().map(|r| r[0] >= 2.0 && r[1] >= 1.0).collect();
    let m = FeatureMatrix::from_rows(vec!["a".into(), "b".into()], &rows, labels).unwrap();
    assert!(depth_two_separable(&m));
    let f = train_random_forest(&m, &ForestConfig { n_estimators: 20, seed: 1, ..ForestConfig::default() }).unwrap();
    let correct = (0..m.n_rows()).filter(|&i| f.predict(m.row(i)) == m.labels()[i]).count();
    assert_eq!(correct, m.n_rows());
}
