//! L2-regularized logistic regression fitted by damped Newton ascent.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticConfig {
    /// Inverse regularization strength.
    pub c: f64,
    /// Convergence threshold on the gradient max-norm.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig { c: 1.0, tol: 1e-6, max_iter: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub c: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Penalized log-likelihood after each accepted step, starting at the origin.
    pub objective_history: Vec<f64>,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn linear(row: &[f64], intercept: f64, coef: &[f64]) -> f64 {
    intercept + row.iter().zip(coef).map(|(a, b)| a * b).sum::<f64>()
}

/// `Σ [y·z − ln(1 + e^z)] − ‖β‖²/(2C)` with `z = β0 + β·x`; the intercept is not penalized.
pub fn penalized_log_likelihood(m: &FeatureMatrix, intercept: f64, coef: &[f64], c: f64) -> f64 {
    let ll: f64 = m
        .rows()
        .zip(m.labels())
        .map(|(r, &y)| {
            let z = linear(r, intercept, coef);
            (if y { z } else { 0.0 }) - softplus(z)
        })
        .sum();
    ll - coef.iter().map(|b| b * b).sum::<f64>() / (2.0 * c)
}

/// Gradient of [`penalized_log_likelihood`]: intercept first, then coefficients.
pub fn gradient(m: &FeatureMatrix, intercept: f64, coef: &[f64], c: f64) -> Vec<f64> {
    let mut g = vec![0.0; coef.len() + 1];
    for (r, &y) in m.rows().zip(m.labels()) {
        let resid = f64::from(u8::from(y)) - sigmoid(linear(r, intercept, coef));
        g[0] += resid;
        for (gj, xj) in g[1..].iter_mut().zip(r) {
            *gj += resid * xj;
        }
    }
    for (gj, b) in g[1..].iter_mut().zip(coef) {
        *gj -= b / c;
    }
    g
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

pub fn train_logistic_regression(m: &FeatureMatrix, cfg: &LogisticConfig) -> Result<LogisticModel> {
    if !(cfg.c > 0.0 && cfg.c.is_finite()) {
        return Err(Error::Config(format!("C must be positive, got {}", cfg.c)));
    }
    if cfg.tol.is_nan() || cfg.tol <= 0.0 {
        return Err(Error::Config("tol must be positive".into()));
    }
    if m.n_rows() == 0 {
        return Err(Error::Domain("cannot fit logistic regression on zero rows".into()));
    }
    let p = m.n_cols();
    let mut theta = vec![0.0; p + 1];
    let objective = |t: &[f64]| penalized_log_likelihood(m, t[0], &t[1..], cfg.c);
    let mut f = objective(&theta);
    let mut history = vec![f];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iter {
        let g = gradient(m, theta[0], &theta[1..], cfg.c);
        if max_norm(&g) < cfg.tol {
            converged = true;
            break;
        }
        iterations += 1;
        let dir = newton_direction(m, &theta, &g, cfg.c).unwrap_or_else(|| g.clone());
        match line_search(&theta, &dir, f, &objective).or_else(|| line_search(&theta, &g, f, &objective)) {
            Some((next, fnext)) => {
                theta = next;
                f = fnext;
                history.push(f);
            }
            None => break,
        }
    }
    if !converged {
        converged = max_norm(&gradient(m, theta[0], &theta[1..], cfg.c)) < cfg.tol;
    }
    Ok(LogisticModel {
        intercept: theta[0],
        coefficients: theta[1..].to_vec(),
        c: cfg.c,
        converged,
        iterations,
        objective_history: history,
    })
}

/// Solves `(X̃ᵀ S X̃ + P) d = g` where `P` penalizes all but the intercept.
fn newton_direction(m: &FeatureMatrix, theta: &[f64], g: &[f64], c: f64) -> Option<Vec<f64>> {
    let d = theta.len();
    let mut h = DMatrix::<f64>::zeros(d, d);
    let mut xt = vec![1.0; d];
    for r in m.rows() {
        xt[1..].copy_from_slice(r);
        let s = sigmoid(linear(r, theta[0], &theta[1..]));
        let w = s * (1.0 - s);
        for a in 0..d {
            let wa = w * xt[a];
            for b in a..d {
                h[(a, b)] += wa * xt[b];
            }
        }
    }
    for a in 0..d {
        for b in 0..a {
            h[(a, b)] = h[(b, a)];
        }
        if a > 0 {
            h[(a, a)] += 1.0 / c;
        }
    }
    let rhs = DVector::from_column_slice(g);
    let scale = (0..d).map(|i| h[(i, i)]).fold(0.0, f64::max).max(1.0);
    for ridge in [0.0, 1e-10, 1e-8, 1e-6] {
        let mut hr = h.clone();
        for i in 0..d {
            hr[(i, i)] += ridge * scale;
        }
        if let Some(ch) = hr.cholesky() {
            let sol = ch.solve(&rhs);
            if sol.iter().all(|v| v.is_finite()) {
                return Some(sol.iter().copied().collect());
            }
        }
    }
    None
}

/// Backtracks from a full step until the objective does not decrease.
fn line_search(theta: &[f64], dir: &[f64], f0: f64, objective: &impl Fn(&[f64]) -> f64) -> Option<(Vec<f64>, f64)> {
    let mut step = 1.0;
    for _ in 0..50 {
        let cand: Vec<f64> = theta.iter().zip(dir).map(|(t, d)| t + step * d).collect();
        let f = objective(&cand);
        if f.is_finite() && f >= f0 && cand != theta {
            return Some((cand, f));
        }
        step *= 0.5;
    }
    None
}

impl LogisticModel {
    pub fn decision_value(&self, x: &[f64]) -> f64 {
        linear(x, self.intercept, &self.coefficients)
    }

    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.decision_value(x))
    }

    pub fn predict(&self, x: &[f64]) -> bool {
        self.predict_proba(x) >= 0.5
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data() -> FeatureMatrix {
        FeatureMatrix::from_rows(
            vec!["a".into(), "b".into()],
            &[
                vec![0.1, 0.9],
                vec![0.3, 0.2],
                vec![0.4, 0.7],
                vec![0.6, 0.1],
                vec![0.8, 0.5],
                vec![0.9, 0.3],
                vec![0.5, 0.5],
                vec![0.2, 0.4],
            ],
            vec![false, false, true, false, true, true, true, false],
        )
        .unwrap()
    }

    #[test]
    fn zero_model_is_half() {
        let m = LogisticModel {
            intercept: 0.0,
            coefficients: vec![0.0; 2],
            c: 1.0,
            converged: true,
            iterations: 0,
            objective_history: vec![],
        };
        assert_eq!(m.predict_proba(&[3.0, -7.0]), 0.5);
    }

    #[test]
    fn converges_to_stationary_point() {
        let m = data();
        let fit = train_logistic_regression(&m, &LogisticConfig::default()).unwrap();
        assert!(fit.converged);
        let g = gradient(&m, fit.intercept, &fit.coefficients, 1.0);
        assert!(max_norm(&g) < 1e-6);
        assert!(fit.objective_history.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn separable_data_with_huge_c_flags_or_fits() {
        let m = FeatureMatrix::from_rows(vec!["a".into()], &[vec![0.0], vec![1.0]], vec![false, true]).unwrap();
        let fit = train_logistic_regression(&m, &LogisticConfig { c: 1e12, tol: 1e-12, max_iter: 5 }).unwrap();
        assert!(!fit.converged);
        assert!(fit.predict(&[1.0]) && !fit.predict(&[0.0]));
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(-1000.0), 0.0);
        assert_eq!(sigmoid(1000.0), 1.0);
        assert!((softplus(-800.0)).abs() < 1e-300);
        assert_eq!(softplus(800.0), 800.0);
    }

    #[test]
    fn rejects_bad_c() {
        assert!(train_logistic_regression(&data(), &LogisticConfig { c: 0.0, ..Default::default() }).is_err());
    }
}
