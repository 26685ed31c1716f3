//! CART decision tree for binary labels over weighted samples.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Gini,
    Entropy,
}

impl Criterion {
    /// Impurity of a node with the given weighted class totals.
    pub fn impurity(self, pos: f64, neg: f64) -> f64 {
        let total = pos + neg;
        if total <= 0.0 {
            return 0.0;
        }
        let (p, q) = (pos / total, neg / total);
        match self {
            Criterion::Gini => 1.0 - p * p - q * q,
            Criterion::Entropy => -xlog2x(p) - xlog2x(q),
        }
    }
}

fn xlog2x(p: f64) -> f64 {
    if p > 0.0 {
        p * p.log2()
    } else {
        0.0
    }
}

impl std::fmt::Display for Criterion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Criterion::Gini => "gini",
            Criterion::Entropy => "entropy",
        })
    }
}

impl std::str::FromStr for Criterion {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gini" => Ok(Criterion::Gini),
            "entropy" => Ok(Criterion::Entropy),
            _ => Err(Error::Config(format!("unknown criterion '{s}'"))),
        }
    }
}

/// Number of candidate features examined per split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaxFeatures {
    All,
    Sqrt,
    Log2,
}

impl MaxFeatures {
    pub fn resolve(self, n_features: usize) -> usize {
        let n = n_features as f64;
        let k = match self {
            MaxFeatures::All => n_features,
            MaxFeatures::Sqrt => n.sqrt() as usize,
            MaxFeatures::Log2 => n.log2() as usize,
        };
        k.clamp(1, n_features.max(1))
    }
}

impl std::fmt::Display for MaxFeatures {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MaxFeatures::All => "all",
            MaxFeatures::Sqrt => "sqrt",
            MaxFeatures::Log2 => "log2",
        })
    }
}

impl std::str::FromStr for MaxFeatures {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "all" | "none" => Ok(MaxFeatures::All),
            "sqrt" | "auto" => Ok(MaxFeatures::Sqrt),
            "log2" => Ok(MaxFeatures::Log2),
            _ => Err(Error::Config(format!("unknown max_features '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    pub criterion: Criterion,
    pub max_depth: Option<usize>,
    pub max_features: MaxFeatures,
    /// Nodes with less total sample weight than this become leaves.
    pub min_samples_split: f64,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig { criterion: Criterion::Gini, max_depth: None, max_features: MaxFeatures::All, min_samples_split: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    /// Weighted class totals of the training rows reaching this leaf.
    Leaf { pos: f64, neg: f64 },
    /// Rows with `x[feature] <= threshold` go left.
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<TreeNode>,
    n_features: usize,
    /// Total weighted impurity decrease per feature.
    impurity_decrease: Vec<f64>,
}

struct Work {
    node: usize,
    start: usize,
    end: usize,
    depth: usize,
}

impl DecisionTree {
    /// Fits on every row of `x`, each with weight 1.
    pub fn fit<R: Rng>(x: &FeatureMatrix, cfg: &TreeConfig, rng: &mut R) -> DecisionTree {
        Self::fit_weighted(x, &vec![1.0; x.n_rows()], cfg, rng)
    }

    /// Rows with zero weight are ignored.
    pub fn fit_weighted<R: Rng>(x: &FeatureMatrix, weights: &[f64], cfg: &TreeConfig, rng: &mut R) -> DecisionTree {
        assert_eq!(weights.len(), x.n_rows(), "one weight per row");
        let p = x.n_cols();
        let mut samples: Vec<usize> = (0..x.n_rows()).filter(|&i| weights[i] > 0.0).collect();
        let labels = x.labels();
        let mf = cfg.max_features.resolve(p);
        let mut nodes = vec![TreeNode::Leaf { pos: 0.0, neg: 0.0 }];
        let mut importance = vec![0.0; p];
        let mut stack = vec![Work { node: 0, start: 0, end: samples.len(), depth: 0 }];
        let mut buf: Vec<(f64, bool, f64)> = Vec::with_capacity(samples.len());
        let mut features: Vec<usize> = (0..p).collect();

        while let Some(w) = stack.pop() {
            let node_rows = &samples[w.start..w.end];
            let (pos, neg) = totals(node_rows, labels, weights);
            nodes[w.node] = TreeNode::Leaf { pos, neg };
            let depth_ok = cfg.max_depth.is_none_or(|d| w.depth < d);
            if pos == 0.0 || neg == 0.0 || !depth_ok || pos + neg < cfg.min_samples_split {
                continue;
            }
            let parent = (pos + neg) * cfg.criterion.impurity(pos, neg);

            let mut best: Option<(f64, usize, f64)> = None;
            features.shuffle(rng);
            let mut examined = 0;
            for &f in &features {
                if examined >= mf {
                    break;
                }
                buf.clear();
                buf.extend(node_rows.iter().map(|&i| (x.get(i, f), labels[i], weights[i])));
                buf.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
                if buf[0].0 == buf[buf.len() - 1].0 {
                    continue;
                }
                examined += 1;
                let (mut lp, mut ln) = (0.0, 0.0);
                for k in 0..buf.len() - 1 {
                    let (v, y, wt) = buf[k];
                    if y {
                        lp += wt;
                    } else {
                        ln += wt;
                    }
                    let next = buf[k + 1].0;
                    if v == next {
                        continue;
                    }
                    let (rp, rn) = (pos - lp, neg - ln);
                    let children =
                        (lp + ln) * cfg.criterion.impurity(lp, ln) + (rp + rn) * cfg.criterion.impurity(rp, rn);
                    let gain = parent - children;
                    if best.is_none_or(|(g, _, _)| gain > g) {
                        let mut thr = 0.5 * (v + next);
                        if thr >= next {
                            thr = v;
                        }
                        best = Some((gain, f, thr));
                    }
                }
            }
            let Some((gain, feature, threshold)) = best else { continue };
            importance[feature] += gain.max(0.0);

            let slice = &mut samples[w.start..w.end];
            let mut mid = 0;
            for k in 0..slice.len() {
                if x.get(slice[k], feature) <= threshold {
                    slice.swap(k, mid);
                    mid += 1;
                }
            }
            let left = nodes.len();
            nodes.push(TreeNode::Leaf { pos: 0.0, neg: 0.0 });
            nodes.push(TreeNode::Leaf { pos: 0.0, neg: 0.0 });
            nodes[w.node] = TreeNode::Split { feature, threshold, left, right: left + 1 };
            stack.push(Work { node: left + 1, start: w.start + mid, end: w.end, depth: w.depth + 1 });
            stack.push(Work { node: left, start: w.start, end: w.start + mid, depth: w.depth + 1 });
        }
        DecisionTree { nodes, n_features: p, impurity_decrease: importance }
    }

    fn leaf(&self, x: &[f64]) -> (f64, f64) {
        let mut n = 0;
        loop {
            match self.nodes[n] {
                TreeNode::Leaf { pos, neg } => return (pos, neg),
                TreeNode::Split { feature, threshold, left, right } => {
                    n = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    /// Positive share of the training weight in the leaf reached by `x`.
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        let (pos, neg) = self.leaf(x);
        if pos + neg > 0.0 {
            pos / (pos + neg)
        } else {
            0.5
        }
    }

    /// Majority class of the reached leaf; an even leaf votes positive.
    pub fn predict(&self, x: &[f64]) -> bool {
        let (pos, neg) = self.leaf(x);
        pos >= neg
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[TreeNode], n: usize) -> usize {
            match nodes[n] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + go(nodes, left).max(go(nodes, right)),
            }
        }
        go(&self.nodes, 0)
    }

    pub fn impurity_decrease(&self) -> &[f64] {
        &self.impurity_decrease
    }
}

fn totals(rows: &[usize], labels: &[bool], weights: &[f64]) -> (f64, f64) {
    rows.iter().fold((0.0, 0.0), |(p, n), &i| if labels[i] { (p + weights[i], n) } else { (p, n + weights[i]) })
}
