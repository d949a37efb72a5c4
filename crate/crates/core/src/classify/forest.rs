//! Random forest of unpruned Gini trees grown on bootstrap samples.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::matrix::Matrix;
use crate::rng::{stream, Domain, StreamRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub trees: usize,
    pub min_leaf: usize,
    /// Features tried per split; `None` means ⌈√d⌉.
    pub max_features: Option<usize>,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            trees: 100,
            min_leaf: 1,
            max_features: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        positive: bool,
    },
    Split {
        feature: usize,
        threshold: f64,
        /// Child taken when `x[feature] <= threshold`.
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn vote(&self, x: &[f64]) -> bool {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { positive } => return positive,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[feature] <= threshold { left } else { right },
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
}

impl ForestModel {
    /// Fraction of trees voting spammer, minus one half.
    pub fn score(&self, x: &[f64]) -> f64 {
        let votes = self.trees.iter().filter(|t| t.vote(x)).count();
        votes as f64 / self.trees.len() as f64 - 0.5
    }
}

pub(crate) fn fit(x: &Matrix, labels: &[Label], weights: &[f64], params: &ForestParams, seed: u64) -> ForestModel {
    let d = x.cols();
    let m = params.max_features.unwrap_or_else(|| ceil_sqrt(d)).clamp(1, d.max(1));
    let trees = (0..params.trees)
        .map(|t| {
            let mut rng = stream(seed, Domain::Forest, t as u64);
            let n = x.rows();
            let bootstrap: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            grow(x, labels, weights, bootstrap, m, params.min_leaf.max(1), &mut rng)
        })
        .collect();
    ForestModel { trees }
}

fn ceil_sqrt(d: usize) -> usize {
    let mut r = 0;
    while r * r < d {
        r += 1;
    }
    r
}

fn gini(pos: f64, total: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    let p = pos / total;
    2.0 * p * (1.0 - p)
}

struct Split {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

/// Best split of `rows` on `feature`, by weighted child Gini. Ties keep the
/// lowest threshold.
fn best_split_on(
    x: &Matrix,
    labels: &[Label],
    weights: &[f64],
    rows: &mut [usize],
    feature: usize,
    min_leaf: usize,
) -> Option<Split> {
    rows.sort_by(|&a, &b| x.get(a, feature).total_cmp(&x.get(b, feature)).then(a.cmp(&b)));
    let total: f64 = rows.iter().map(|&i| weights[i]).sum();
    let total_pos: f64 = rows
        .iter()
        .filter(|&&i| labels[i].is_positive())
        .map(|&i| weights[i])
        .sum();
    let mut left_w = 0.0;
    let mut left_pos = 0.0;
    let mut best: Option<Split> = None;
    for j in 0..rows.len() - 1 {
        let i = rows[j];
        left_w += weights[i];
        if labels[i].is_positive() {
            left_pos += weights[i];
        }
        let v = x.get(i, feature);
        let nv = x.get(rows[j + 1], feature);
        if nv <= v || j + 1 < min_leaf || rows.len() - (j + 1) < min_leaf {
            continue;
        }
        let right_w = total - left_w;
        let impurity = left_w * gini(left_pos, left_w) + right_w * gini(total_pos - left_pos, right_w);
        if best.as_ref().is_none_or(|b| impurity < b.impurity) {
            best = Some(Split {
                feature,
                threshold: v + (nv - v) / 2.0,
                impurity,
            });
        }
    }
    best
}

fn grow(
    x: &Matrix,
    labels: &[Label],
    weights: &[f64],
    bootstrap: Vec<usize>,
    m: usize,
    min_leaf: usize,
    rng: &mut StreamRng,
) -> Tree {
    let d = x.cols();
    let mut nodes = vec![Node::Leaf { positive: true }];
    let mut stack = vec![(0usize, bootstrap)];
    while let Some((at, mut rows)) = stack.pop() {
        let total: f64 = rows.iter().map(|&i| weights[i]).sum();
        let pos: f64 = rows
            .iter()
            .filter(|&&i| labels[i].is_positive())
            .map(|&i| weights[i])
            .sum();
        let leaf = Node::Leaf {
            positive: pos >= total - pos,
        };
        if pos == 0.0 || pos == total || rows.len() < 2 * min_leaf {
            nodes[at] = leaf;
            continue;
        }
        let mut candidates: Vec<usize> = sample(rng, d, m).into_vec();
        candidates.sort_unstable();
        let mut best = pick(x, labels, weights, &mut rows, &candidates, min_leaf);
        if best.is_none() && m < d {
            // None of the sampled features can split here; fall back to the rest.
            let rest: Vec<usize> = (0..d).filter(|f| candidates.binary_search(f).is_err()).collect();
            best = pick(x, labels, weights, &mut rows, &rest, min_leaf);
        }
        let Some(split) = best else {
            nodes[at] = leaf;
            continue;
        };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&i| x.get(i, split.feature) <= split.threshold);
        let left = nodes.len();
        nodes.push(Node::Leaf { positive: true });
        let right = nodes.len();
        nodes.push(Node::Leaf { positive: true });
        nodes[at] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        stack.push((right, right_rows));
        stack.push((left, left_rows));
    }
    Tree { nodes }
}

/// Best split over `features` (ascending); ties keep the lowest feature index.
fn pick(
    x: &Matrix,
    labels: &[Label],
    weights: &[f64],
    rows: &mut [usize],
    features: &[usize],
    min_leaf: usize,
) -> Option<Split> {
    let mut best: Option<Split> = None;
    for &f in features {
        if let Some(s) = best_split_on(x, labels, weights, rows, f, min_leaf) {
            if best.as_ref().is_none_or(|b| s.impurity < b.impurity) {
                best = Some(s);
            }
        }
    }
    best
}
