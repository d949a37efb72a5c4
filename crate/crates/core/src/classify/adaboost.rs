//! Discrete AdaBoost over depth-1 decision stumps.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaboostParams {
    pub rounds: usize,
}

impl Default for AdaboostParams {
    fn default() -> Self {
        AdaboostParams { rounds: 100 }
    }
}

/// Votes `polarity` when `x[feature] > threshold`, `-polarity` otherwise.
/// A threshold of `-inf` makes a constant stump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stump {
    pub feature: usize,
    pub threshold: f64,
    pub polarity: f64,
    pub alpha: f64,
}

impl Stump {
    pub fn vote(&self, x: &[f64]) -> f64 {
        if x[self.feature] > self.threshold {
            self.polarity
        } else {
            -self.polarity
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaboostModel {
    pub stumps: Vec<Stump>,
}

impl AdaboostModel {
    pub fn score(&self, x: &[f64]) -> f64 {
        self.stumps.iter().map(|s| s.alpha * s.vote(x)).sum()
    }
}

/// Smallest weighted error a stump can reach is floored here so a perfect
/// stump still gets a finite vote.
const MIN_ERROR: f64 = 1e-10;

struct Candidate {
    feature: usize,
    threshold: f64,
    polarity: f64,
    error: f64,
}

/// Lowest-error stump. Ties keep the lowest feature index, then the lowest
/// threshold, then positive polarity.
fn best_stump(x: &Matrix, y: &[f64], w: &[f64], sorted: &[Vec<usize>]) -> Candidate {
    let total: f64 = w.iter().sum();
    // Weighted mass of positives; with threshold -inf every sample votes polarity.
    let pos_mass: f64 = y.iter().zip(w).filter(|(y, _)| **y > 0.0).map(|(_, w)| w).sum();
    let mut best = Candidate {
        feature: 0,
        threshold: f64::NEG_INFINITY,
        polarity: 1.0,
        error: total - pos_mass,
    };
    if pos_mass < best.error {
        best.polarity = -1.0;
        best.error = pos_mass;
    }
    for (f, order) in sorted.iter().enumerate() {
        // Error of polarity +1 with the threshold below everything seen so far:
        // misclassified = negatives above + positives at or below.
        let mut err_pos = total - pos_mass;
        for (j, &i) in order.iter().enumerate() {
            err_pos += if y[i] > 0.0 { w[i] } else { -w[i] };
            let v = x.get(i, f);
            let Some(&next) = order.get(j + 1) else { break };
            let nv = x.get(next, f);
            if nv <= v {
                continue;
            }
            let threshold = v + (nv - v) / 2.0;
            let err_neg = total - err_pos;
            if err_pos < best.error {
                best = Candidate {
                    feature: f,
                    threshold,
                    polarity: 1.0,
                    error: err_pos,
                };
            }
            if err_neg < best.error {
                best = Candidate {
                    feature: f,
                    threshold,
                    polarity: -1.0,
                    error: err_neg,
                };
            }
        }
    }
    best.error = best.error.max(0.0);
    best
}

pub(crate) fn fit(x: &Matrix, labels: &[Label], sample_weights: &[f64], params: &AdaboostParams) -> AdaboostModel {
    let y: Vec<f64> = labels.iter().map(|l| l.sign()).collect();
    let total: f64 = sample_weights.iter().sum();
    let mut w: Vec<f64> = sample_weights.iter().map(|v| v / total).collect();
    let sorted: Vec<Vec<usize>> = (0..x.cols())
        .map(|f| {
            let mut idx: Vec<usize> = (0..x.rows()).collect();
            idx.sort_by(|&a, &b| x.get(a, f).total_cmp(&x.get(b, f)).then(a.cmp(&b)));
            idx
        })
        .collect();

    let mut stumps = Vec::new();
    for _ in 0..params.rounds {
        let c = best_stump(x, &y, &w, &sorted);
        if c.error >= 0.5 && !stumps.is_empty() {
            break;
        }
        let err = c.error.max(MIN_ERROR);
        let alpha = 0.5 * libm::log((1.0 - err) / err);
        let stump = Stump {
            feature: c.feature,
            threshold: c.threshold,
            polarity: c.polarity,
            alpha: alpha.max(0.0),
        };
        let perfect = c.error <= 0.0;
        for (i, wi) in w.iter_mut().enumerate() {
            *wi *= libm::exp(-stump.alpha * y[i] * stump.vote(x.row(i)));
        }
        let z: f64 = w.iter().sum();
        for wi in w.iter_mut() {
            *wi /= z;
        }
        stumps.push(stump);
        if perfect {
            break;
        }
    }
    AdaboostModel { stumps }
}

/// Mean exponential loss of the ensemble's first `rounds` stumps.
pub fn exponential_loss(model: &AdaboostModel, x: &Matrix, labels: &[Label], rounds: usize) -> f64 {
    let partial = AdaboostModel {
        stumps: model.stumps.iter().take(rounds).cloned().collect(),
    };
    let n = x.rows() as f64;
    x.iter_rows()
        .zip(labels)
        .map(|(row, l)| libm::exp(-l.sign() * partial.score(row)))
        .sum::<f64>()
        / n
}
