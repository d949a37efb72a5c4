//! Linear SVM trained by Pegasos-style stochastic subgradient descent on the
//! L2-regularized hinge loss. The bias is learned as the weight of a constant
//! feature and is regularized with the rest.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::matrix::Matrix;
use crate::rng::{stream, Domain};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub lambda: f64,
    pub epochs: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            lambda: 1e-4,
            epochs: 100,
        }
    }
}

/// Weights over standardized features plus a bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearSvmModel {
    pub fn score(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }

    /// λ/2·‖(w, b)‖² + weighted mean hinge loss.
    pub fn objective(&self, x: &Matrix, labels: &[Label], weights: &[f64], lambda: f64) -> f64 {
        let norm2 = self.weights.iter().map(|w| w * w).sum::<f64>() + self.bias * self.bias;
        let total_weight: f64 = weights.iter().sum();
        let hinge: f64 = x
            .iter_rows()
            .zip(labels)
            .zip(weights)
            .map(|((row, y), c)| c * (1.0 - y.sign() * self.score(row)).max(0.0))
            .sum();
        0.5 * lambda * norm2 + hinge / total_weight
    }
}

pub(crate) fn fit(x: &Matrix, labels: &[Label], weights: &[f64], params: &SvmParams, seed: u64) -> LinearSvmModel {
    let d = x.cols();
    let lambda = params.lambda;
    // w[..d] feature weights, w[d] bias.
    let mut w = vec![0.0; d + 1];
    let radius = 1.0 / libm::sqrt(lambda);
    let mut rng = stream(seed, Domain::Svm, 0);
    let mut order: Vec<usize> = (0..x.rows()).collect();
    let mut t = 0u64;
    for _ in 0..params.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let row = x.row(i);
            let y = labels[i].sign();
            let margin = y * (row.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + w[d]);
            let shrink = 1.0 - eta * lambda;
            for wj in w.iter_mut() {
                *wj *= shrink;
            }
            if margin < 1.0 {
                let step = eta * weights[i] * y;
                for (wj, v) in w.iter_mut().zip(row) {
                    *wj += step * v;
                }
                w[d] += step;
            }
            let norm = libm::sqrt(w.iter().map(|v| v * v).sum::<f64>());
            if norm > radius {
                let s = radius / norm;
                for wj in w.iter_mut() {
                    *wj *= s;
                }
            }
        }
    }
    let bias = w.pop().unwrap_or(0.0);
    LinearSvmModel { weights: w, bias }
}
