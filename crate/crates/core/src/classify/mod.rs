//! Baseline classifiers behind one fit/predict contract.

mod adaboost;
mod forest;
mod svm;

pub use adaboost::{exponential_loss, AdaboostModel, AdaboostParams, Stump};
pub use forest::{ForestModel, ForestParams, Node, Tree};
pub use svm::{LinearSvmModel, SvmParams};

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClassifierKind {
    LinearSvm,
    Adaboost,
    RandomForest,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 3] = [
        ClassifierKind::LinearSvm,
        ClassifierKind::Adaboost,
        ClassifierKind::RandomForest,
    ];

    /// Short name used on the command line.
    pub fn short_name(self) -> &'static str {
        match self {
            ClassifierKind::LinearSvm => "svm",
            ClassifierKind::Adaboost => "adaboost",
            ClassifierKind::RandomForest => "rf",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            ClassifierKind::LinearSvm => "SVM",
            ClassifierKind::Adaboost => "Adaboost",
            ClassifierKind::RandomForest => "RandomForest",
        }
    }

    pub fn parse(s: &str) -> Option<ClassifierKind> {
        match s {
            "svm" | "linear_svm" => Some(ClassifierKind::LinearSvm),
            "adaboost" => Some(ClassifierKind::Adaboost),
            "rf" | "random_forest" | "randomforest" => Some(ClassifierKind::RandomForest),
            _ => None,
        }
    }
}

/// Features with one binary label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSet {
    pub features: FeatureMatrix,
    pub labels: Vec<Label>,
}

impl LabeledSet {
    pub fn new(features: FeatureMatrix, labels: Vec<Label>) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::ShapeMismatch {
                expected: features.rows(),
                found: labels.len(),
            });
        }
        Ok(LabeledSet { features, labels })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ClassifierParams {
    pub svm: SvmParams,
    pub adaboost: AdaboostParams,
    pub forest: ForestParams,
    /// Reweight classes inversely to their frequency.
    pub balance_classes: bool,
}

/// Per-column mean and scale captured at fit time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &Matrix) -> Standardizer {
        let n = x.rows().max(1) as f64;
        let mut mean = Vec::with_capacity(x.cols());
        let mut scale = Vec::with_capacity(x.cols());
        for c in 0..x.cols() {
            let mu = x.column(c).sum::<f64>() / n;
            let var = x.column(c).map(|v| (v - mu) * (v - mu)).sum::<f64>() / n;
            let sd = libm::sqrt(var);
            mean.push(mu);
            scale.push(if sd > 0.0 { sd } else { 1.0 });
        }
        Standardizer { mean, scale }
    }

    pub fn transform(&self, x: &Matrix) -> Matrix {
        let mut out = x.clone();
        for r in 0..out.rows() {
            self.transform_row(out.row_mut(r));
        }
        out
    }

    pub fn transform_row(&self, row: &mut [f64]) {
        for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.scale) {
            *v = (*v - m) / s;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    LinearSvm(LinearSvmModel),
    Adaboost(AdaboostModel),
    RandomForest(ForestModel),
}

/// A fitted classifier. Immutable; prediction is a pure function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classifier {
    pub standardizer: Standardizer,
    pub model: Model,
    pub params: ClassifierParams,
    pub seed: u64,
}

/// Per-sample weights: uniform, or inversely proportional to class size
/// when balancing. Always sum to `n`.
pub(crate) fn sample_weights(labels: &[Label], balance: bool) -> Vec<f64> {
    let n = labels.len() as f64;
    if !balance {
        return alloc::vec![1.0; labels.len()];
    }
    let pos = labels.iter().filter(|l| l.is_positive()).count() as f64;
    let neg = n - pos;
    labels
        .iter()
        .map(|l| {
            if l.is_positive() {
                n / (2.0 * pos)
            } else {
                n / (2.0 * neg)
            }
        })
        .collect()
}

pub fn fit(kind: ClassifierKind, data: &LabeledSet, params: &ClassifierParams, seed: u64) -> Result<Classifier> {
    let x = &data.features.values;
    for (r, row) in x.iter_rows().enumerate() {
        if let Some(c) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::NanFeature { row: r, col: c });
        }
    }
    let pos = data.labels.iter().filter(|l| l.is_positive()).count();
    if pos == 0 || pos == data.labels.len() {
        return Err(Error::SingleClass);
    }
    let standardizer = Standardizer::fit(x);
    let z = standardizer.transform(x);
    let weights = sample_weights(&data.labels, params.balance_classes);
    let model = match kind {
        ClassifierKind::LinearSvm => Model::LinearSvm(svm::fit(&z, &data.labels, &weights, &params.svm, seed)),
        ClassifierKind::Adaboost => Model::Adaboost(adaboost::fit(&z, &data.labels, &weights, &params.adaboost)),
        ClassifierKind::RandomForest => {
            Model::RandomForest(forest::fit(&z, &data.labels, &weights, &params.forest, seed))
        }
    };
    Ok(Classifier {
        standardizer,
        model,
        params: params.clone(),
        seed,
    })
}

impl Classifier {
    pub fn kind(&self) -> ClassifierKind {
        match self.model {
            Model::LinearSvm(_) => ClassifierKind::LinearSvm,
            Model::Adaboost(_) => ClassifierKind::Adaboost,
            Model::RandomForest(_) => ClassifierKind::RandomForest,
        }
    }

    pub fn n_features(&self) -> usize {
        self.standardizer.mean.len()
    }

    /// Signed scores; non-negative means spammer.
    pub fn decision_scores(&self, features: &FeatureMatrix) -> Result<Vec<f64>> {
        if features.cols() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                found: features.cols(),
            });
        }
        let mut row = alloc::vec![0.0; self.n_features()];
        let mut scores = Vec::with_capacity(features.rows());
        for raw in features.values.iter_rows() {
            row.copy_from_slice(raw);
            self.standardizer.transform_row(&mut row);
            scores.push(match &self.model {
                Model::LinearSvm(m) => m.score(&row),
                Model::Adaboost(m) => m.score(&row),
                Model::RandomForest(m) => m.score(&row),
            });
        }
        Ok(scores)
    }

    pub fn predict(&self, features: &FeatureMatrix) -> Result<Vec<Label>> {
        Ok(self
            .decision_scores(features)?
            .into_iter()
            .map(|s| Label::from_positive(s >= 0.0))
            .collect())
    }

    /// For linear models, the score at the all-zero input in original units.
    pub fn linear_intercept(&self) -> Option<f64> {
        match &self.model {
            Model::LinearSvm(m) => Some(
                m.bias
                    - m.weights
                        .iter()
                        .zip(&self.standardizer.mean)
                        .zip(&self.standardizer.scale)
                        .map(|((w, mu), s)| w * mu / s)
                        .sum::<f64>(),
            ),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Domain};
    use alloc::string::String;
    use alloc::vec;
    use rand::Rng;

    fn blob_set(n_per_class: usize, spread: f64, seed: u64) -> LabeledSet {
        let mut rng = stream(seed, Domain::Synth, 99);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..2 * n_per_class {
            let label = if i % 2 == 0 { Label::Spammer } else { Label::Legitimate };
            let c = label.sign();
            rows.push([
                c + spread * (rng.random::<f64>() - 0.5),
                c + spread * (rng.random::<f64>() - 0.5),
            ]);
            labels.push(label);
        }
        let fm = FeatureMatrix::new(Matrix::from_rows(&rows), vec![String::from("a"), String::from("b")]).unwrap();
        LabeledSet::new(fm, labels).unwrap()
    }

    fn f1(pred: &[Label], truth: &[Label]) -> f64 {
        let tp = pred
            .iter()
            .zip(truth)
            .filter(|(p, t)| p.is_positive() && t.is_positive())
            .count() as f64;
        let fp = pred
            .iter()
            .zip(truth)
            .filter(|(p, t)| p.is_positive() && !t.is_positive())
            .count() as f64;
        let fneg = pred
            .iter()
            .zip(truth)
            .filter(|(p, t)| !p.is_positive() && t.is_positive())
            .count() as f64;
        2.0 * tp / (2.0 * tp + fp + fneg)
    }

    #[test]
    fn separable_blobs_are_fit_perfectly() {
        let data = blob_set(40, 0.4, 1);
        for kind in ClassifierKind::ALL {
            let model = fit(kind, &data, &ClassifierParams::default(), 5).unwrap();
            let pred = model.predict(&data.features).unwrap();
            assert_eq!(f1(&pred, &data.labels), 1.0, "{kind:?}");
            let probe = FeatureMatrix::new(
                Matrix::from_rows(&[[1.0, 1.0], [-1.0, -1.0]]),
                data.features.column_names.clone(),
            )
            .unwrap();
            assert_eq!(
                model.predict(&probe).unwrap(),
                vec![Label::Spammer, Label::Legitimate],
                "{kind:?}"
            );
        }
    }

    #[test]
    fn fits_are_deterministic() {
        let data = blob_set(30, 3.0, 2);
        let probe = blob_set(20, 3.0, 3).features;
        for kind in ClassifierKind::ALL {
            let a = fit(kind, &data, &ClassifierParams::default(), 11).unwrap();
            let b = fit(kind, &data, &ClassifierParams::default(), 11).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.decision_scores(&probe).unwrap(), b.decision_scores(&probe).unwrap());
        }
    }

    #[test]
    fn prediction_contracts() {
        let data = blob_set(20, 2.5, 4);
        for kind in ClassifierKind::ALL {
            let model = fit(kind, &data, &ClassifierParams::default(), 1).unwrap();
            let empty = FeatureMatrix::new(Matrix::zeros(0, 2), data.features.column_names.clone()).unwrap();
            assert!(model.predict(&empty).unwrap().is_empty());
            let wide = FeatureMatrix::new(Matrix::zeros(1, 3), vec!["a".into(), "b".into(), "c".into()]).unwrap();
            assert_eq!(
                model.predict(&wide),
                Err(Error::DimensionMismatch { expected: 2, found: 3 })
            );
            let scores = model.decision_scores(&data.features).unwrap();
            let labels = model.predict(&data.features).unwrap();
            for (s, l) in scores.iter().zip(&labels) {
                assert_eq!(*s >= 0.0, l.is_positive());
            }
        }
    }

    #[test]
    fn svm_score_at_origin_is_intercept() {
        let data = blob_set(25, 2.0, 6);
        let model = fit(ClassifierKind::LinearSvm, &data, &ClassifierParams::default(), 2).unwrap();
        let origin = FeatureMatrix::new(Matrix::zeros(1, 2), data.features.column_names.clone()).unwrap();
        let score = model.decision_scores(&origin).unwrap()[0];
        let bias = model.linear_intercept().unwrap();
        assert!((score - bias).abs() <= 1e-12 * bias.abs().max(1.0), "{score} vs {bias}");
    }

    #[test]
    fn single_class_and_nan_rejected() {
        let mut data = blob_set(5, 1.0, 7);
        let all_pos = LabeledSet::new(data.features.clone(), vec![Label::Spammer; 10]).unwrap();
        assert_eq!(
            fit(ClassifierKind::Adaboost, &all_pos, &ClassifierParams::default(), 0),
            Err(Error::SingleClass)
        );
        data.features.values.set(3, 1, f64::NAN);
        assert_eq!(
            fit(ClassifierKind::LinearSvm, &data, &ClassifierParams::default(), 0),
            Err(Error::NanFeature { row: 3, col: 1 })
        );
    }

    #[test]
    fn balanced_weights_sum_to_n() {
        let labels = [Label::Spammer, Label::Legitimate, Label::Legitimate, Label::Legitimate];
        let w = sample_weights(&labels, true);
        assert!((w.iter().sum::<f64>() - 4.0).abs() < 1e-12);
        assert_eq!(w[0], 2.0);
    }
}
