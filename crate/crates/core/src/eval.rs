//! Confusion-matrix metrics and stratified k-fold cross-validation.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::classify::{self, ClassifierKind, ClassifierParams, LabeledSet};
use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::features::{self, FeatureMatrix, GossStats};
use crate::lda::TopicMatrix;
use crate::rng::{fnv1a, stream, Domain};

/// Spammer is the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub fp: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn from_predictions(truth: &[Label], predicted: &[Label]) -> ConfusionMatrix {
        let mut cm = ConfusionMatrix::default();
        for (t, p) in truth.iter().zip(predicted) {
            match (t.is_positive(), p.is_positive()) {
                (true, true) => cm.tp += 1,
                (true, false) => cm.fn_ += 1,
                (false, true) => cm.fp += 1,
                (false, false) => cm.tn += 1,
            }
        }
        cm
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fn_ + self.fp + self.tn
    }

    pub fn add(&self, other: &ConfusionMatrix) -> ConfusionMatrix {
        ConfusionMatrix {
            tp: self.tp + other.tp,
            fn_: self.fn_ + other.fn_,
            fp: self.fp + other.fp,
            tn: self.tn + other.tn,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
}

/// Integer ratio with 0/0 defined as 0. One rounding, at the division.
fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Precision, recall and F1 (plus accuracy). F1 is evaluated as
/// 2tp / (2tp + fp + fn), the same rational as the harmonic mean of
/// precision and recall.
pub fn metrics(cm: &ConfusionMatrix) -> Metrics {
    Metrics {
        precision: ratio(cm.tp, cm.tp + cm.fp),
        recall: ratio(cm.tp, cm.tp + cm.fn_),
        f1: ratio(2 * cm.tp, 2 * cm.tp + cm.fp + cm.fn_),
        accuracy: ratio(cm.tp + cm.tn, cm.total()),
    }
}

/// Fold index of every user.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    pub fold_of: Vec<usize>,
}

impl FoldAssignment {
    pub fn split(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (i, &f) in self.fold_of.iter().enumerate() {
            if f == fold {
                test.push(i);
            } else {
                train.push(i);
            }
        }
        (train, test)
    }

    pub fn fingerprint(&self) -> String {
        let bytes: Vec<u8> = self.fold_of.iter().flat_map(|&f| (f as u32).to_le_bytes()).collect();
        alloc::format!("{:016x}", fnv1a(&bytes))
    }
}

/// Shuffles each class, then deals users round-robin across folds with one
/// running counter, so class counts and fold sizes each differ by at most one.
pub fn stratified_kfold(labels: &[Label], k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::InvalidConfig(alloc::format!("need at least 2 folds, got {k}")));
    }
    let mut fold_of = vec![0; labels.len()];
    let mut rng = stream(seed, Domain::Folds, 0);
    let mut next = 0usize;
    for class in [Label::Spammer, Label::Legitimate] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.len() < k {
            return Err(Error::TooFewPerClass {
                class: class.as_str(),
                count: members.len(),
                folds: k,
            });
        }
        members.shuffle(&mut rng);
        for i in members {
            fold_of[i] = next % k;
            next += 1;
        }
    }
    Ok(FoldAssignment { k, fold_of })
}

/// Which features to assemble, in column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Goss,
    Loss,
    Raw,
    Uc,
}

impl FeatureKind {
    pub fn name(self) -> &'static str {
        match self {
            FeatureKind::Goss => "goss",
            FeatureKind::Loss => "loss",
            FeatureKind::Raw => "raw",
            FeatureKind::Uc => "uc",
        }
    }

    pub fn parse(s: &str) -> Option<FeatureKind> {
        match s {
            "goss" => Some(FeatureKind::Goss),
            "loss" => Some(FeatureKind::Loss),
            "raw" => Some(FeatureKind::Raw),
            "uc" => Some(FeatureKind::Uc),
            _ => None,
        }
    }
}

/// A feature set such as `goss+loss`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FeatureSet(pub Vec<FeatureKind>);

impl FeatureSet {
    pub fn parse(spec: &str) -> Option<FeatureSet> {
        let kinds: Option<Vec<FeatureKind>> = spec.split('+').map(|s| FeatureKind::parse(s.trim())).collect();
        let kinds = kinds?;
        let mut dedup = kinds.clone();
        dedup.sort();
        dedup.dedup();
        (!kinds.is_empty() && dedup.len() == kinds.len()).then_some(FeatureSet(kinds))
    }

    pub fn name(&self) -> String {
        let parts: Vec<&str> = self.0.iter().map(|k| k.name()).collect();
        parts.join("+")
    }

    pub fn needs_topics(&self) -> bool {
        self.0.iter().any(|k| *k != FeatureKind::Uc)
    }

    pub fn needs_uc(&self) -> bool {
        self.0.contains(&FeatureKind::Uc)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureProtocol {
    /// Population statistics come from each training split only.
    FoldFit,
    /// Features computed once over all users.
    Global,
    /// Features supplied ready-made (e.g. from CSV).
    Precomputed,
}

/// Where cross-validation gets its features from.
#[derive(Debug, Clone)]
pub enum FeatureSource<'a> {
    Topics {
        topics: &'a TopicMatrix,
        uc: Option<&'a FeatureMatrix>,
        set: &'a FeatureSet,
    },
    Precomputed(&'a FeatureMatrix),
}

impl FeatureSource<'_> {
    fn rows(&self) -> usize {
        match self {
            FeatureSource::Topics { topics, .. } => topics.n_users(),
            FeatureSource::Precomputed(f) => f.rows(),
        }
    }

    /// Builds the (train, test) feature matrices for one split. GOSS
    /// statistics come from `stats_rows`.
    fn build(&self, stats_rows: &[usize], rows: &[usize]) -> Result<FeatureMatrix> {
        match self {
            FeatureSource::Precomputed(f) => Ok(f.select_rows(rows)),
            FeatureSource::Topics { topics, uc, set } => {
                let x = topics.matrix();
                let selected = TopicMatrix(x.select_rows(rows));
                let mut parts = Vec::with_capacity(set.0.len());
                for kind in &set.0 {
                    parts.push(match kind {
                        FeatureKind::Goss => GossStats::fit(&x.select_rows(stats_rows))?.apply(selected.matrix())?,
                        FeatureKind::Loss => features::loss(&selected)?,
                        FeatureKind::Raw => features::raw(&selected)?,
                        FeatureKind::Uc => uc
                            .ok_or_else(|| Error::Config("uc features requested without raw posts".into()))?
                            .select_rows(rows),
                    });
                }
                features::concat(&parts)
            }
        }
    }

    /// The full feature matrix over every user.
    pub fn materialize(&self) -> Result<FeatureMatrix> {
        let all: Vec<usize> = (0..self.rows()).collect();
        self.build(&all, &all)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seeds {
    pub model: u64,
    pub eval: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub confusion: ConfusionMatrix,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub feature_set: String,
    pub classifier: ClassifierKind,
    pub folds: usize,
    pub protocol: FeatureProtocol,
    pub seeds: Seeds,
    pub fold_fingerprint: String,
    pub per_fold: Vec<FoldResult>,
    pub pooled: ConfusionMatrix,
    pub pooled_metrics: Metrics,
    pub fold_mean: Metrics,
    pub fold_stddev: Metrics,
}

pub struct CvConfig<'a> {
    pub kind: ClassifierKind,
    pub params: &'a ClassifierParams,
    pub folds: usize,
    pub seeds: Seeds,
    pub protocol: FeatureProtocol,
    pub feature_set_name: String,
}

/// Runs k-fold cross-validation and pools the fold confusion matrices.
pub fn cross_validate(source: &FeatureSource<'_>, labels: &[Label], cfg: &CvConfig<'_>) -> Result<EvalReport> {
    if source.rows() != labels.len() {
        return Err(Error::ShapeMismatch {
            expected: source.rows(),
            found: labels.len(),
        });
    }
    let protocol = match source {
        FeatureSource::Precomputed(_) => FeatureProtocol::Precomputed,
        _ => cfg.protocol,
    };
    let assignment = stratified_kfold(labels, cfg.folds, cfg.seeds.eval)?;
    let all: Vec<usize> = (0..labels.len()).collect();
    let global = match protocol {
        FeatureProtocol::FoldFit => None,
        _ => Some(source.build(&all, &all)?),
    };
    let mut seed_rng = stream(cfg.seeds.eval, Domain::FoldSeed, 0);
    let mut per_fold = Vec::with_capacity(cfg.folds);
    let mut pooled = ConfusionMatrix::default();
    for fold in 0..cfg.folds {
        let (train, test) = assignment.split(fold);
        let (train_x, test_x) = match &global {
            Some(f) => (f.select_rows(&train), f.select_rows(&test)),
            None => (source.build(&train, &train)?, source.build(&train, &test)?),
        };
        let train_y: Vec<Label> = train.iter().map(|&i| labels[i]).collect();
        let test_y: Vec<Label> = test.iter().map(|&i| labels[i]).collect();
        let fold_seed: u64 = seed_rng.random();
        let model = classify::fit(cfg.kind, &LabeledSet::new(train_x, train_y)?, cfg.params, fold_seed)?;
        let predicted = model.predict(&test_x)?;
        let cm = ConfusionMatrix::from_predictions(&test_y, &predicted);
        pooled = pooled.add(&cm);
        per_fold.push(FoldResult {
            fold,
            train_size: train.len(),
            test_size: test.len(),
            confusion: cm,
            metrics: metrics(&cm),
        });
    }
    let (fold_mean, fold_stddev) = summarize(&per_fold);
    Ok(EvalReport {
        feature_set: cfg.feature_set_name.clone(),
        classifier: cfg.kind,
        folds: cfg.folds,
        protocol,
        seeds: cfg.seeds,
        fold_fingerprint: assignment.fingerprint(),
        per_fold,
        pooled,
        pooled_metrics: metrics(&pooled),
        fold_mean,
        fold_stddev,
    })
}

/// Mean and sample standard deviation of per-fold metrics.
fn summarize(folds: &[FoldResult]) -> (Metrics, Metrics) {
    let n = folds.len() as f64;
    let pick: [fn(&Metrics) -> f64; 4] = [|m| m.precision, |m| m.recall, |m| m.f1, |m| m.accuracy];
    let mut mean = [0.0; 4];
    let mut sd = [0.0; 4];
    for (j, get) in pick.iter().enumerate() {
        let mu = folds.iter().map(|f| get(&f.metrics)).sum::<f64>() / n;
        let var = if folds.len() > 1 {
            folds
                .iter()
                .map(|f| (get(&f.metrics) - mu) * (get(&f.metrics) - mu))
                .sum::<f64>()
                / (n - 1.0)
        } else {
            0.0
        };
        mean[j] = mu;
        sd[j] = libm::sqrt(var);
    }
    let to_metrics = |v: [f64; 4]| Metrics {
        precision: v[0],
        recall: v[1],
        f1: v[2],
        accuracy: v[3],
    };
    (to_metrics(mean), to_metrics(sd))
}
