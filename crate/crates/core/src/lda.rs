//! Latent Dirichlet Allocation trained by collapsed Gibbs sampling.
//!
//! Sweeps are synchronized: every document is resampled against the
//! topic-word counts as they stood at the start of the sweep plus its own
//! in-sweep changes, and all changes are merged when the sweep ends. Each
//! document draws from its own stream keyed by `(seed, user id)`. Together
//! these make a fitted model independent of document order.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{EncodedDocument, Vocabulary};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{draw_weighted, fnv1a, stream, Domain, StreamRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    pub topics: usize,
    pub alpha: f64,
    pub beta: f64,
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
    /// Average estimates over post-burn-in sweeps instead of using the last one.
    pub average: bool,
    /// Spacing between averaged samples.
    pub sample_lag: usize,
}

impl Default for LdaConfig {
    fn default() -> Self {
        LdaConfig {
            topics: 15,
            alpha: 0.3,
            beta: 0.01,
            iterations: 1000,
            burn_in: 200,
            seed: 0,
            average: false,
            sample_lag: 10,
        }
    }
}

impl LdaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.topics < 2 {
            return Err(Error::InvalidConfig(alloc::format!(
                "topic count must be at least 2, got {}",
                self.topics
            )));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) || !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidConfig(alloc::format!(
                "alpha and beta must be positive, got {} and {}",
                self.alpha,
                self.beta
            )));
        }
        if self.iterations == 0 || self.burn_in >= self.iterations {
            return Err(Error::InvalidConfig(alloc::format!(
                "need 0 <= burn_in < iterations, got burn_in={} iterations={}",
                self.burn_in,
                self.iterations
            )));
        }
        if self.average && self.sample_lag == 0 {
            return Err(Error::InvalidConfig("sample_lag must be positive".into()));
        }
        Ok(())
    }
}

/// Trained model: topic-word (`psi`, K×V) and document-topic (`theta`, n×K)
/// distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicModel {
    pub config: LdaConfig,
    pub vocabulary: Vocabulary,
    pub psi: Matrix,
    pub theta: Matrix,
    /// User ids in `theta` row order.
    pub doc_ids: Vec<String>,
}

/// Per-user topic probabilities, one row per document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicMatrix(pub Matrix);

impl TopicMatrix {
    pub fn n_users(&self) -> usize {
        self.0.rows()
    }

    pub fn n_topics(&self) -> usize {
        self.0.cols()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }
}

/// Topic assignments and the count tables derived from them.
#[derive(Debug, Clone)]
pub struct SamplerState {
    pub z: Vec<Vec<u32>>,
    /// n × K, row-major.
    pub n_dk: Vec<u32>,
    /// K × V, row-major.
    pub n_kw: Vec<u32>,
    pub n_k: Vec<u32>,
}

impl SamplerState {
    /// Checks that the count tables are exactly the tallies of `z`.
    pub fn audit(&self, docs: &[EncodedDocument], topics: usize, vocab: usize) -> bool {
        let mut n_dk = vec![0u32; docs.len() * topics];
        let mut n_kw = vec![0u32; topics * vocab];
        let mut n_k = vec![0u32; topics];
        for (d, (doc, z)) in docs.iter().zip(&self.z).enumerate() {
            if doc.tokens.len() != z.len() {
                return false;
            }
            for (&w, &k) in doc.tokens.iter().zip(z) {
                let k = k as usize;
                n_dk[d * topics + k] += 1;
                n_kw[k * vocab + w as usize] += 1;
                n_k[k] += 1;
            }
        }
        n_dk == self.n_dk && n_kw == self.n_kw && n_k == self.n_k
    }
}

/// A collapsed Gibbs sampler that can be stepped one sweep at a time.
pub struct Sampler<'a> {
    docs: &'a [EncodedDocument],
    config: LdaConfig,
    vocab: usize,
    state: SamplerState,
    rngs: Vec<StreamRng>,
    /// Distinct words of each document and each token's slot among them.
    doc_words: Vec<Vec<u32>>,
    token_slots: Vec<Vec<u32>>,
    sweeps: usize,
    theta_sum: Option<Matrix>,
    psi_sum: Option<Matrix>,
    samples: usize,
}

impl<'a> Sampler<'a> {
    pub fn new(docs: &'a [EncodedDocument], vocab: usize, config: LdaConfig) -> Result<Self> {
        config.validate()?;
        if docs.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        if vocab == 0 {
            return Err(Error::EmptyVocabulary);
        }
        let topics = config.topics;
        if let Some(&w) = docs.iter().flat_map(|d| &d.tokens).find(|&&w| w as usize >= vocab) {
            return Err(Error::InvalidConfig(alloc::format!(
                "token index {w} out of range for vocabulary of {vocab}"
            )));
        }
        let mut state = SamplerState {
            z: Vec::with_capacity(docs.len()),
            n_dk: vec![0; docs.len() * topics],
            n_kw: vec![0; topics * vocab],
            n_k: vec![0; topics],
        };
        let mut rngs = Vec::with_capacity(docs.len());
        let mut doc_words = Vec::with_capacity(docs.len());
        let mut token_slots = Vec::with_capacity(docs.len());
        for (d, doc) in docs.iter().enumerate() {
            let mut rng = stream(config.seed, Domain::LdaDocument, fnv1a(doc.id.as_bytes()));
            let z: Vec<u32> = doc.tokens.iter().map(|_| rng.random_range(0..topics as u32)).collect();
            for (&w, &k) in doc.tokens.iter().zip(&z) {
                state.n_dk[d * topics + k as usize] += 1;
                state.n_kw[k as usize * vocab + w as usize] += 1;
                state.n_k[k as usize] += 1;
            }
            state.z.push(z);
            rngs.push(rng);

            let mut words = doc.tokens.clone();
            words.sort_unstable();
            words.dedup();
            let slots = doc
                .tokens
                .iter()
                .map(|w| words.binary_search(w).unwrap_or(0) as u32)
                .collect();
            doc_words.push(words);
            token_slots.push(slots);
        }
        Ok(Sampler {
            docs,
            config,
            vocab,
            state,
            rngs,
            doc_words,
            token_slots,
            sweeps: 0,
            theta_sum: None,
            psi_sum: None,
            samples: 0,
        })
    }

    pub fn sweeps_done(&self) -> usize {
        self.sweeps
    }

    pub fn state(&self) -> &SamplerState {
        &self.state
    }

    pub fn sweep(&mut self) {
        let topics = self.config.topics;
        let vocab = self.vocab;
        let (alpha, beta) = (self.config.alpha, self.config.beta);
        let vbeta = vocab as f64 * beta;

        let snapshot_kw = &self.state.n_kw;
        let snapshot_k = &self.state.n_k;
        let mut next_kw = snapshot_kw.clone();
        let mut next_k = snapshot_k.clone();
        let mut weights = vec![0.0; topics];

        for (d, doc) in self.docs.iter().enumerate() {
            let words = &self.doc_words[d];
            let slots = &self.token_slots[d];
            // In-sweep changes of this document, per (word slot, topic) and per topic.
            let mut delta_kw = vec![0i64; words.len() * topics];
            let mut delta_k = vec![0i64; topics];
            let n_dk = &mut self.state.n_dk[d * topics..(d + 1) * topics];
            let z = &mut self.state.z[d];
            let rng = &mut self.rngs[d];

            for (i, &w) in doc.tokens.iter().enumerate() {
                let s = slots[i] as usize;
                let old = z[i] as usize;
                n_dk[old] -= 1;
                delta_kw[s * topics + old] -= 1;
                delta_k[old] -= 1;

                let mut total = 0.0;
                for k in 0..topics {
                    let n_kw = snapshot_kw[k * vocab + w as usize] as i64 + delta_kw[s * topics + k];
                    let n_k = snapshot_k[k] as i64 + delta_k[k];
                    let p = (n_dk[k] as f64 + alpha) * (n_kw as f64 + beta) / (n_k as f64 + vbeta);
                    weights[k] = p;
                    total += p;
                }
                let new = draw_weighted(rng, &weights, total);

                z[i] = new as u32;
                n_dk[new] += 1;
                delta_kw[s * topics + new] += 1;
                delta_k[new] += 1;
            }

            for (s, &w) in words.iter().enumerate() {
                for k in 0..topics {
                    let change = delta_kw[s * topics + k];
                    if change != 0 {
                        let cell = &mut next_kw[k * vocab + w as usize];
                        *cell = (*cell as i64 + change) as u32;
                    }
                }
            }
            for k in 0..topics {
                next_k[k] = (next_k[k] as i64 + delta_k[k]) as u32;
            }
        }
        self.state.n_kw = next_kw;
        self.state.n_k = next_k;
        self.sweeps += 1;

        debug_assert!(
            self.state.audit(self.docs, topics, vocab),
            "sampler counts diverged from assignments after sweep {}",
            self.sweeps
        );

        if self.config.average
            && self.sweeps > self.config.burn_in
            && (self.sweeps - self.config.burn_in).is_multiple_of(self.config.sample_lag)
        {
            let theta = self.theta_estimate();
            let psi = self.psi_estimate();
            accumulate(&mut self.theta_sum, &theta);
            accumulate(&mut self.psi_sum, &psi);
            self.samples += 1;
        }
    }

    /// Smoothed document-topic proportions from the current assignments.
    pub fn theta_estimate(&self) -> Matrix {
        let topics = self.config.topics;
        let alpha = self.config.alpha;
        let mut theta = Matrix::zeros(self.docs.len(), topics);
        for (d, doc) in self.docs.iter().enumerate() {
            let denom = doc.tokens.len() as f64 + topics as f64 * alpha;
            let row = theta.row_mut(d);
            for (k, cell) in row.iter_mut().enumerate() {
                *cell = (self.state.n_dk[d * topics + k] as f64 + alpha) / denom;
            }
        }
        theta
    }

    /// Smoothed topic-word distributions from the current assignments.
    pub fn psi_estimate(&self) -> Matrix {
        let topics = self.config.topics;
        let beta = self.config.beta;
        let mut psi = Matrix::zeros(topics, self.vocab);
        for k in 0..topics {
            let denom = self.state.n_k[k] as f64 + self.vocab as f64 * beta;
            let row = psi.row_mut(k);
            for (w, cell) in row.iter_mut().enumerate() {
                *cell = (self.state.n_kw[k * self.vocab + w] as f64 + beta) / denom;
            }
        }
        psi
    }

    /// Builds a model from the averaged samples when averaging produced any,
    /// otherwise from the current assignments.
    pub fn model(&self, vocabulary: &Vocabulary) -> TopicModel {
        let (theta, psi) = match (&self.theta_sum, &self.psi_sum) {
            (Some(t), Some(p)) if self.samples > 0 => (normalized_rows(t), normalized_rows(p)),
            _ => (self.theta_estimate(), self.psi_estimate()),
        };
        TopicModel {
            config: self.config.clone(),
            vocabulary: vocabulary.clone(),
            psi,
            theta,
            doc_ids: self.docs.iter().map(|d| d.id.clone()).collect(),
        }
    }
}

fn accumulate(sum: &mut Option<Matrix>, sample: &Matrix) {
    match sum {
        None => *sum = Some(sample.clone()),
        Some(acc) => {
            for r in 0..acc.rows() {
                for (a, b) in acc.row_mut(r).iter_mut().zip(sample.row(r)) {
                    *a += b;
                }
            }
        }
    }
}

fn normalized_rows(m: &Matrix) -> Matrix {
    let mut out = m.clone();
    for r in 0..out.rows() {
        normalize(out.row_mut(r));
    }
    out
}

fn normalize(row: &mut [f64]) {
    let total: f64 = row.iter().sum();
    for x in row {
        *x /= total;
    }
}

/// Trains a topic model on encoded documents.
pub fn fit(docs: &[EncodedDocument], vocabulary: &Vocabulary, config: &LdaConfig) -> Result<TopicModel> {
    let mut sampler = Sampler::new(docs, vocabulary.len(), config.clone())?;
    for _ in 0..config.iterations {
        sampler.sweep();
    }
    Ok(sampler.model(vocabulary))
}

/// The per-user topic probability matrix, rows renormalized.
pub fn topic_matrix(model: &TopicModel) -> TopicMatrix {
    TopicMatrix(normalized_rows(&model.theta))
}

/// Topic proportions for a document outside the training set. The
/// topic-word side is frozen; the returned vector averages the estimates of
/// the second half of the sweeps.
pub fn infer_held_out(model: &TopicModel, doc: &EncodedDocument, sweeps: usize, seed: u64) -> Result<Vec<f64>> {
    let topics = model.config.topics;
    let alpha = model.config.alpha;
    let vocab = model.vocabulary.len();
    let tokens: Vec<u32> = doc.tokens.iter().copied().filter(|&w| (w as usize) < vocab).collect();
    if tokens.is_empty() {
        return Err(Error::EmptyDocument(doc.id.clone()));
    }
    let sweeps = sweeps.max(1);
    let mut rng = stream(seed, Domain::HeldOut, fnv1a(doc.id.as_bytes()));
    let mut z: Vec<usize> = tokens.iter().map(|_| rng.random_range(0..topics)).collect();
    let mut n_dk = vec![0u32; topics];
    for &k in &z {
        n_dk[k] += 1;
    }
    let mut weights = vec![0.0; topics];
    let mut sum = vec![0.0; topics];
    let keep_from = sweeps / 2;
    let denom = tokens.len() as f64 + topics as f64 * alpha;
    for sweep in 0..sweeps {
        for (i, &w) in tokens.iter().enumerate() {
            n_dk[z[i]] -= 1;
            let mut total = 0.0;
            for k in 0..topics {
                let p = (n_dk[k] as f64 + alpha) * model.psi.get(k, w as usize);
                weights[k] = p;
                total += p;
            }
            let k = draw_weighted(&mut rng, &weights, total);
            z[i] = k;
            n_dk[k] += 1;
        }
        if sweep >= keep_from {
            for k in 0..topics {
                sum[k] += (n_dk[k] as f64 + alpha) / denom;
            }
        }
    }
    normalize(&mut sum);
    Ok(sum)
}

/// Σ over tokens of log Σ_k θ_dk ψ_kw. `docs` must be in `theta` row order.
pub fn log_likelihood(model: &TopicModel, docs: &[EncodedDocument]) -> Result<f64> {
    if docs.len() != model.theta.rows() {
        return Err(Error::ShapeMismatch {
            expected: model.theta.rows(),
            found: docs.len(),
        });
    }
    let mut ll = 0.0;
    for (d, doc) in docs.iter().enumerate() {
        let theta = model.theta.row(d);
        for &w in &doc.tokens {
            let p: f64 = theta
                .iter()
                .enumerate()
                .map(|(k, t)| t * model.psi.get(k, w as usize))
                .sum();
            ll += libm::log(p);
        }
    }
    Ok(ll)
}
