//! Test-only helpers shared by the integration suites.
#![allow(dead_code)]

use spamtopic_core::corpus::{build_vocabulary, EncodedDocument, Label, UserDocument, Vocabulary};
use spamtopic_core::lda::TopicModel;
use spamtopic_core::synth::{generate, planted_topic_of, GroundTruth, SynthConfig};

/// The planted 3-topic corpus: 160 users of 300 tokens over disjoint 20-word
/// topic supports.
pub fn planted_config() -> SynthConfig {
    SynthConfig {
        n_legit: 80,
        n_polluter: 40,
        n_fake: 40,
        topics: 3,
        vocab_per_topic: 20,
        doc_len: 300,
        legit_topics: (1, 2),
        seed: 11,
        ..SynthConfig::default()
    }
}

pub struct Planted {
    pub docs: Vec<EncodedDocument>,
    pub vocabulary: Vocabulary,
    pub truth: GroundTruth,
}

/// Generated users as documents, bypassing text preprocessing.
pub fn planted_corpus(cfg: &SynthConfig) -> Planted {
    let (users, truth) = generate(cfg).unwrap();
    let docs: Vec<UserDocument> = users
        .iter()
        .map(|u| UserDocument {
            user_id: u.user_id.clone(),
            label: u.label,
            tokens: u
                .posts
                .iter()
                .flat_map(|p| p.split_whitespace())
                .map(String::from)
                .collect(),
            post_count: u.posts.len(),
        })
        .collect();
    let vocabulary = build_vocabulary(&docs, 1, 1.0).unwrap();
    let docs = docs.iter().map(|d| vocabulary.encode(d)).collect();
    Planted {
        docs,
        vocabulary,
        truth,
    }
}

/// Fraction of tokens whose most probable inferred topic maps to their
/// planted topic, after greedily pairing inferred and planted topics by
/// largest co-occurrence count.
pub fn dominant_topic_agreement(model: &TopicModel, planted: &Planted) -> f64 {
    let k_model = model.psi.rows();
    let k_true = planted.truth.topic_words.len();
    let mut counts = vec![vec![0usize; k_true]; k_model];
    let mut total = 0usize;
    for (d, doc) in planted.docs.iter().enumerate() {
        for &w in &doc.tokens {
            let word = planted.vocabulary.token(w).unwrap();
            let truth = planted_topic_of(word).unwrap();
            let mut best = 0;
            let mut best_p = f64::NEG_INFINITY;
            for k in 0..k_model {
                let p = model.theta.get(d, k) * model.psi.get(k, w as usize);
                if p > best_p {
                    best_p = p;
                    best = k;
                }
            }
            counts[best][truth] += 1;
            total += 1;
        }
    }
    let mut used_model = vec![false; k_model];
    let mut used_true = vec![false; k_true];
    let mut matched = 0;
    for _ in 0..k_model.min(k_true) {
        let mut best = (0, 0, 0usize);
        for (i, row) in counts.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                if !used_model[i] && !used_true[j] && c >= best.2 {
                    best = (i, j, c);
                }
            }
        }
        used_model[best.0] = true;
        used_true[best.1] = true;
        matched += best.2;
    }
    matched as f64 / total as f64
}

pub fn labels_of(users: &[spamtopic_core::corpus::RawUser]) -> Vec<Label> {
    users.iter().map(|u| u.label).collect()
}
