//! Labeled synthetic corpora with planted topics.
//!
//! Each planted topic owns a disjoint block of `vocab_per_topic` words. Users
//! draw topic proportions from a class-specific Dirichlet:
//!
//! - legitimate users favour a random handful of topics,
//! - content polluters sit almost entirely on a single topic,
//! - fake accounts spread nearly evenly over every topic.
//!
//! Polluters and fake accounts are both labeled as spammers.

use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::corpus::{Label, RawUser};
use crate::error::{Error, Result};
use crate::rng::{draw_weighted, stream, Domain};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_legit: usize,
    pub n_polluter: usize,
    pub n_fake: usize,
    pub topics: usize,
    pub vocab_per_topic: usize,
    pub doc_len: usize,
    pub posts_per_user: usize,
    /// Legitimate users favour between these many topics (inclusive).
    pub legit_topics: (usize, usize),
    /// Dirichlet weight on each favoured topic of a legitimate user.
    pub legit_focus: f64,
    /// Dirichlet weight on the dominant topic of a polluter.
    pub polluter_focus: f64,
    /// Dirichlet weight on every topic of a fake account.
    pub fake_spread: f64,
    /// Dirichlet weight on topics a user does not favour.
    pub background: f64,
    /// Probability that a post carries a link / an @mention.
    pub link_rate: f64,
    pub mention_rate: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_legit: 100,
            n_polluter: 50,
            n_fake: 50,
            topics: 5,
            vocab_per_topic: 100,
            doc_len: 300,
            posts_per_user: 25,
            legit_topics: (2, 3),
            legit_focus: 2.0,
            polluter_focus: 20.0,
            fake_spread: 10.0,
            background: 0.05,
            link_rate: 0.0,
            mention_rate: 0.0,
            seed: 7,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(String::from(msg)));
        if self.n_legit == 0 || self.n_polluter + self.n_fake == 0 {
            return bad("need at least one legitimate user and one spammer");
        }
        if self.topics < 2 || self.vocab_per_topic == 0 || self.doc_len == 0 || self.posts_per_user == 0 {
            return bad("topics must be >= 2 and vocabulary, document length and posts positive");
        }
        let (lo, hi) = self.legit_topics;
        if lo == 0 || lo > hi || hi > self.topics {
            return bad("legit_topics must satisfy 1 <= min <= max <= topics");
        }
        let weights = [self.legit_focus, self.polluter_focus, self.fake_spread, self.background];
        if weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return bad("Dirichlet weights must be positive");
        }
        if !(0.0..=1.0).contains(&self.link_rate) || !(0.0..=1.0).contains(&self.mention_rate) {
            return bad("link and mention rates must lie in [0, 1]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UserClass {
    Legitimate,
    Polluter,
    Fake,
}

impl UserClass {
    pub fn label(self) -> Label {
        match self {
            UserClass::Legitimate => Label::Legitimate,
            UserClass::Polluter | UserClass::Fake => Label::Spammer,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRow {
    pub user_id: String,
    pub class: UserClass,
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub topic_words: Vec<Vec<String>>,
    pub users: Vec<TruthRow>,
}

pub fn planted_word(topic: usize, index: usize) -> String {
    alloc::format!("t{topic}w{index:03}")
}

/// Planted topic of a generated word, if it is one.
pub fn planted_topic_of(word: &str) -> Option<usize> {
    let rest = word.strip_prefix('t')?;
    let (topic, index) = rest.split_once('w')?;
    index.parse::<usize>().ok()?;
    topic.parse().ok()
}

fn dirichlet<R: Rng>(rng: &mut R, alphas: &[f64]) -> Vec<f64> {
    let mut draws: Vec<f64> = alphas
        .iter()
        .map(|&a| Gamma::new(a, 1.0).map(|g| g.sample(rng)).unwrap_or(0.0))
        .collect();
    let total: f64 = draws.iter().sum();
    if total > 0.0 && total.is_finite() {
        for d in &mut draws {
            *d /= total;
        }
    } else {
        let u = 1.0 / draws.len() as f64;
        draws.iter_mut().for_each(|d| *d = u);
    }
    draws
}

pub fn generate(config: &SynthConfig) -> Result<(Vec<RawUser>, GroundTruth)> {
    config.validate()?;
    let k = config.topics;
    let topic_words: Vec<Vec<String>> = (0..k)
        .map(|t| (0..config.vocab_per_topic).map(|i| planted_word(t, i)).collect())
        .collect();
    let classes = core::iter::repeat_n(UserClass::Legitimate, config.n_legit)
        .chain(core::iter::repeat_n(UserClass::Polluter, config.n_polluter))
        .chain(core::iter::repeat_n(UserClass::Fake, config.n_fake));

    let mut users = Vec::new();
    let mut truth = Vec::new();
    for (u, class) in classes.enumerate() {
        let mut rng = stream(config.seed, Domain::Synth, u as u64);
        let user_id = alloc::format!("user{u:05}");
        let mut alphas = alloc::vec![config.background; k];
        match class {
            UserClass::Legitimate => {
                let (lo, hi) = config.legit_topics;
                let count = rng.random_range(lo..=hi);
                for t in sample(&mut rng, k, count) {
                    alphas[t] = config.legit_focus;
                }
            }
            UserClass::Polluter => alphas[rng.random_range(0..k)] = config.polluter_focus,
            UserClass::Fake => alphas.iter_mut().for_each(|a| *a = config.fake_spread),
        }
        let theta = dirichlet(&mut rng, &alphas);
        let theta_total: f64 = theta.iter().sum();

        let mut posts = alloc::vec![String::new(); config.posts_per_user];
        for i in 0..config.doc_len {
            let topic = draw_weighted(&mut rng, &theta, theta_total);
            let word = &topic_words[topic][rng.random_range(0..config.vocab_per_topic)];
            let post = &mut posts[i * config.posts_per_user / config.doc_len];
            if !post.is_empty() {
                post.push(' ');
            }
            post.push_str(word);
        }
        for (p, post) in posts.iter_mut().enumerate() {
            if rng.random::<f64>() < config.link_rate {
                post.push_str(&alloc::format!(" http://example.com/{u}/{}", p % 3));
            }
            if rng.random::<f64>() < config.mention_rate {
                post.push_str(&alloc::format!(" @friend{}", rng.random_range(0..5)));
            }
        }
        users.push(RawUser::new(user_id.clone(), class.label(), posts));
        truth.push(TruthRow { user_id, class, theta });
    }
    Ok((
        users,
        GroundTruth {
            topic_words,
            users: truth,
        },
    ))
}

/// Shannon entropy in nats.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|&x| x * libm::log(x)).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_entropy(truth: &GroundTruth, class: UserClass) -> f64 {
        let rows: Vec<&TruthRow> = truth.users.iter().filter(|r| r.class == class).collect();
        rows.iter().map(|r| entropy(&r.theta)).sum::<f64>() / rows.len() as f64
    }

    #[test]
    fn class_entropies_are_ordered() {
        let (_, truth) = generate(&SynthConfig::default()).unwrap();
        let fake = mean_entropy(&truth, UserClass::Fake);
        let legit = mean_entropy(&truth, UserClass::Legitimate);
        let polluter = mean_entropy(&truth, UserClass::Polluter);
        assert!(fake > legit && legit > polluter, "{fake} {legit} {polluter}");
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate(&SynthConfig::default()).unwrap();
        let b = generate(&SynthConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn no_fakes_means_pure_polluters() {
        let cfg = SynthConfig {
            n_fake: 0,
            ..SynthConfig::default()
        };
        let (users, truth) = generate(&cfg).unwrap();
        for (u, t) in users.iter().zip(&truth.users) {
            if u.label == Label::Spammer {
                assert_eq!(t.class, UserClass::Polluter);
            }
        }
    }

    #[test]
    fn documents_use_planted_vocabulary_only() {
        let cfg = SynthConfig {
            n_legit: 5,
            n_polluter: 3,
            n_fake: 2,
            ..SynthConfig::default()
        };
        let (users, _) = generate(&cfg).unwrap();
        for u in &users {
            assert_eq!(u.posts.len(), cfg.posts_per_user);
            let words: Vec<&str> = u.posts.iter().flat_map(|p| p.split_whitespace()).collect();
            assert_eq!(words.len(), cfg.doc_len);
            for w in words {
                let t = planted_topic_of(w).unwrap();
                assert!(t < cfg.topics);
            }
        }
    }

    #[test]
    fn invalid_configs_rejected() {
        for cfg in [
            SynthConfig {
                n_legit: 0,
                ..SynthConfig::default()
            },
            SynthConfig {
                topics: 1,
                ..SynthConfig::default()
            },
            SynthConfig {
                legit_topics: (3, 2),
                ..SynthConfig::default()
            },
            SynthConfig {
                background: 0.0,
                ..SynthConfig::default()
            },
        ] {
            assert!(matches!(generate(&cfg), Err(Error::InvalidConfig(_))));
        }
    }

    #[test]
    fn link_injection_rate() {
        let cfg = SynthConfig {
            link_rate: 1.0,
            n_legit: 2,
            n_polluter: 1,
            n_fake: 0,
            ..SynthConfig::default()
        };
        let (users, _) = generate(&cfg).unwrap();
        assert!(users.iter().all(|u| u.posts.iter().all(|p| p.contains("http://"))));
    }
}
