//! User documents: labels, preprocessing, vocabulary and encoding.

pub mod porter;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ground-truth class of an account. Spammers are the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Spammer,
    Legitimate,
}

impl Label {
    pub fn is_positive(self) -> bool {
        self == Label::Spammer
    }

    pub fn from_positive(positive: bool) -> Label {
        if positive {
            Label::Spammer
        } else {
            Label::Legitimate
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Spammer => "spammer",
            Label::Legitimate => "legitimate",
        }
    }

    pub fn parse(s: &str) -> Option<Label> {
        match s {
            "spammer" => Some(Label::Spammer),
            "legitimate" => Some(Label::Legitimate),
            _ => None,
        }
    }

    /// +1 for spammers, -1 for legitimate users.
    pub fn sign(self) -> f64 {
        if self.is_positive() {
            1.0
        } else {
            -1.0
        }
    }
}

/// One account as read from a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawUser {
    pub user_id: String,
    pub label: Label,
    #[serde(default)]
    pub posts: Vec<String>,
    /// Per-post token lists for datasets that arrive already segmented.
    #[serde(default, rename = "tokens", skip_serializing_if = "Option::is_none")]
    pub pretokenized: Option<Vec<Vec<String>>>,
}

impl RawUser {
    pub fn new(user_id: impl Into<String>, label: Label, posts: Vec<String>) -> Self {
        RawUser {
            user_id: user_id.into(),
            label,
            posts,
            pretokenized: None,
        }
    }
}

pub fn check_unique_ids(users: &[RawUser]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for u in users {
        if !seen.insert(u.user_id.as_str()) {
            return Err(Error::DuplicateUser(u.user_id.clone()));
        }
    }
    Ok(())
}

/// A user's whole post history as one bag of tokens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserDocument {
    pub user_id: String,
    pub label: Label,
    pub tokens: Vec<String>,
    pub post_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LanguageMode {
    English,
    Pretokenized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    pub mode: LanguageMode,
    pub stopwords: BTreeSet<String>,
    pub stem: bool,
    pub min_posts: usize,
    pub min_tokens: usize,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            mode: LanguageMode::English,
            stopwords: english_stopwords(),
            stem: true,
            min_posts: 20,
            min_tokens: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterReason {
    TooFewPosts { posts: usize },
    TooFewTokens { tokens: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Preprocessed {
    Admitted(UserDocument),
    Filtered(FilterReason),
}

impl Preprocessed {
    pub fn admitted(self) -> Option<UserDocument> {
        match self {
            Preprocessed::Admitted(d) => Some(d),
            Preprocessed::Filtered(_) => None,
        }
    }
}

const STOPWORDS_EN: &str = include_str!("../../data/stopwords_en.txt");

/// Parses a stopword list: one token per line, `#` starts a comment line.
pub fn parse_stopwords(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(ToString::to_string)
        .collect()
}

/// The bundled English stopword list.
pub fn english_stopwords() -> BTreeSet<String> {
    parse_stopwords(STOPWORDS_EN)
}

pub fn is_url(token: &str) -> bool {
    token.starts_with("http://") || token.starts_with("https://")
}

pub fn is_mention(token: &str) -> bool {
    token.len() > 1 && token.starts_with('@')
}

/// Lowercases, strips ASCII punctuation and drops non-ASCII words. URLs and
/// @mentions are kept whole.
pub fn tokenize_english(post: &str) -> impl Iterator<Item = String> + '_ {
    post.split_whitespace().filter_map(|raw| {
        if !raw.is_ascii() {
            return None;
        }
        let lower = raw.to_ascii_lowercase();
        if is_url(&lower) || is_mention(&lower) {
            return Some(lower);
        }
        let stripped: String = lower.chars().filter(|c| !c.is_ascii_punctuation()).collect();
        (!stripped.is_empty()).then_some(stripped)
    })
}

pub fn preprocess(user: &RawUser, config: &PreprocessConfig) -> Result<Preprocessed> {
    let (tokens, post_count) = match config.mode {
        LanguageMode::English => {
            if user.posts.is_empty() && user.pretokenized.is_some() {
                return Err(Error::Config(alloc::format!(
                    "user `{}` has only pretokenized input but the language mode is english",
                    user.user_id
                )));
            }
            let mut tokens = Vec::new();
            for post in &user.posts {
                for tok in tokenize_english(post) {
                    if config.stopwords.contains(&tok) {
                        continue;
                    }
                    let special = is_url(&tok) || is_mention(&tok);
                    tokens.push(if config.stem && !special {
                        porter::stem(&tok)
                    } else {
                        tok
                    });
                }
            }
            (tokens, user.posts.len())
        }
        LanguageMode::Pretokenized => {
            let Some(lists) = &user.pretokenized else {
                return Err(Error::Config(alloc::format!(
                    "user `{}` has no token lists but the language mode is pretokenized",
                    user.user_id
                )));
            };
            let tokens = lists
                .iter()
                .flatten()
                .filter(|t| !t.is_empty() && !config.stopwords.contains(*t))
                .cloned()
                .collect();
            (tokens, lists.len())
        }
    };
    if post_count < config.min_posts {
        return Ok(Preprocessed::Filtered(FilterReason::TooFewPosts { posts: post_count }));
    }
    if tokens.len() < config.min_tokens {
        return Ok(Preprocessed::Filtered(FilterReason::TooFewTokens {
            tokens: tokens.len(),
        }));
    }
    Ok(Preprocessed::Admitted(UserDocument {
        user_id: user.user_id.clone(),
        label: user.label,
        tokens,
        post_count,
    }))
}

/// Dense token ↔ index mapping in lexicographic token order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: BTreeMap<String, u32>,
}

impl From<Vec<String>> for Vocabulary {
    fn from(mut tokens: Vec<String>) -> Self {
        tokens.sort();
        tokens.dedup();
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        Vocabulary { tokens, index }
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.tokens
    }
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn index_of(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, index: u32) -> Option<&str> {
        self.tokens.get(index as usize).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Maps tokens to indices, dropping out-of-vocabulary tokens.
    pub fn encode(&self, doc: &UserDocument) -> EncodedDocument {
        self.encode_tokens(&doc.user_id, doc.tokens.iter().map(String::as_str))
    }

    pub fn encode_tokens<'a>(&self, id: &str, tokens: impl IntoIterator<Item = &'a str>) -> EncodedDocument {
        EncodedDocument {
            id: String::from(id),
            tokens: tokens.into_iter().filter_map(|t| self.index_of(t)).collect(),
        }
    }
}

/// Keeps tokens whose document frequency lies in `[min_df, max_df_ratio * n]`.
pub fn build_vocabulary(docs: &[UserDocument], min_df: usize, max_df_ratio: f64) -> Result<Vocabulary> {
    if docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if !(max_df_ratio > 0.0 && max_df_ratio <= 1.0) {
        return Err(Error::InvalidConfig(alloc::format!(
            "max_df_ratio must lie in (0, 1], got {max_df_ratio}"
        )));
    }
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in docs {
        let distinct: BTreeSet<&str> = doc.tokens.iter().map(String::as_str).collect();
        for t in distinct {
            *df.entry(t).or_default() += 1;
        }
    }
    let max_df = max_df_ratio * docs.len() as f64;
    let kept: Vec<String> = df
        .into_iter()
        .filter(|&(_, n)| n >= min_df && n as f64 <= max_df)
        .map(|(t, _)| String::from(t))
        .collect();
    if kept.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    Ok(Vocabulary::from(kept))
}

/// A document as vocabulary indices, tagged with the owning user id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedDocument {
    pub id: String,
    pub tokens: Vec<u32>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| String::from(*s)).collect()
    }

    fn no_filter(mode: LanguageMode) -> PreprocessConfig {
        PreprocessConfig {
            mode,
            stopwords: BTreeSet::new(),
            stem: true,
            min_posts: 0,
            min_tokens: 0,
        }
    }

    fn doc(id: &str, tokens: &[&str]) -> UserDocument {
        UserDocument {
            user_id: id.into(),
            label: Label::Legitimate,
            tokens: strings(tokens),
            post_count: 1,
        }
    }

    #[test]
    fn english_mode_lowercases_strips_and_stems() {
        let user = RawUser::new("u1", Label::Spammer, strings(&["Running, RUNNING!!"]));
        let out = preprocess(&user, &no_filter(LanguageMode::English)).unwrap();
        assert_eq!(out.admitted().unwrap().tokens, strings(&["run", "run"]));
    }

    #[test]
    fn urls_and_mentions_survive_unstemmed() {
        let user = RawUser::new("u1", Label::Spammer, strings(&["buy now http://x.co/a?b @Deals"]));
        let mut cfg = no_filter(LanguageMode::English);
        cfg.stopwords = english_stopwords();
        let out = preprocess(&user, &cfg).unwrap().admitted().unwrap();
        assert_eq!(out.tokens, strings(&["bui", "http://x.co/a?b", "@deals"]));
    }

    #[test]
    fn few_posts_are_filtered() {
        let user = RawUser::new("u1", Label::Spammer, strings(&["a b", "c", "d"]));
        let mut cfg = no_filter(LanguageMode::English);
        cfg.min_posts = 20;
        assert_eq!(
            preprocess(&user, &cfg).unwrap(),
            Preprocessed::Filtered(FilterReason::TooFewPosts { posts: 3 })
        );
    }

    #[test]
    fn non_ascii_words_are_dropped() {
        let user = RawUser::new("u1", Label::Legitimate, strings(&["天气 不错"]));
        let mut cfg = no_filter(LanguageMode::English);
        cfg.min_tokens = 1;
        assert_eq!(
            preprocess(&user, &cfg).unwrap(),
            Preprocessed::Filtered(FilterReason::TooFewTokens { tokens: 0 })
        );
    }

    #[test]
    fn mode_mismatch_is_a_config_error() {
        let mut user = RawUser::new("u1", Label::Legitimate, vec![]);
        user.pretokenized = Some(vec![strings(&["天气", "不错"])]);
        assert!(matches!(
            preprocess(&user, &no_filter(LanguageMode::English)),
            Err(Error::Config(_))
        ));
        let plain = RawUser::new("u2", Label::Legitimate, strings(&["hello"]));
        assert!(matches!(
            preprocess(&plain, &no_filter(LanguageMode::Pretokenized)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn pretokenized_mode_only_drops_stopwords() {
        let mut user = RawUser::new("u1", Label::Legitimate, vec![]);
        user.pretokenized = Some(vec![strings(&["天气", "的", "Running"]), strings(&["不错"])]);
        let mut cfg = no_filter(LanguageMode::Pretokenized);
        cfg.stopwords = parse_stopwords("# zh\n的\n");
        let out = preprocess(&user, &cfg).unwrap().admitted().unwrap();
        assert_eq!(out.tokens, strings(&["天气", "Running", "不错"]));
        assert_eq!(out.post_count, 2);
    }

    #[test]
    fn bundled_stopwords_parse() {
        let sw = english_stopwords();
        assert!(sw.contains("the"));
        assert!(!sw.iter().any(|w| w.starts_with('#')));
    }

    #[test]
    fn vocabulary_document_frequency_bounds() {
        let docs = [doc("1", &["a", "b"]), doc("2", &["a", "c"])];
        let v = build_vocabulary(&docs, 2, 1.0).unwrap();
        assert_eq!(v.tokens(), &strings(&["a"])[..]);
        let v = build_vocabulary(&docs, 1, 1.0).unwrap();
        assert_eq!(v.tokens(), &strings(&["a", "b", "c"])[..]);
        assert_eq!(build_vocabulary(&docs, 3, 1.0), Err(Error::EmptyVocabulary));
        let v = build_vocabulary(&docs, 1, 0.5).unwrap();
        assert_eq!(v.tokens(), &strings(&["b", "c"])[..]);
    }

    #[test]
    fn vocabulary_round_trips_indices() {
        let docs = [doc("1", &["zeta", "alpha", "mid", "alpha"])];
        let v = build_vocabulary(&docs, 1, 1.0).unwrap();
        for (i, t) in v.tokens().iter().enumerate() {
            assert_eq!(v.index_of(t), Some(i as u32));
            assert_eq!(v.token(i as u32), Some(t.as_str()));
        }
        let enc = v.encode(&doc("9", &["alpha", "oov", "zeta"]));
        assert_eq!(enc.tokens, vec![0, 2]);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let users = [
            RawUser::new("u1", Label::Spammer, vec![]),
            RawUser::new("u1", Label::Legitimate, vec![]),
        ];
        assert_eq!(check_unique_ids(&users), Err(Error::DuplicateUser("u1".into())));
    }
}
