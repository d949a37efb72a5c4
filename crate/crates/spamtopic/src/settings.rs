//! Run settings layered from defaults, a key=value config file, the
//! output-directory environment variable and command-line flags.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use spamtopic_core::classify::{ClassifierKind, ClassifierParams};
use spamtopic_core::corpus::{english_stopwords, LanguageMode, PreprocessConfig};
use spamtopic_core::eval::{FeatureProtocol, FeatureSet, Seeds};
use spamtopic_core::lda::LdaConfig;
use spamtopic_core::synth::SynthConfig;

use crate::artifact::{sha256_hex, Params};
use crate::dataset::{load_stopwords, DatasetFormat};
use crate::error::{Error, Result};

pub const OUT_DIR_ENV: &str = "SPAMTOPIC_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "spamtopic-out";
pub const DEFAULT_SEED: u64 = 7;

/// Every key accepted in a config file; each mirrors a long flag.
pub const KEYS: &[&str] = &[
    "dataset",
    "format",
    "language",
    "stopwords",
    "no-stem",
    "min-posts",
    "min-tokens",
    "min-df",
    "max-df-ratio",
    "topics",
    "alpha",
    "beta",
    "iters",
    "burn-in",
    "seed",
    "model-seed",
    "eval-seed",
    "average",
    "sample-lag",
    "features",
    "classifiers",
    "folds",
    "protocol",
    "balance-classes",
    "save-classifiers",
    "features-csv",
    "out",
    "quiet",
    "n-legit",
    "n-polluter",
    "n-fake",
    "true-topics",
    "vocab-per-topic",
    "doc-len",
    "posts-per-user",
    "link-rate",
    "mention-rate",
];

/// Pipeline stages in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Preprocess,
    TrainLda,
    Extract,
    Evaluate,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Preprocess => "preprocess",
            Stage::TrainLda => "train-lda",
            Stage::Extract => "extract",
            Stage::Evaluate => "evaluate",
        }
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str, path: &Path) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("{}:{}: expected `key = value`", path.display(), i + 1)))?;
        let key = key.trim().trim_start_matches("--");
        if !KEYS.contains(&key) {
            return Err(Error::Config(format!(
                "{}:{}: unknown key `{key}`",
                path.display(),
                i + 1
            )));
        }
        out.insert(key.to_string(), value.trim().to_string());
    }
    Ok(out)
}

pub fn load_config(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, path)
}

/// Merges the layers. Later layers win: file, environment, flags.
pub fn layer(
    file: BTreeMap<String, String>,
    env_out: Option<String>,
    flags: BTreeMap<String, String>,
) -> BTreeMap<String, String> {
    let mut merged = file;
    if let Some(out) = env_out.filter(|s| !s.is_empty()) {
        merged.insert("out".into(), out);
    }
    merged.extend(flags);
    merged
}

#[derive(Debug, Clone)]
pub struct Settings {
    pub dataset: Option<PathBuf>,
    pub format: Option<DatasetFormat>,
    pub preprocess: PreprocessConfig,
    /// `builtin-v1` or the digest of a user stopword file.
    pub stopwords_id: String,
    pub min_df: usize,
    pub max_df_ratio: f64,
    pub lda: LdaConfig,
    pub eval_seed: u64,
    pub features: Vec<FeatureSet>,
    pub classifiers: Vec<ClassifierKind>,
    pub folds: usize,
    pub protocol: FeatureProtocol,
    pub classifier_params: ClassifierParams,
    pub save_classifiers: bool,
    pub features_csv: Option<PathBuf>,
    pub out: PathBuf,
    pub quiet: bool,
    pub synth: SynthConfig,
    /// Keys the user set, after expanding `seed` to both seeds.
    pub explicit: BTreeSet<String>,
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value `{value}` for {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config(format!(
            "invalid value `{value}` for {key}, expected true or false"
        ))),
    }
}

pub fn parse_feature_sets(value: &str) -> Result<Vec<FeatureSet>> {
    let mut sets = Vec::new();
    for spec in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let set = FeatureSet::parse(spec).ok_or_else(|| {
            Error::Config(format!(
                "unknown feature set `{spec}` (use goss, loss, raw, uc joined by +)"
            ))
        })?;
        if sets.contains(&set) {
            return Err(Error::Config(format!("feature set `{spec}` listed twice")));
        }
        sets.push(set);
    }
    if sets.is_empty() {
        return Err(Error::Config("at least one feature set is required".into()));
    }
    Ok(sets)
}

pub fn parse_classifiers(value: &str) -> Result<Vec<ClassifierKind>> {
    let mut kinds = Vec::new();
    for name in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let kind = ClassifierKind::parse(name)
            .ok_or_else(|| Error::Config(format!("unknown classifier `{name}` (use svm, adaboost, rf)")))?;
        if kinds.contains(&kind) {
            return Err(Error::Config(format!("classifier `{name}` listed twice")));
        }
        kinds.push(kind);
    }
    if kinds.is_empty() {
        return Err(Error::Config("at least one classifier is required".into()));
    }
    Ok(kinds)
}

pub fn parse_protocol(value: &str) -> Result<FeatureProtocol> {
    match value {
        "fold_fit" | "fold-fit" => Ok(FeatureProtocol::FoldFit),
        "global" => Ok(FeatureProtocol::Global),
        _ => Err(Error::Config(format!(
            "unknown protocol `{value}` (use fold_fit or global)"
        ))),
    }
}

pub fn protocol_name(p: FeatureProtocol) -> &'static str {
    match p {
        FeatureProtocol::FoldFit => "fold_fit",
        FeatureProtocol::Global => "global",
        FeatureProtocol::Precomputed => "precomputed",
    }
}

impl Settings {
    pub fn resolve(values: &BTreeMap<String, String>) -> Result<Settings> {
        for key in values.keys() {
            if !KEYS.contains(&key.as_str()) {
                return Err(Error::Config(format!("unknown setting `{key}`")));
            }
        }
        let get = |k: &str| values.get(k).map(String::as_str);
        let num = |k: &str, default: usize| -> Result<usize> { get(k).map_or(Ok(default), |v| parse_num(k, v)) };
        let float = |k: &str, default: f64| -> Result<f64> { get(k).map_or(Ok(default), |v| parse_num(k, v)) };
        let flag = |k: &str| -> Result<bool> { get(k).map_or(Ok(false), |v| parse_bool(k, v)) };

        let format = get("format")
            .map(|v| {
                DatasetFormat::parse(v).ok_or_else(|| Error::Config(format!("unknown format `{v}` (use jsonl or tsv)")))
            })
            .transpose()?;
        let mode = match get("language").unwrap_or("english") {
            "english" => LanguageMode::English,
            "pretokenized" => LanguageMode::Pretokenized,
            other => {
                return Err(Error::Config(format!(
                    "unknown language `{other}` (use english or pretokenized)"
                )))
            }
        };
        let (stopwords, stopwords_id) = match get("stopwords") {
            Some(path) => {
                let path = Path::new(path);
                let words = load_stopwords(path)?;
                let listing: Vec<&str> = words.iter().map(String::as_str).collect();
                let id = format!("sha256:{}", sha256_hex(listing.join("\n").as_bytes()));
                (words, id)
            }
            None => (english_stopwords(), "builtin-v1".to_string()),
        };
        let preprocess = PreprocessConfig {
            mode,
            stopwords,
            stem: !flag("no-stem")?,
            min_posts: num("min-posts", 20)?,
            min_tokens: num("min-tokens", 50)?,
        };

        let seed: u64 = get("seed").map_or(Ok(DEFAULT_SEED), |v| parse_num("seed", v))?;
        let model_seed = get("model-seed").map_or(Ok(seed), |v| parse_num("model-seed", v))?;
        let eval_seed = get("eval-seed").map_or(Ok(seed), |v| parse_num("eval-seed", v))?;
        let defaults = LdaConfig::default();
        let lda = LdaConfig {
            topics: num("topics", defaults.topics)?,
            alpha: float("alpha", defaults.alpha)?,
            beta: float("beta", defaults.beta)?,
            iterations: num("iters", defaults.iterations)?,
            burn_in: num("burn-in", defaults.burn_in)?,
            seed: model_seed,
            average: flag("average")?,
            sample_lag: num("sample-lag", defaults.sample_lag)?,
        };
        lda.validate()?;

        let folds = num("folds", 10)?;
        if folds < 2 {
            return Err(Error::Config(format!("folds must be at least 2, got {folds}")));
        }
        let min_df = num("min-df", 5)?;
        let max_df_ratio = float("max-df-ratio", 0.5)?;
        if !(max_df_ratio > 0.0 && max_df_ratio <= 1.0) {
            return Err(Error::Config(format!(
                "max-df-ratio must lie in (0, 1], got {max_df_ratio}"
            )));
        }

        let sd = SynthConfig::default();
        let synth = SynthConfig {
            n_legit: num("n-legit", sd.n_legit)?,
            n_polluter: num("n-polluter", sd.n_polluter)?,
            n_fake: num("n-fake", sd.n_fake)?,
            topics: num("true-topics", sd.topics)?,
            vocab_per_topic: num("vocab-per-topic", sd.vocab_per_topic)?,
            doc_len: num("doc-len", sd.doc_len)?,
            posts_per_user: num("posts-per-user", sd.posts_per_user)?,
            link_rate: float("link-rate", sd.link_rate)?,
            mention_rate: float("mention-rate", sd.mention_rate)?,
            seed,
            ..sd
        };

        let mut explicit: BTreeSet<String> = values.keys().cloned().collect();
        if explicit.contains("seed") {
            explicit.insert("model-seed".into());
            explicit.insert("eval-seed".into());
        }

        Ok(Settings {
            dataset: get("dataset").map(PathBuf::from),
            format,
            preprocess,
            stopwords_id,
            min_df,
            max_df_ratio,
            lda,
            eval_seed,
            features: parse_feature_sets(get("features").unwrap_or("goss,loss,goss+loss"))?,
            classifiers: parse_classifiers(get("classifiers").unwrap_or("svm,adaboost,rf"))?,
            folds,
            protocol: parse_protocol(get("protocol").unwrap_or("fold_fit"))?,
            classifier_params: ClassifierParams {
                balance_classes: flag("balance-classes")?,
                ..ClassifierParams::default()
            },
            save_classifiers: flag("save-classifiers")?,
            features_csv: get("features-csv").map(PathBuf::from),
            out: PathBuf::from(get("out").unwrap_or(DEFAULT_OUT_DIR)),
            quiet: flag("quiet")?,
            synth,
            explicit,
        })
    }

    pub fn seeds(&self) -> Seeds {
        Seeds {
            model: self.lda.seed,
            eval: self.eval_seed,
        }
    }

    /// The canonical parameters recorded in a stage's artifact.
    pub fn stage_params(&self, stage: Stage) -> Params {
        let mut p = Params::new();
        let mut put = |k: &str, v: String| {
            p.insert(k.to_string(), v);
        };
        match stage {
            Stage::Preprocess => {
                let language = match self.preprocess.mode {
                    LanguageMode::English => "english",
                    LanguageMode::Pretokenized => "pretokenized",
                };
                put("language", language.into());
                put("stopwords", self.stopwords_id.clone());
                put("no-stem", (!self.preprocess.stem).to_string());
                put("min-posts", self.preprocess.min_posts.to_string());
                put("min-tokens", self.preprocess.min_tokens.to_string());
                put("min-df", self.min_df.to_string());
                put("max-df-ratio", self.max_df_ratio.to_string());
            }
            Stage::TrainLda => {
                put("topics", self.lda.topics.to_string());
                put("alpha", self.lda.alpha.to_string());
                put("beta", self.lda.beta.to_string());
                put("iters", self.lda.iterations.to_string());
                put("burn-in", self.lda.burn_in.to_string());
                put("model-seed", self.lda.seed.to_string());
                put("average", self.lda.average.to_string());
                put("sample-lag", self.lda.sample_lag.to_string());
            }
            Stage::Extract => {
                let names: Vec<String> = self.features.iter().map(FeatureSet::name).collect();
                put("features", names.join(","));
            }
            Stage::Evaluate => {
                let names: Vec<&str> = self.classifiers.iter().map(|k| k.short_name()).collect();
                put("classifiers", names.join(","));
                put("folds", self.folds.to_string());
                put("protocol", protocol_name(self.protocol).into());
                put("eval-seed", self.eval_seed.to_string());
                put("balance-classes", self.classifier_params.balance_classes.to_string());
            }
        }
        p
    }

    /// The subset of a stage's parameters the user asked for explicitly.
    pub fn requested(&self, stage: Stage) -> Params {
        self.stage_params(stage)
            .into_iter()
            .filter(|(k, _)| self.explicit.contains(k))
            .collect()
    }
}
