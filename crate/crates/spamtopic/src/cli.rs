//! Command-line front end.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::pipeline;
use crate::settings::{layer, load_config, Settings, OUT_DIR_ENV};

#[derive(Debug, Parser)]
#[command(
    name = "spamtopic",
    version,
    about = "Topic-based spammer detection with GOSS/LOSS features"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a labeled synthetic dataset plus a ground-truth sidecar
    Synth(Opts),
    /// Tokenize, filter and build the vocabulary (writes corpus.json)
    Preprocess(Opts),
    /// Fit the topic model (writes model.json)
    TrainLda(Opts),
    /// Compute feature matrices (writes features.json and features_<set>.csv)
    Extract(Opts),
    /// Cross-validate classifiers (writes report.json and report.txt)
    Evaluate(Opts),
    /// Run preprocess, train-lda, extract and evaluate in order
    Run(Opts),
}

#[derive(Debug, Default, Args)]
struct Opts {
    /// Key=value settings file; flags override it
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Output directory (for synth: the JSONL file to write)
    #[arg(long, value_name = "PATH")]
    out: Option<String>,
    #[arg(long, value_name = "FILE")]
    dataset: Option<String>,
    /// jsonl or tsv (default: from the file extension)
    #[arg(long)]
    format: Option<String>,
    /// english or pretokenized
    #[arg(long)]
    language: Option<String>,
    /// Stopword file, one word per line
    #[arg(long, value_name = "FILE")]
    stopwords: Option<String>,
    #[arg(long)]
    no_stem: bool,
    #[arg(long)]
    min_posts: Option<String>,
    #[arg(long)]
    min_tokens: Option<String>,
    #[arg(long)]
    min_df: Option<String>,
    #[arg(long)]
    max_df_ratio: Option<String>,
    #[arg(long)]
    topics: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    /// Gibbs sweeps
    #[arg(long)]
    iters: Option<String>,
    #[arg(long)]
    burn_in: Option<String>,
    /// Sets both the model and the evaluation seed
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    model_seed: Option<String>,
    #[arg(long)]
    eval_seed: Option<String>,
    /// Average θ and ψ over post-burn-in samples
    #[arg(long)]
    average: bool,
    #[arg(long)]
    sample_lag: Option<String>,
    /// Comma-separated feature sets, each a +-joined subset of goss, loss, raw, uc
    #[arg(long)]
    features: Option<String>,
    /// Comma-separated: svm, adaboost, rf
    #[arg(long)]
    classifiers: Option<String>,
    #[arg(long)]
    folds: Option<String>,
    /// fold_fit or global
    #[arg(long)]
    protocol: Option<String>,
    /// Weight samples inversely to class size
    #[arg(long)]
    balance_classes: bool,
    /// Also fit each classifier on all users and save it
    #[arg(long)]
    save_classifiers: bool,
    /// Evaluate a feature CSV instead of the extract artifact
    #[arg(long, value_name = "FILE")]
    features_csv: Option<String>,
    #[arg(long)]
    quiet: bool,
    #[arg(long)]
    n_legit: Option<String>,
    #[arg(long)]
    n_polluter: Option<String>,
    #[arg(long)]
    n_fake: Option<String>,
    /// Planted topic count
    #[arg(long)]
    true_topics: Option<String>,
    #[arg(long)]
    vocab_per_topic: Option<String>,
    #[arg(long)]
    doc_len: Option<String>,
    #[arg(long)]
    posts_per_user: Option<String>,
    #[arg(long)]
    link_rate: Option<String>,
    #[arg(long)]
    mention_rate: Option<String>,
}

impl Opts {
    fn flag_values(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let values = [
            ("out", &self.out),
            ("dataset", &self.dataset),
            ("format", &self.format),
            ("language", &self.language),
            ("stopwords", &self.stopwords),
            ("min-posts", &self.min_posts),
            ("min-tokens", &self.min_tokens),
            ("min-df", &self.min_df),
            ("max-df-ratio", &self.max_df_ratio),
            ("topics", &self.topics),
            ("alpha", &self.alpha),
            ("beta", &self.beta),
            ("iters", &self.iters),
            ("burn-in", &self.burn_in),
            ("seed", &self.seed),
            ("model-seed", &self.model_seed),
            ("eval-seed", &self.eval_seed),
            ("sample-lag", &self.sample_lag),
            ("features", &self.features),
            ("classifiers", &self.classifiers),
            ("folds", &self.folds),
            ("protocol", &self.protocol),
            ("features-csv", &self.features_csv),
            ("n-legit", &self.n_legit),
            ("n-polluter", &self.n_polluter),
            ("n-fake", &self.n_fake),
            ("true-topics", &self.true_topics),
            ("vocab-per-topic", &self.vocab_per_topic),
            ("doc-len", &self.doc_len),
            ("posts-per-user", &self.posts_per_user),
            ("link-rate", &self.link_rate),
            ("mention-rate", &self.mention_rate),
        ];
        for (key, value) in values {
            if let Some(v) = value {
                m.insert(key.to_string(), v.clone());
            }
        }
        let switches = [
            ("no-stem", self.no_stem),
            ("average", self.average),
            ("balance-classes", self.balance_classes),
            ("save-classifiers", self.save_classifiers),
            ("quiet", self.quiet),
        ];
        for (key, on) in switches {
            if on {
                m.insert(key.to_string(), "true".into());
            }
        }
        m
    }
}

/// Parses `args` (program name first) and runs the subcommand.
pub fn main_with_args(args: &[String]) -> Result<()> {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e)
            if matches!(
                e.kind(),
                ErrorKind::DisplayHelp
                    | ErrorKind::DisplayVersion
                    | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
            ) =>
        {
            print!("{e}");
            return Ok(());
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            return Err(Error::Config(first.trim_start_matches("error: ").to_string()));
        }
    };
    let (command, opts) = match &cli.command {
        Command::Synth(o) => ("synth", o),
        Command::Preprocess(o) => ("preprocess", o),
        Command::TrainLda(o) => ("train-lda", o),
        Command::Extract(o) => ("extract", o),
        Command::Evaluate(o) => ("evaluate", o),
        Command::Run(o) => ("run", o),
    };
    let file = match &opts.config {
        Some(path) => load_config(path)?,
        None => BTreeMap::new(),
    };
    let flags = opts.flag_values();

    if command == "synth" {
        // Here --out names a file, so the output-directory variable does not apply.
        let values = layer(file, None, flags);
        let out = values
            .get("out")
            .map(PathBuf::from)
            .ok_or_else(|| Error::Config("synth needs --out FILE".into()))?;
        let settings = Settings::resolve(&values)?;
        return pipeline::synth(&settings.synth, &out, settings.quiet);
    }

    let values = layer(file, std::env::var(OUT_DIR_ENV).ok(), flags);
    let settings = Settings::resolve(&values)?;
    match command {
        "preprocess" => pipeline::preprocess(&settings),
        "train-lda" => pipeline::train_lda(&settings),
        "extract" => pipeline::extract(&settings),
        "evaluate" | "run" => {
            let text = if command == "run" {
                pipeline::run(&settings)?
            } else {
                pipeline::evaluate(&settings)?
            };
            if !settings.quiet {
                print!("{text}");
            }
            Ok(())
        }
        _ => unreachable!("subcommand list is closed"),
    }
}
