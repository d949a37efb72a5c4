//! The pipeline stages. Each reads the previous stage's artifact from the
//! output directory and writes its own; `run` chains them all.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use spamtopic_core::classify::{self, ClassifierKind, LabeledSet};
use spamtopic_core::corpus::{
    build_vocabulary, preprocess as preprocess_user, FilterReason, Label, Preprocessed, RawUser, UserDocument,
    Vocabulary,
};
use spamtopic_core::eval::{cross_validate, CvConfig, FeatureKind, FeatureProtocol, FeatureSet, FeatureSource};
use spamtopic_core::features::{uc_features, FeatureMatrix, GossStats};
use spamtopic_core::lda::{self, topic_matrix, TopicMatrix, TopicModel};
use spamtopic_core::synth::{generate, GroundTruth, SynthConfig};

use crate::artifact::{
    check_chain, check_dataset, check_params, file_sha256, read_envelope, to_json, write_bytes, write_json, Envelope,
    Manifest, StageRecord, FORMAT_VERSION,
};
use crate::dataset::{load_dataset, to_jsonl, DatasetFormat};
use crate::error::{Error, Result};
use crate::report::{render_text, Report};
use crate::settings::{Settings, Stage};
use crate::table::{read_csv, to_csv};

pub const CORPUS_FILE: &str = "corpus.json";
pub const MODEL_FILE: &str = "model.json";
pub const FEATURES_FILE: &str = "features.json";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TEXT: &str = "report.txt";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilteredUser {
    pub user_id: String,
    pub reason: FilterReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusPayload {
    pub docs: Vec<UserDocument>,
    pub filtered: Vec<FilteredUser>,
    pub vocabulary: Vocabulary,
    /// Usage counts per admitted user; absent when some user has no raw posts.
    pub uc: Option<FeatureMatrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturesPayload {
    pub user_ids: Vec<String>,
    pub labels: Vec<Label>,
    pub topics: TopicMatrix,
    pub uc: Option<FeatureMatrix>,
    pub feature_sets: Vec<FeatureSet>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthTruth {
    pub format_version: u32,
    pub config: SynthConfig,
    pub truth: GroundTruth,
}

/// A classifier fitted on every user, with what is needed to score new ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavedClassifier {
    pub format_version: u32,
    pub feature_set: String,
    pub column_names: Vec<String>,
    /// Training-population statistics for the GOSS columns, if any.
    pub goss: Option<GossStats>,
    pub classifier: classify::Classifier,
}

pub fn csv_file_name(set: &str) -> String {
    format!("features_{set}.csv")
}

pub fn classifier_file_name(set: &str, kind: ClassifierKind) -> String {
    format!("classifier_{set}_{}.json", kind.short_name())
}

fn progress(settings: &Settings, message: std::fmt::Arguments<'_>) {
    if !settings.quiet {
        eprintln!("{message}");
    }
}

/// Sidecar path for ground truth: `synth.jsonl` becomes `synth.truth.json`.
pub fn truth_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("synth");
    out.with_file_name(format!("{stem}.truth.json"))
}

pub fn synth(config: &SynthConfig, out: &Path, quiet: bool) -> Result<()> {
    let (users, truth) = generate(config)?;
    write_bytes(out, to_jsonl(&users)?.as_bytes())?;
    let sidecar = truth_path(out);
    write_json(
        &sidecar,
        &SynthTruth {
            format_version: FORMAT_VERSION,
            config: config.clone(),
            truth,
        },
    )?;
    if !quiet {
        eprintln!(
            "synth: wrote {} users to {} and {}",
            users.len(),
            out.display(),
            sidecar.display()
        );
    }
    Ok(())
}

fn dataset_digest(settings: &Settings) -> Result<Option<String>> {
    settings.dataset.as_deref().map(file_sha256).transpose()
}

fn load_corpus(settings: &Settings, dataset_sha: Option<&str>) -> Result<Envelope<CorpusPayload>> {
    let path = settings.out.join(CORPUS_FILE);
    let env = read_envelope(&path, Stage::Preprocess.name())?;
    check_params(&env, &path, &settings.requested(Stage::Preprocess))?;
    check_dataset(&env, &path, dataset_sha)?;
    Ok(env)
}

fn load_model(settings: &Settings, corpus: &Envelope<CorpusPayload>) -> Result<Envelope<TopicModel>> {
    let path = settings.out.join(MODEL_FILE);
    let env = read_envelope(&path, Stage::TrainLda.name())?;
    check_chain(&env, &path, corpus)?;
    check_params(&env, &path, &settings.requested(Stage::TrainLda))?;
    Ok(env)
}

pub fn preprocess(settings: &Settings) -> Result<()> {
    let dataset = settings
        .dataset
        .as_deref()
        .ok_or_else(|| Error::Config("--dataset is required".into()))?;
    let format = settings.format.unwrap_or_else(|| DatasetFormat::from_path(dataset));
    let users = load_dataset(dataset, format)?;
    let dataset_sha = file_sha256(dataset)?;

    let mut docs = Vec::new();
    let mut admitted_users: Vec<&RawUser> = Vec::new();
    let mut filtered = Vec::new();
    for user in &users {
        match preprocess_user(user, &settings.preprocess)? {
            Preprocessed::Admitted(doc) => {
                docs.push(doc);
                admitted_users.push(user);
            }
            Preprocessed::Filtered(reason) => filtered.push(FilteredUser {
                user_id: user.user_id.clone(),
                reason,
            }),
        }
    }
    if docs.is_empty() {
        return Err(spamtopic_core::Error::EmptyCorpus.into());
    }
    let vocabulary = build_vocabulary(&docs, settings.min_df, settings.max_df_ratio)?;
    let uc = if admitted_users.iter().all(|u| !u.posts.is_empty()) {
        let owned: Vec<RawUser> = admitted_users.iter().map(|&u| u.clone()).collect();
        Some(uc_features(&owned)?)
    } else {
        None
    };
    progress(
        settings,
        format_args!(
            "preprocess: {} users admitted, {} filtered, vocabulary of {}",
            docs.len(),
            filtered.len(),
            vocabulary.len()
        ),
    );

    let env = Envelope::new(
        Stage::Preprocess.name(),
        None,
        Some(dataset_sha),
        settings.stage_params(Stage::Preprocess),
        CorpusPayload {
            docs,
            filtered,
            vocabulary,
            uc,
        },
    );
    let sha = write_json(&settings.out.join(CORPUS_FILE), &env)?;
    // The first stage starts a fresh manifest.
    let mut manifest = Manifest::default();
    manifest.record(
        Stage::Preprocess.name(),
        record(&env.config_hash, [(CORPUS_FILE.to_string(), sha)]),
    );
    manifest.save(&settings.out)
}

fn record(config_hash: &str, artifacts: impl IntoIterator<Item = (String, String)>) -> StageRecord {
    StageRecord {
        config_hash: config_hash.to_string(),
        artifacts: artifacts.into_iter().collect(),
    }
}

pub fn train_lda(settings: &Settings) -> Result<()> {
    let corpus = load_corpus(settings, dataset_digest(settings)?.as_deref())?;
    let vocabulary = &corpus.payload.vocabulary;
    let encoded: Vec<_> = corpus.payload.docs.iter().map(|d| vocabulary.encode(d)).collect();
    progress(
        settings,
        format_args!(
            "train-lda: {} documents, {} topics, {} sweeps",
            encoded.len(),
            settings.lda.topics,
            settings.lda.iterations
        ),
    );
    let model = lda::fit(&encoded, vocabulary, &settings.lda)?;
    let env = Envelope::new(
        Stage::TrainLda.name(),
        Some(corpus.config_hash.clone()),
        corpus.dataset_sha256.clone(),
        settings.stage_params(Stage::TrainLda),
        model,
    );
    let sha = write_json(&settings.out.join(MODEL_FILE), &env)?;
    let mut manifest = Manifest::load_or_default(&settings.out)?;
    manifest.seeds.insert("model".into(), settings.lda.seed);
    manifest.record(
        Stage::TrainLda.name(),
        record(&env.config_hash, [(MODEL_FILE.to_string(), sha)]),
    );
    manifest.save(&settings.out)
}

pub fn extract(settings: &Settings) -> Result<()> {
    let corpus = load_corpus(settings, dataset_digest(settings)?.as_deref())?;
    let model = load_model(settings, &corpus)?;
    let docs = &corpus.payload.docs;
    let user_ids: Vec<String> = docs.iter().map(|d| d.user_id.clone()).collect();
    if model.payload.doc_ids != user_ids {
        return Err(Error::Internal("model documents do not match the corpus".into()));
    }
    let uc = corpus.payload.uc.clone();
    if settings.features.iter().any(FeatureSet::needs_uc) && uc.is_none() {
        return Err(Error::Config(
            "uc features need raw posts, but the dataset has users without posts (pretokenized input?)".into(),
        ));
    }
    let labels: Vec<Label> = docs.iter().map(|d| d.label).collect();
    let topics = topic_matrix(&model.payload);

    let mut artifacts = Vec::new();
    for set in &settings.features {
        let source = FeatureSource::Topics {
            topics: &topics,
            uc: uc.as_ref(),
            set,
        };
        let matrix = source.materialize()?;
        let name = csv_file_name(&set.name());
        let sha = write_bytes(&settings.out.join(&name), &to_csv(&user_ids, &labels, &matrix)?)?;
        artifacts.push((name, sha));
    }
    let env = Envelope::new(
        Stage::Extract.name(),
        Some(model.config_hash.clone()),
        model.dataset_sha256.clone(),
        settings.stage_params(Stage::Extract),
        FeaturesPayload {
            user_ids,
            labels,
            topics,
            uc,
            feature_sets: settings.features.clone(),
        },
    );
    artifacts.push((
        FEATURES_FILE.to_string(),
        write_json(&settings.out.join(FEATURES_FILE), &env)?,
    ));
    progress(
        settings,
        format_args!("extract: {} feature sets", settings.features.len()),
    );
    let mut manifest = Manifest::load_or_default(&settings.out)?;
    manifest.record(Stage::Extract.name(), record(&env.config_hash, artifacts));
    manifest.save(&settings.out)
}

/// Cross-validates every requested classifier on `source`.
fn evaluate_source(
    settings: &Settings,
    source: &FeatureSource<'_>,
    set_name: &str,
    labels: &[Label],
) -> Result<Vec<spamtopic_core::eval::EvalReport>> {
    let mut out = Vec::new();
    for &kind in &settings.classifiers {
        let cfg = CvConfig {
            kind,
            params: &settings.classifier_params,
            folds: settings.folds,
            seeds: settings.seeds(),
            protocol: settings.protocol,
            feature_set_name: set_name.to_string(),
        };
        let report = cross_validate(source, labels, &cfg)?;
        progress(
            settings,
            format_args!(
                "evaluate: {set_name} {} f1={:.3}",
                kind.display_name(),
                report.pooled_metrics.f1
            ),
        );
        out.push(report);
    }
    Ok(out)
}

fn save_classifiers(
    settings: &Settings,
    source: &FeatureSource<'_>,
    set_name: &str,
    labels: &[Label],
    goss: Option<GossStats>,
    artifacts: &mut Vec<(String, String)>,
) -> Result<()> {
    let features = source.materialize()?;
    let column_names = features.column_names.clone();
    let data = LabeledSet::new(features, labels.to_vec())?;
    for &kind in &settings.classifiers {
        let classifier = classify::fit(kind, &data, &settings.classifier_params, settings.eval_seed)?;
        let saved = SavedClassifier {
            format_version: FORMAT_VERSION,
            feature_set: set_name.to_string(),
            column_names: column_names.clone(),
            goss: goss.clone(),
            classifier,
        };
        let name = classifier_file_name(set_name, kind);
        artifacts.push((name.clone(), write_json(&settings.out.join(&name), &saved)?));
    }
    Ok(())
}

/// Name of the feature set stored in `features_<set>.csv`.
fn csv_set_name(path: &Path) -> String {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("features");
    stem.strip_prefix("features_").unwrap_or(stem).to_string()
}

pub fn evaluate(settings: &Settings) -> Result<String> {
    let mut artifacts = Vec::new();
    let (results, upstream, dataset_sha, protocol) = match &settings.features_csv {
        Some(csv_path) => {
            let table = read_csv(csv_path)?;
            let name = csv_set_name(csv_path);
            let source = FeatureSource::Precomputed(&table.features);
            let results = evaluate_source(settings, &source, &name, &table.labels)?;
            if settings.save_classifiers {
                save_classifiers(settings, &source, &name, &table.labels, None, &mut artifacts)?;
            }
            (
                results,
                None,
                Some(file_sha256(csv_path)?),
                FeatureProtocol::Precomputed,
            )
        }
        None => {
            let corpus = load_corpus(settings, dataset_digest(settings)?.as_deref())?;
            let model = load_model(settings, &corpus)?;
            let path = settings.out.join(FEATURES_FILE);
            let features: Envelope<FeaturesPayload> = read_envelope(&path, Stage::Extract.name())?;
            check_chain(&features, &path, &model)?;
            check_params(&features, &path, &settings.requested(Stage::Extract))?;
            let p = &features.payload;
            let mut results = Vec::new();
            for set in &p.feature_sets {
                let source = FeatureSource::Topics {
                    topics: &p.topics,
                    uc: p.uc.as_ref(),
                    set,
                };
                results.extend(evaluate_source(settings, &source, &set.name(), &p.labels)?);
                if settings.save_classifiers {
                    let goss = if set.0.contains(&FeatureKind::Goss) {
                        Some(GossStats::fit(p.topics.matrix())?)
                    } else {
                        None
                    };
                    save_classifiers(settings, &source, &set.name(), &p.labels, goss, &mut artifacts)?;
                }
            }
            (
                results,
                Some(features.config_hash.clone()),
                features.dataset_sha256.clone(),
                settings.protocol,
            )
        }
    };

    let report = Report {
        folds: settings.folds,
        protocol,
        seeds: settings.seeds(),
        results,
    };
    let text = render_text(&report);
    let env = Envelope::new(
        Stage::Evaluate.name(),
        upstream,
        dataset_sha,
        settings.stage_params(Stage::Evaluate),
        report,
    );
    artifacts.push((
        REPORT_JSON.to_string(),
        write_bytes(&settings.out.join(REPORT_JSON), &to_json(&env)?)?,
    ));
    artifacts.push((
        REPORT_TEXT.to_string(),
        write_bytes(&settings.out.join(REPORT_TEXT), text.as_bytes())?,
    ));
    let mut manifest = Manifest::load_or_default(&settings.out)?;
    manifest.seeds.insert("eval".into(), settings.eval_seed);
    manifest.record(Stage::Evaluate.name(), record(&env.config_hash, artifacts));
    manifest.save(&settings.out)?;
    Ok(text)
}

/// All four stages in order. Returns the report table.
pub fn run(settings: &Settings) -> Result<String> {
    if settings.features_csv.is_some() {
        return Err(Error::Config("--features-csv applies to evaluate, not run".into()));
    }
    preprocess(settings)?;
    train_lda(settings)?;
    extract(settings)?;
    evaluate(settings)
}

/// Reads a saved classifier artifact.
pub fn load_classifier(path: &Path) -> Result<SavedClassifier> {
    crate::artifact::read_versioned(path)
}
