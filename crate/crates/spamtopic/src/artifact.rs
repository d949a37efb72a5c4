//! Versioned JSON artifacts chained by config hash.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

pub type Params = BTreeMap<String, String>;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

#[derive(Serialize)]
struct HashInput<'a> {
    stage: &'a str,
    upstream_hash: Option<&'a str>,
    dataset_sha256: Option<&'a str>,
    params: &'a Params,
}

/// Hash of everything that determines a stage's output: its own
/// parameters, the upstream hash and the dataset digest.
pub fn config_hash(stage: &str, upstream_hash: Option<&str>, dataset_sha256: Option<&str>, params: &Params) -> String {
    let input = HashInput {
        stage,
        upstream_hash,
        dataset_sha256,
        params,
    };
    sha256_hex(&serde_json::to_vec(&input).expect("hash input serializes"))
}

/// Common header around every stage artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub format_version: u32,
    pub stage: String,
    pub config_hash: String,
    pub upstream_hash: Option<String>,
    pub dataset_sha256: Option<String>,
    pub params: Params,
    pub payload: T,
}

impl<T> Envelope<T> {
    pub fn new(
        stage: &str,
        upstream_hash: Option<String>,
        dataset_sha256: Option<String>,
        params: Params,
        payload: T,
    ) -> Self {
        let config_hash = config_hash(stage, upstream_hash.as_deref(), dataset_sha256.as_deref(), &params);
        Envelope {
            format_version: FORMAT_VERSION,
            stage: stage.to_string(),
            config_hash,
            upstream_hash,
            dataset_sha256,
            params,
            payload,
        }
    }

    fn recomputed_hash(&self) -> String {
        config_hash(
            &self.stage,
            self.upstream_hash.as_deref(),
            self.dataset_sha256.as_deref(),
            &self.params,
        )
    }
}

#[derive(Deserialize)]
struct VersionProbe {
    format_version: u32,
}

pub fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| Error::Internal(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Writes `bytes` and returns their SHA-256.
pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<String> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(bytes))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<String> {
    write_bytes(path, &to_json(value)?)
}

/// Reads a JSON document carrying a `format_version`, rejecting other versions.
pub fn read_versioned<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let format = |e: serde_json::Error| Error::Format {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    };
    let probe: VersionProbe = serde_json::from_str(&text).map_err(format)?;
    if probe.format_version != FORMAT_VERSION {
        return Err(Error::Version {
            path: path.to_path_buf(),
            found: probe.format_version,
            expected: FORMAT_VERSION,
        });
    }
    serde_json::from_str(&text).map_err(format)
}

/// Loads a stage artifact and verifies its stage name and header hash.
pub fn read_envelope<T: DeserializeOwned>(path: &Path, stage: &str) -> Result<Envelope<T>> {
    let env: Envelope<T> = read_versioned(path)?;
    let stale = |message: String| Error::StaleArtifact {
        path: path.to_path_buf(),
        message,
    };
    if env.stage != stage {
        return Err(stale(format!("expected a {stage} artifact, found {}", env.stage)));
    }
    if env.recomputed_hash() != env.config_hash {
        return Err(stale("config hash does not match the recorded settings".into()));
    }
    Ok(env)
}

/// Rejects `child` unless it was produced from `parent`.
pub fn check_chain<A, B>(child: &Envelope<A>, child_path: &Path, parent: &Envelope<B>) -> Result<()> {
    if child.upstream_hash.as_deref() != Some(parent.config_hash.as_str()) {
        return Err(Error::StaleArtifact {
            path: child_path.to_path_buf(),
            message: format!("built from a different {} artifact", parent.stage),
        });
    }
    Ok(())
}

/// Rejects an artifact whose recorded parameters disagree with settings
/// the user gave explicitly.
pub fn check_params<T>(env: &Envelope<T>, path: &Path, requested: &Params) -> Result<()> {
    for (key, want) in requested {
        if let Some(have) = env.params.get(key) {
            if have != want {
                return Err(Error::StaleArtifact {
                    path: path.to_path_buf(),
                    message: format!("built with {key}={have}, but {key}={want} was requested"),
                });
            }
        }
    }
    Ok(())
}

pub fn check_dataset<T>(env: &Envelope<T>, path: &Path, dataset_sha256: Option<&str>) -> Result<()> {
    match (dataset_sha256, env.dataset_sha256.as_deref()) {
        (Some(want), Some(have)) if want != have => Err(Error::StaleArtifact {
            path: path.to_path_buf(),
            message: "built from a different dataset".into(),
        }),
        _ => Ok(()),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub config_hash: String,
    /// File name to SHA-256.
    pub artifacts: BTreeMap<String, String>,
}

/// Run manifest: seeds, per-stage config hashes and artifact checksums.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub config_hash: String,
    pub seeds: BTreeMap<String, u64>,
    pub stages: BTreeMap<String, StageRecord>,
}

impl Default for Manifest {
    fn default() -> Self {
        Manifest {
            format_version: FORMAT_VERSION,
            config_hash: String::new(),
            seeds: BTreeMap::new(),
            stages: BTreeMap::new(),
        }
    }
}

pub const MANIFEST_FILE: &str = "manifest.json";

impl Manifest {
    pub fn path(out: &Path) -> PathBuf {
        out.join(MANIFEST_FILE)
    }

    /// The manifest in `out`, or an empty one.
    pub fn load_or_default(out: &Path) -> Result<Manifest> {
        let path = Manifest::path(out);
        if path.exists() {
            read_versioned(&path)
        } else {
            Ok(Manifest::default())
        }
    }

    pub fn record(&mut self, stage: &str, record: StageRecord) {
        self.config_hash = record.config_hash.clone();
        self.stages.insert(stage.to_string(), record);
    }

    pub fn save(&self, out: &Path) -> Result<()> {
        write_json(&Manifest::path(out), self).map(drop)
    }
}
