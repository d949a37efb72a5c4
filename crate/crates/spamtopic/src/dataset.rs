//! Labeled user datasets on disk: JSONL and TSV.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use spamtopic_core::corpus::{parse_stopwords, Label, RawUser};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    Jsonl,
    Tsv,
}

impl DatasetFormat {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "jsonl" => Some(DatasetFormat::Jsonl),
            "tsv" => Some(DatasetFormat::Tsv),
            _ => None,
        }
    }

    /// `.tsv` files are TSV, everything else JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("tsv") => DatasetFormat::Tsv,
            _ => DatasetFormat::Jsonl,
        }
    }
}

pub fn load_dataset(path: &Path, format: DatasetFormat) -> Result<Vec<RawUser>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(&text, format, path)
}

pub fn parse_dataset(text: &str, format: DatasetFormat, path: &Path) -> Result<Vec<RawUser>> {
    let mut users = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fail = |message: String| Error::Format {
            path: path.to_path_buf(),
            line: line_no,
            message,
        };
        let user = match format {
            DatasetFormat::Jsonl => serde_json::from_str::<RawUser>(line).map_err(|e| fail(e.to_string()))?,
            DatasetFormat::Tsv => parse_tsv_line(line).map_err(fail)?,
        };
        if user.user_id.is_empty() {
            return Err(fail("empty user_id".into()));
        }
        if !seen.insert(user.user_id.clone()) {
            return Err(spamtopic_core::Error::DuplicateUser(user.user_id).into());
        }
        users.push(user);
    }
    Ok(users)
}

fn parse_tsv_line(line: &str) -> std::result::Result<RawUser, String> {
    let mut fields = line.split('\t');
    let user_id = fields.next().unwrap_or_default();
    let label = fields
        .next()
        .ok_or("expected user_id, label and posts separated by tabs")?;
    let label = Label::parse(label).ok_or_else(|| format!("unknown label `{label}`"))?;
    Ok(RawUser::new(user_id, label, fields.map(String::from).collect()))
}

pub fn to_jsonl(users: &[RawUser]) -> Result<String> {
    let mut out = String::new();
    for u in users {
        let line = serde_json::to_string(u).map_err(|e| Error::Internal(e.to_string()))?;
        writeln!(out, "{line}").expect("write to String");
    }
    Ok(out)
}

pub fn load_stopwords(path: &Path) -> Result<BTreeSet<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_stopwords(&text))
}
