//! Feature matrices as CSV: `user_id,label,<feature columns...>`.

use std::path::Path;

use spamtopic_core::corpus::Label;
use spamtopic_core::features::FeatureMatrix;
use spamtopic_core::Matrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledFeatures {
    pub user_ids: Vec<String>,
    pub labels: Vec<Label>,
    pub features: FeatureMatrix,
}

pub fn to_csv(user_ids: &[String], labels: &[Label], features: &FeatureMatrix) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let internal = |e: csv::Error| Error::Internal(e.to_string());
    let mut header = vec!["user_id", "label"];
    header.extend(features.column_names.iter().map(String::as_str));
    w.write_record(&header).map_err(internal)?;
    for (r, (id, label)) in user_ids.iter().zip(labels).enumerate() {
        let mut record = vec![id.clone(), label.as_str().to_string()];
        // `{}` on f64 prints the shortest string that parses back exactly.
        record.extend(features.values.row(r).iter().map(|v| v.to_string()));
        w.write_record(&record).map_err(internal)?;
    }
    w.into_inner().map_err(|e| Error::Internal(e.to_string()))
}

pub fn read_csv(path: &Path) -> Result<LabeledFeatures> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&bytes, path)
}

pub fn parse_csv(bytes: &[u8], path: &Path) -> Result<LabeledFeatures> {
    let fail = |line: usize, message: String| Error::Format {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
    let header = reader.headers().map_err(|e| fail(1, e.to_string()))?.clone();
    if header.len() < 3 || &header[0] != "user_id" || &header[1] != "label" {
        return Err(fail(
            1,
            "header must start with user_id,label followed by feature columns".into(),
        ));
    }
    let column_names: Vec<String> = header.iter().skip(2).map(String::from).collect();
    let mut user_ids = Vec::new();
    let mut labels = Vec::new();
    let mut data = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| fail(line, e.to_string()))?;
        if record.len() != header.len() {
            return Err(fail(
                line,
                format!("expected {} fields, found {}", header.len(), record.len()),
            ));
        }
        user_ids.push(record[0].to_string());
        labels.push(Label::parse(&record[1]).ok_or_else(|| fail(line, format!("unknown label `{}`", &record[1])))?);
        for field in record.iter().skip(2) {
            data.push(
                field
                    .parse::<f64>()
                    .map_err(|_| fail(line, format!("`{field}` is not a number")))?,
            );
        }
    }
    let values = Matrix::from_vec(user_ids.len(), column_names.len(), data);
    let features = FeatureMatrix::new(values, column_names)?;
    let mut seen = std::collections::BTreeSet::new();
    if let Some(dup) = user_ids.iter().find(|id| !seen.insert(id.as_str())) {
        return Err(spamtopic_core::Error::DuplicateUser(dup.clone()).into());
    }
    Ok(LabeledFeatures {
        user_ids,
        labels,
        features,
    })
}
