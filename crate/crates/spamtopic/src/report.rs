//! Evaluation reports as JSON and as a plain-text table.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use spamtopic_core::eval::{EvalReport, FeatureProtocol, Seeds};

use crate::settings::protocol_name;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub folds: usize,
    pub protocol: FeatureProtocol,
    pub seeds: Seeds,
    /// One entry per feature set and classifier, in request order.
    pub results: Vec<EvalReport>,
}

/// `goss+loss` as `GOSS+LOSS`, `raw` as `Raw`.
pub fn display_feature_set(name: &str) -> String {
    let parts: Vec<String> = name
        .split('+')
        .map(|p| match p {
            "raw" => "Raw".to_string(),
            other => other.to_uppercase(),
        })
        .collect();
    parts.join("+")
}

/// Aligned table with one row per feature set and method: pooled
/// precision, recall, F1 and accuracy, then per-fold mean and sd.
pub fn render_text(report: &Report) -> String {
    let mut rows: Vec<[String; 6]> = vec![[
        "Feature".into(),
        "Method".into(),
        "Precision".into(),
        "Recall".into(),
        "F1-score".into(),
        "Accuracy".into(),
    ]];
    for r in &report.results {
        let m = &r.pooled_metrics;
        rows.push([
            display_feature_set(&r.feature_set),
            r.classifier.display_name().into(),
            format!("{:.3}", m.precision),
            format!("{:.3}", m.recall),
            format!("{:.3}", m.f1),
            format!("{:.3}", m.accuracy),
        ]);
    }
    let mut out = String::new();
    writeln!(
        out,
        "{}-fold cross-validation, protocol {}, model seed {}, eval seed {}",
        report.folds,
        protocol_name(report.protocol),
        report.seeds.model,
        report.seeds.eval
    )
    .unwrap();
    out.push_str("Pooled over folds:\n");
    write_aligned(&mut out, &rows);

    let mut spread: Vec<[String; 6]> = vec![[
        "Feature".into(),
        "Method".into(),
        "Precision".into(),
        "Recall".into(),
        "F1-score".into(),
        "Accuracy".into(),
    ]];
    for r in &report.results {
        let (m, s) = (&r.fold_mean, &r.fold_stddev);
        spread.push([
            display_feature_set(&r.feature_set),
            r.classifier.display_name().into(),
            format!("{:.3}±{:.3}", m.precision, s.precision),
            format!("{:.3}±{:.3}", m.recall, s.recall),
            format!("{:.3}±{:.3}", m.f1, s.f1),
            format!("{:.3}±{:.3}", m.accuracy, s.accuracy),
        ]);
    }
    out.push_str("\nPer-fold mean ± sd:\n");
    write_aligned(&mut out, &spread);
    out
}

fn write_aligned(out: &mut String, rows: &[[String; 6]]) {
    let mut widths = [0usize; 6];
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    for row in rows {
        let mut line = String::new();
        for (i, (cell, w)) in row.iter().zip(widths).enumerate() {
            let pad = w - cell.chars().count();
            if i < 2 {
                line.push_str(cell);
                line.push_str(&" ".repeat(pad));
            } else {
                line.push_str(&" ".repeat(pad));
                line.push_str(cell);
            }
            if i < 5 {
                line.push_str("  ");
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
}
