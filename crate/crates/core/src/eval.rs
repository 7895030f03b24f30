//! Accuracy, per-class precision/recall/F1 and confusion-matrix exports.
//!
//! Confusion matrices have gold labels as rows and predicted labels as
//! columns. Off-diagonal entries of a column are that label's false
//! positives; off-diagonal entries of a row are its false negatives.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    /// `counts[gold][predicted]`.
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.labels.len()).map(|i| self.counts[i][i]).sum()
    }

    /// Each non-empty row divided by its sum; empty rows stay zero.
    pub fn row_normalized(&self) -> Vec<Vec<f64>> {
        self.counts
            .iter()
            .map(|row| {
                let s: u64 = row.iter().sum();
                row.iter()
                    .map(|&c| if s == 0 { 0.0 } else { c as f64 / s as f64 })
                    .collect()
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    /// No predictions of this class: precision reported as 0.
    pub no_predictions: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
    /// Mean F1 over classes with non-zero support.
    pub macro_f1: f64,
    pub confusion: ConfusionMatrix,
}

impl MetricsReport {
    pub fn class(&self, label: &str) -> Option<&ClassMetrics> {
        self.per_class.iter().find(|c| c.label == label)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// `2tp / (2tp + fp + fn)`, or 0 when the denominator is 0.
pub fn f1(tp: u64, fp: u64, fn_: u64) -> f64 {
    f1_checked(tp, fp, fn_).0
}

/// F1 with a flag set when the denominator is 0.
pub fn f1_checked(tp: u64, fp: u64, fn_: u64) -> (f64, bool) {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        (0.0, true)
    } else {
        ((2 * tp) as f64 / denom as f64, false)
    }
}

pub fn evaluate<S: AsRef<str>>(golds: &[S], preds: &[S], labels: &[S]) -> Result<MetricsReport> {
    if golds.len() != preds.len() {
        return Err(Error::InvalidArgument(format!(
            "{} gold labels but {} predictions",
            golds.len(),
            preds.len()
        )));
    }
    if golds.is_empty() {
        return Err(Error::Empty("label list"));
    }
    let labels: Vec<String> = labels.iter().map(|l| l.as_ref().to_string()).collect();
    let index = |l: &str| {
        labels
            .iter()
            .position(|x| x == l)
            .ok_or_else(|| Error::InvalidArgument(format!("label {l:?} is not in the label list")))
    };
    let n = labels.len();
    let mut counts = vec![vec![0u64; n]; n];
    for (g, p) in golds.iter().zip(preds) {
        counts[index(g.as_ref())?][index(p.as_ref())?] += 1;
    }
    let confusion = ConfusionMatrix { labels, counts };

    let mut per_class = Vec::with_capacity(n);
    for i in 0..n {
        let tp = confusion.counts[i][i];
        let support: u64 = confusion.counts[i].iter().sum();
        let predicted: u64 = confusion.counts.iter().map(|row| row[i]).sum();
        let precision = if predicted == 0 { 0.0 } else { tp as f64 / predicted as f64 };
        let recall = if support == 0 { 0.0 } else { tp as f64 / support as f64 };
        per_class.push(ClassMetrics {
            label: confusion.labels[i].clone(),
            precision,
            recall,
            f1: f1(tp, predicted - tp, support - tp),
            support,
            no_predictions: predicted == 0,
        });
    }
    let supported: Vec<f64> = per_class.iter().filter(|c| c.support > 0).map(|c| c.f1).collect();
    let macro_f1 = supported.iter().sum::<f64>() / supported.len() as f64;
    Ok(MetricsReport {
        accuracy: confusion.trace() as f64 / confusion.total() as f64,
        per_class,
        macro_f1,
        confusion,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalize {
    None,
    Row,
}

fn fixed(v: f64) -> String {
    format!("{v:.6}")
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Resource {
            path: path.to_path_buf(),
            message: format!("{other:?}"),
        },
    }
}

/// Writes the matrix as CSV: header `gold\predicted,<labels>`, one row per
/// gold label.
pub fn heatmap_export(cm: &ConfusionMatrix, path: &Path, normalize: Normalize) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut header = vec!["gold\\predicted".to_string()];
    header.extend(cm.labels.iter().cloned());
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    let normalized = cm.row_normalized();
    for (i, label) in cm.labels.iter().enumerate() {
        let mut row = vec![label.clone()];
        match normalize {
            Normalize::None => row.extend(cm.counts[i].iter().map(|c| c.to_string())),
            Normalize::Row => row.extend(normalized[i].iter().map(|v| fixed(*v))),
        }
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `accuracy.csv` (one row per report, sorted by name) and
/// `per_class_f1.csv` (one column per label appearing in any report) into
/// `dir`.
pub fn compare_architectures(reports: &[(String, MetricsReport)], dir: &Path) -> Result<()> {
    if reports.is_empty() {
        return Err(Error::Empty("report list"));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut sorted: Vec<&(String, MetricsReport)> = reports.iter().collect();
    sorted.sort_by(|a, b| a.0.cmp(&b.0));

    let path = dir.join("accuracy.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| csv_error(&path, e))?;
    w.write_record(["architecture", "accuracy", "macro_f1"])
        .map_err(|e| csv_error(&path, e))?;
    for (name, r) in &sorted {
        w.write_record([name.clone(), fixed(r.accuracy), fixed(r.macro_f1)])
            .map_err(|e| csv_error(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let mut columns: Vec<String> = Vec::new();
    for (_, r) in &sorted {
        for c in &r.per_class {
            if !columns.contains(&c.label) {
                columns.push(c.label.clone());
            }
        }
    }
    let path = dir.join("per_class_f1.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| csv_error(&path, e))?;
    let mut header = vec!["architecture".to_string()];
    header.extend(columns.iter().cloned());
    w.write_record(&header).map_err(|e| csv_error(&path, e))?;
    for (name, r) in &sorted {
        let mut row = vec![name.clone()];
        row.extend(
            columns
                .iter()
                .map(|l| r.class(l).map(|c| fixed(c.f1)).unwrap_or_default()),
        );
        w.write_record(&row).map_err(|e| csv_error(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))
}
