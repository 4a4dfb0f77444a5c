//! Global importance and local additive explanations.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ebm::{sigmoid, EbmModel};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportKind {
    Global,
    Local,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            _ => Err(Error::Argument(format!("unknown report format {s:?}, expected json or csv"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceEntry {
    pub term: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalImportanceReport {
    /// Sorted by descending importance.
    pub entries: Vec<ImportanceEntry>,
}

impl GlobalImportanceReport {
    pub fn rank_of(&self, term: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.term == term)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Contribution {
    /// Index into the model's term list.
    pub term_index: usize,
    pub term: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalExplanation {
    pub intercept: f64,
    /// Sorted by descending absolute contribution.
    pub contributions: Vec<Contribution>,
    pub logit: f64,
    pub probability: f64,
    pub predicted_class: u8,
}

impl LocalExplanation {
    /// Intercept plus contributions summed in model term order, the same
    /// order [`EbmModel::predict_logit`] uses.
    pub fn total_logit(&self) -> f64 {
        let mut by_term: Vec<&Contribution> = self.contributions.iter().collect();
        by_term.sort_by_key(|c| c.term_index);
        by_term.iter().fold(self.intercept, |acc, c| acc + c.value)
    }
}

/// Mean absolute contribution of every term over `reference` rows.
pub fn global_importance(model: &EbmModel, reference: &FeatureMatrix) -> Result<GlobalImportanceReport> {
    if reference.n_rows() == 0 {
        return Err(Error::Argument("reference matrix is empty".into()));
    }
    let rows = model.aligned_rows(reference)?;
    let mut sums = vec![0.0; model.terms.len()];
    for row in &rows {
        for (s, c) in sums.iter_mut().zip(model.term_contributions(row)?) {
            *s += c.abs();
        }
    }
    let n = rows.len() as f64;
    let mut entries: Vec<ImportanceEntry> = sums
        .into_iter()
        .enumerate()
        .map(|(t, s)| ImportanceEntry { term: model.term_name(t), value: s / n })
        .collect();
    entries.sort_by(|a, b| b.value.total_cmp(&a.value));
    Ok(GlobalImportanceReport { entries })
}

/// Additive breakdown of one prediction. `row` is in model schema order.
pub fn local_explanation(model: &EbmModel, row: &[f64]) -> Result<LocalExplanation> {
    let values = model.term_contributions(row)?;
    let logit = model.sum_logit(&values);
    let probability = sigmoid(logit);
    let mut contributions: Vec<Contribution> = values
        .into_iter()
        .enumerate()
        .map(|(t, value)| Contribution { term_index: t, term: model.term_name(t), value })
        .collect();
    contributions.sort_by(|a, b| b.value.abs().total_cmp(&a.value.abs()));
    Ok(LocalExplanation {
        intercept: model.intercept,
        contributions,
        logit,
        probability,
        predicted_class: u8::from(probability >= 0.5),
    })
}

/// Bar-chart ready serialization shared by both report kinds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub kind: ReportKind,
    pub entries: Vec<ReportEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intercept: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probability: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub term: String,
    pub value: f64,
    pub color: String,
}

fn color_for(value: f64) -> String {
    if value < 0.0 { "negative" } else { "positive" }.to_string()
}

impl From<&GlobalImportanceReport> for ReportDocument {
    fn from(r: &GlobalImportanceReport) -> Self {
        ReportDocument {
            kind: ReportKind::Global,
            entries: r
                .entries
                .iter()
                .map(|e| ReportEntry { term: e.term.clone(), value: e.value, color: color_for(e.value) })
                .collect(),
            intercept: None,
            probability: None,
        }
    }
}

impl From<&LocalExplanation> for ReportDocument {
    fn from(r: &LocalExplanation) -> Self {
        ReportDocument {
            kind: ReportKind::Local,
            entries: r
                .contributions
                .iter()
                .map(|c| ReportEntry { term: c.term.clone(), value: c.value, color: color_for(c.value) })
                .collect(),
            intercept: Some(r.intercept),
            probability: Some(r.probability),
        }
    }
}

pub fn export_report(report: &ReportDocument, path: impl AsRef<Path>, format: ReportFormat) -> Result<()> {
    match format {
        ReportFormat::Json => crate::json::write_file(path, report),
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_path(path)?;
            w.write_record(["term", "contribution"])?;
            for e in &report.entries {
                w.write_record([e.term.clone(), format!("{:.16e}", e.value)])?;
            }
            w.flush()?;
            Ok(())
        }
    }
}

pub fn load_report(path: impl AsRef<Path>) -> Result<ReportDocument> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}
