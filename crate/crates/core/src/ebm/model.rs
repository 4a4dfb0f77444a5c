//! The fitted additive model, prediction, and JSON persistence.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::binning::BinDefinition;
use super::boost::sigmoid;
use super::config::TrainConfig;
use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, ScalerParams};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MainTerm {
    pub feature: usize,
    /// One score per main bin (index 0 = missing), in logits.
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairTerm {
    pub features: [usize; 2],
    /// `scores[a][b]` for interaction bins `a` of the first and `b` of the
    /// second feature.
    pub scores: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Term {
    Main(MainTerm),
    Pair(PairTerm),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EbmModel {
    pub format_version: u32,
    pub link: String,
    pub intercept: f64,
    pub feature_schema: Vec<String>,
    pub scaler: ScalerParams,
    pub bins: Vec<BinDefinition>,
    pub terms: Vec<Term>,
    pub config: TrainConfig,
}

/// A row after scaling and binning.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinnedRow {
    pub main: Vec<u32>,
    pub pair: Vec<u32>,
}

impl EbmModel {
    pub fn n_features(&self) -> usize {
        self.feature_schema.len()
    }

    pub fn term_name(&self, t: usize) -> String {
        match &self.terms[t] {
            Term::Main(m) => self.feature_schema[m.feature].clone(),
            Term::Pair(p) => {
                format!("{} - {}", self.feature_schema[p.features[0]], self.feature_schema[p.features[1]])
            }
        }
    }

    pub fn term_names(&self) -> Vec<String> {
        (0..self.terms.len()).map(|t| self.term_name(t)).collect()
    }

    pub fn bin_row(&self, row: &[f64]) -> Result<BinnedRow> {
        if row.len() != self.n_features() {
            return Err(Error::Schema(format!(
                "row has {} values, model expects {}",
                row.len(),
                self.n_features()
            )));
        }
        let scaled = self.scaler.apply_row(row);
        Ok(BinnedRow {
            main: scaled.iter().zip(&self.bins).map(|(&x, b)| b.bin(x)).collect(),
            pair: scaled.iter().zip(&self.bins).map(|(&x, b)| b.interaction_bin(x)).collect(),
        })
    }

    /// Per-term contributions in model term order.
    pub fn binned_contributions(&self, binned: &BinnedRow) -> Vec<f64> {
        self.terms
            .iter()
            .map(|term| match term {
                Term::Main(m) => m.scores[binned.main[m.feature] as usize],
                Term::Pair(p) => {
                    p.scores[binned.pair[p.features[0]] as usize][binned.pair[p.features[1]] as usize]
                }
            })
            .collect()
    }

    pub fn term_contributions(&self, row: &[f64]) -> Result<Vec<f64>> {
        Ok(self.binned_contributions(&self.bin_row(row)?))
    }

    /// Intercept plus contributions, summed left to right in term order.
    pub fn sum_logit(&self, contributions: &[f64]) -> f64 {
        contributions.iter().fold(self.intercept, |acc, c| acc + c)
    }

    pub fn predict_logit(&self, row: &[f64]) -> Result<f64> {
        Ok(self.sum_logit(&self.term_contributions(row)?))
    }

    pub fn predict_proba(&self, row: &[f64]) -> Result<f64> {
        Ok(sigmoid(self.predict_logit(row)?))
    }

    pub fn predict_class(&self, row: &[f64], cutoff: f64) -> Result<u8> {
        Ok(u8::from(self.predict_proba(row)? >= cutoff))
    }

    /// Column indices of `matrix` matching the model schema, by name.
    pub fn schema_indices(&self, matrix: &FeatureMatrix) -> Result<Vec<usize>> {
        self.feature_schema
            .iter()
            .map(|name| {
                matrix
                    .column_index(name)
                    .ok_or_else(|| Error::Schema(format!("matrix lacks model feature {name:?}")))
            })
            .collect()
    }

    /// Rows of `matrix` rearranged into model schema order.
    pub fn aligned_rows(&self, matrix: &FeatureMatrix) -> Result<Vec<Vec<f64>>> {
        let idx = self.schema_indices(matrix)?;
        Ok(matrix.rows.iter().map(|r| idx.iter().map(|&c| r[c]).collect()).collect())
    }

    pub fn predict_proba_matrix(&self, matrix: &FeatureMatrix) -> Result<Vec<f64>> {
        self.aligned_rows(matrix)?.iter().map(|r| self.predict_proba(r)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::UnsupportedVersion { found: self.format_version, expected: FORMAT_VERSION });
        }
        if self.link != "logit" {
            return Err(Error::Validation(format!("unsupported link {:?}", self.link)));
        }
        let d = self.n_features();
        if self.bins.len() != d || self.scaler.mean.len() != d || self.scaler.std.len() != d {
            return Err(Error::Validation("bins/scaler do not match the feature schema".into()));
        }
        if !self.intercept.is_finite() {
            return Err(Error::Validation("non-finite intercept".into()));
        }
        if self.scaler.mean.iter().chain(&self.scaler.std).any(|v| !v.is_finite())
            || self.scaler.std.iter().any(|&s| s < 0.0)
        {
            return Err(Error::Validation("invalid scaler parameters".into()));
        }
        for b in &self.bins {
            b.validate()?;
        }
        for term in &self.terms {
            match term {
                Term::Main(m) => {
                    let def = self
                        .bins
                        .get(m.feature)
                        .ok_or_else(|| Error::Validation(format!("term references feature {}", m.feature)))?;
                    if m.scores.len() != def.n_bins() {
                        return Err(Error::Validation(format!("term for {} has wrong score count", def.feature)));
                    }
                    if m.scores.iter().any(|s| !s.is_finite()) {
                        return Err(Error::Validation(format!("non-finite score in term {}", def.feature)));
                    }
                }
                Term::Pair(p) => {
                    let [i, j] = p.features;
                    if i == j || i >= d || j >= d {
                        return Err(Error::Validation(format!("invalid pair ({i}, {j})")));
                    }
                    let (ni, nj) = (self.bins[i].n_interaction_bins(), self.bins[j].n_interaction_bins());
                    if p.scores.len() != ni || p.scores.iter().any(|r| r.len() != nj) {
                        return Err(Error::Validation(format!("pair ({i}, {j}) has wrong grid shape")));
                    }
                    if p.scores.iter().flatten().any(|s| !s.is_finite()) {
                        return Err(Error::Validation(format!("non-finite score in pair ({i}, {j})")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(crate::json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<EbmModel> {
        let value: serde_json::Value = serde_json::from_str(s)?;
        let version = value
            .get("format_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| Error::Validation("missing format_version".into()))?;
        if version != FORMAT_VERSION as u64 {
            return Err(Error::UnsupportedVersion { found: version as u32, expected: FORMAT_VERSION });
        }
        let model: EbmModel = serde_json::from_str(s)?;
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<EbmModel> {
        EbmModel::from_json(&std::fs::read_to_string(path)?)
    }
}

pub fn save_model(model: &EbmModel, path: impl AsRef<Path>) -> Result<()> {
    model.save(path)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<EbmModel> {
    EbmModel::load(path)
}
