//! Classification metrics and the evaluation protocols: repeated random
//! train/test splits and leave-one-trap-out.

use std::path::Path;

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ebm::{train, TrainConfig};
use crate::error::{Error, Result};
use crate::features::{is_lag_column, Case, FeatureMatrix};
use crate::rng;

/// Probability at or above which a prediction counts as presence.
pub const CUTOFF: f64 = 0.5;

/// Attempts per split before giving up on drawing both classes on each side.
const MAX_RESAMPLES: usize = 1000;

fn both_classes(labels: &[u8]) -> bool {
    labels.contains(&0) && labels.contains(&1)
}

/// Area under the ROC curve as the Mann-Whitney statistic with midranks, so
/// tied scores count one half.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Argument("scores and labels differ in length".into()));
    }
    if !both_classes(labels) {
        return Err(Error::DegenerateLabels("auc needs both classes".into()));
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        // ranks are 1-based; the tie group i..=j shares their mean
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            if labels[k] == 1 {
                rank_sum_pos += midrank;
            }
        }
        i = j + 1;
    }
    let n_pos = labels.iter().filter(|&&y| y == 1).count() as f64;
    let n_neg = labels.len() as f64 - n_pos;
    Ok((rank_sum_pos - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg))
}

/// `[[tn, fp], [fn, tp]]` indexed by `[label][prediction]`.
pub fn confusion_matrix(pred: &[u8], labels: &[u8]) -> Result<[[u64; 2]; 2]> {
    if pred.len() != labels.len() {
        return Err(Error::Argument("predictions and labels differ in length".into()));
    }
    if pred.is_empty() {
        return Err(Error::Argument("no predictions".into()));
    }
    let mut m = [[0u64; 2]; 2];
    for (&p, &y) in pred.iter().zip(labels) {
        if p > 1 || y > 1 {
            return Err(Error::Argument("classes must be 0 or 1".into()));
        }
        m[y as usize][p as usize] += 1;
    }
    Ok(m)
}

pub fn accuracy(pred: &[u8], labels: &[u8]) -> Result<f64> {
    let m = confusion_matrix(pred, labels)?;
    Ok((m[0][0] + m[1][1]) as f64 / pred.len() as f64)
}

fn f1(tp: u64, fp: u64, fn_: u64) -> f64 {
    if tp == 0 {
        return 0.0;
    }
    // Harmonic mean of precision and recall, written over counts.
    (2 * tp) as f64 / (2 * tp + fp + fn_) as f64
}

/// F1 of the absence (0) and presence (1) classes.
pub fn f1_per_class(pred: &[u8], labels: &[u8]) -> Result<(f64, f64)> {
    let m = confusion_matrix(pred, labels)?;
    let absence = f1(m[0][0], m[1][0], m[0][1]);
    let presence = f1(m[1][1], m[0][1], m[1][0]);
    Ok((absence, presence))
}

pub fn classify(proba: &[f64]) -> Vec<u8> {
    proba.iter().map(|&p| u8::from(p >= CUTOFF)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitMetrics {
    pub accuracy: f64,
    pub auc: f64,
    pub f1_absence: f64,
    pub f1_presence: f64,
}

impl SplitMetrics {
    pub fn compute(proba: &[f64], labels: &[u8]) -> Result<Self> {
        let pred = classify(proba);
        let (f1_absence, f1_presence) = f1_per_class(&pred, labels)?;
        Ok(SplitMetrics { accuracy: accuracy(&pred, labels)?, auc: auc(proba, labels)?, f1_absence, f1_presence })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Population standard deviation over splits.
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        MeanStd { mean, std: var.sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub case: Case,
    pub n_splits: usize,
    pub train_frac: f64,
    pub accuracy: MeanStd,
    pub auc: MeanStd,
    pub f1_absence: MeanStd,
    pub f1_presence: MeanStd,
    /// Splits redrawn because one side lacked a class.
    pub resamples: usize,
}

impl MetricsSummary {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::json::write_file(path, self)
    }
}

/// Case A when the matrix carries catch-lag columns.
pub fn infer_case(matrix: &FeatureMatrix) -> Case {
    if matrix.columns.iter().any(|c| is_lag_column(c)) {
        Case::A
    } else {
        Case::B
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitResult {
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
    /// Predicted presence probability per test row.
    pub proba: Vec<f64>,
    pub metrics: SplitMetrics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitEvaluation {
    pub summary: MetricsSummary,
    pub splits: Vec<SplitResult>,
}

impl SplitEvaluation {
    /// Test-set predictions of every split, in split order.
    pub fn predictions(&self, matrix: &FeatureMatrix) -> Vec<PredictionRecord> {
        self.splits
            .iter()
            .flat_map(|s| {
                s.test_rows.iter().zip(&s.proba).map(|(&r, &p)| PredictionRecord {
                    raw_catches: matrix.meta[r].raw_catches,
                    label: matrix.labels[r],
                    pred_class: u8::from(p >= CUTOFF),
                })
            })
            .collect()
    }
}

/// Uniform row-wise split; redrawn until both sides hold both classes.
/// Depends only on `(seed, split, labels)`.
pub fn random_split(labels: &[u8], train_frac: f64, seed: u64, split: usize) -> Result<(Vec<usize>, Vec<usize>, usize)> {
    let n = labels.len();
    let n_train = ((n as f64) * train_frac).round() as usize;
    if n_train < 2 || n - n_train < 2 {
        return Err(Error::Validation(format!("{n} rows are too few for a {train_frac} split")));
    }
    let mut rng = rng::stream_rng(seed, rng::STREAM_SPLIT, split as u64);
    let mut order: Vec<usize> = (0..n).collect();
    for attempt in 0..MAX_RESAMPLES {
        order.shuffle(&mut rng);
        let mut train: Vec<usize> = order[..n_train].to_vec();
        let mut test: Vec<usize> = order[n_train..].to_vec();
        let side_ok = |rows: &[usize]| rows.iter().any(|&r| labels[r] == 0) && rows.iter().any(|&r| labels[r] == 1);
        if side_ok(&train) && side_ok(&test) {
            train.sort_unstable();
            test.sort_unstable();
            return Ok((train, test, attempt));
        }
    }
    Err(Error::Validation("could not draw a split with both classes on each side".into()))
}

pub fn evaluate_split(matrix: &FeatureMatrix, config: &TrainConfig, train_rows: &[usize], test_rows: &[usize]) -> Result<SplitResult> {
    let model = train(&matrix.subset(train_rows), config)?;
    let test = matrix.subset(test_rows);
    let proba = model.predict_proba_matrix(&test)?;
    let metrics = SplitMetrics::compute(&proba, &test.labels)?;
    Ok(SplitResult { train_rows: train_rows.to_vec(), test_rows: test_rows.to_vec(), proba, metrics })
}

pub fn repeated_random_split_eval(
    matrix: &FeatureMatrix,
    config: &TrainConfig,
    n_splits: usize,
    train_frac: f64,
    seed: u64,
) -> Result<SplitEvaluation> {
    if n_splits == 0 {
        return Err(Error::Argument("n_splits must be >= 1".into()));
    }
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(Error::Argument("train_frac must be in (0, 1)".into()));
    }
    matrix.validate()?;
    let drawn: Vec<(Vec<usize>, Vec<usize>, usize)> =
        (0..n_splits).map(|s| random_split(&matrix.labels, train_frac, seed, s)).collect::<Result<_>>()?;
    let splits: Vec<SplitResult> = drawn
        .par_iter()
        .map(|(train_rows, test_rows, _)| evaluate_split(matrix, config, train_rows, test_rows))
        .collect::<Result<_>>()?;
    let column = |f: fn(&SplitMetrics) -> f64| MeanStd::of(&splits.iter().map(|s| f(&s.metrics)).collect::<Vec<_>>());
    let summary = MetricsSummary {
        case: infer_case(matrix),
        n_splits,
        train_frac,
        accuracy: column(|m| m.accuracy),
        auc: column(|m| m.auc),
        f1_absence: column(|m| m.f1_absence),
        f1_presence: column(|m| m.f1_presence),
        resamples: drawn.iter().map(|d| d.2).sum(),
    };
    Ok(SplitEvaluation { summary, splits })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrapSeriesEntry {
    pub date: NaiveDate,
    pub catches: u32,
    pub pred_class: u8,
    pub pred_proba: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrapSeriesResult {
    pub trap_id: String,
    /// One entry per held-out visit, by date.
    pub entries: Vec<TrapSeriesEntry>,
    pub labels: Vec<u8>,
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
}

impl TrapSeriesResult {
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["date", "catches", "pred_class", "pred_proba"])?;
        for e in &self.entries {
            w.write_record([
                e.date.format("%Y-%m-%d").to_string(),
                e.catches.to_string(),
                e.pred_class.to_string(),
                format!("{:.16e}", e.pred_proba),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Share of held-out visits at or above threshold predicted as presence.
    pub fn presence_recall(&self) -> Option<f64> {
        let hits: Vec<u8> =
            self.entries.iter().zip(&self.labels).filter(|(_, &y)| y == 1).map(|(e, _)| e.pred_class).collect();
        if hits.is_empty() {
            None
        } else {
            Some(hits.iter().map(|&c| c as f64).sum::<f64>() / hits.len() as f64)
        }
    }

    pub fn predictions(&self) -> Vec<PredictionRecord> {
        self.entries
            .iter()
            .zip(&self.labels)
            .map(|(e, &label)| PredictionRecord { raw_catches: e.catches, label, pred_class: e.pred_class })
            .collect()
    }
}

/// Trains on every trap except `trap_id` and predicts that trap's series.
pub fn leave_one_trap_out_eval(matrix: &FeatureMatrix, config: &TrainConfig, trap_id: &str) -> Result<TrapSeriesResult> {
    matrix.validate()?;
    let (test_rows, train_rows): (Vec<usize>, Vec<usize>) =
        (0..matrix.n_rows()).partition(|&r| matrix.meta[r].trap_id == trap_id);
    if test_rows.is_empty() {
        return Err(Error::Argument(format!("unknown trap id {trap_id:?}")));
    }
    let train_labels: Vec<u8> = train_rows.iter().map(|&r| matrix.labels[r]).collect();
    if !both_classes(&train_labels) {
        return Err(Error::DegenerateLabels("remaining traps hold a single class".into()));
    }
    let model = train(&matrix.subset(&train_rows), config)?;
    let mut test_rows = test_rows;
    test_rows.sort_by_key(|&r| matrix.meta[r].date);
    let test = matrix.subset(&test_rows);
    let proba = model.predict_proba_matrix(&test)?;
    let entries = test
        .meta
        .iter()
        .zip(&proba)
        .map(|(m, &p)| TrapSeriesEntry {
            date: m.date,
            catches: m.raw_catches,
            pred_class: u8::from(p >= CUTOFF),
            pred_proba: p,
        })
        .collect();
    Ok(TrapSeriesResult { trap_id: trap_id.to_string(), entries, labels: test.labels, train_rows, test_rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PredictionRecord {
    pub raw_catches: u32,
    pub label: u8,
    pub pred_class: u8,
}

impl PredictionRecord {
    pub fn is_error(&self) -> bool {
        self.label != self.pred_class
    }
}

/// Aligned histograms of raw catch counts; bin `k` covers
/// `[k * bin_width, (k + 1) * bin_width)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatchHistograms {
    pub bin_width: u32,
    pub errors: Vec<u64>,
    pub all: Vec<u64>,
}

pub fn error_catch_histogram(results: &[PredictionRecord], bin_width: u32) -> Result<CatchHistograms> {
    if bin_width == 0 {
        return Err(Error::Argument("bin width must be positive".into()));
    }
    if results.is_empty() {
        return Err(Error::Argument("no predictions to histogram".into()));
    }
    let max = results.iter().map(|r| r.raw_catches).max().unwrap_or(0);
    let n_bins = (max / bin_width) as usize + 1;
    let mut h = CatchHistograms { bin_width, errors: vec![0; n_bins], all: vec![0; n_bins] };
    for r in results {
        let b = (r.raw_catches / bin_width) as usize;
        h.all[b] += 1;
        if r.is_error() {
            h.errors[b] += 1;
        }
    }
    Ok(h)
}

/// Fraction of misclassified records whose raw catches lie within
/// `radius` of `threshold`, or `None` without errors.
pub fn errors_near_threshold(results: &[PredictionRecord], threshold: u32, radius: u32) -> Option<f64> {
    let errors: Vec<&PredictionRecord> = results.iter().filter(|r| r.is_error()).collect();
    if errors.is_empty() {
        return None;
    }
    let near = errors.iter().filter(|r| r.raw_catches.abs_diff(threshold) <= radius).count();
    Some(near as f64 / errors.len() as f64)
}
