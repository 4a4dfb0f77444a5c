//! Feature engineering: raw instances to a standardized feature matrix.
//!
//! Column layout (Case A; Case B drops the `catches_t*` columns):
//!
//! ```text
//! lat, lon, sin_doy, cos_doy, catches_t1..catches_tN,
//! for var in t2m, tsoil, rh, dp, ws and stat in the selected stats:
//!     {var}_{stat}, {var}_{stat}_acc
//! ap_sum, ap_sum_acc,
//! gdd_day, gdd_acc,
//! for vi in ndvi, ndwi, ndmi, gi, gcvi: {vi}, {vi}_int
//! ```
//!
//! `_acc` columns are sums of the daily value over the window; `{vi}` is the
//! latest in-window observation and `{vi}_int` the trapezoidal integral of the
//! in-window series. Missing values are NaN ([`MISSING`]).

use std::collections::BTreeSet;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::dataset::{RawInstance, VegIndex, WeatherVar};
use crate::error::{Error, Result};

/// Missing-value sentinel. Binned into the dedicated missing bin.
pub const MISSING: f64 = f64::NAN;

pub fn is_missing(v: f64) -> bool {
    v.is_nan()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Case {
    /// Weather, vegetation and past trap catches.
    A,
    /// Weather and vegetation only.
    B,
}

impl FromStr for Case {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(Case::A),
            "B" | "b" => Ok(Case::B),
            _ => Err(Error::Argument(format!("unknown case {s:?}, expected A or B"))),
        }
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Case::A => "A",
            Case::B => "B",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stat {
    Min,
    Max,
    Mean,
}

impl Stat {
    pub fn name(self) -> &'static str {
        match self {
            Stat::Min => "min",
            Stat::Max => "max",
            Stat::Mean => "mean",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub window_days: u32,
    pub n_lags: usize,
    pub action_threshold: u32,
    /// Label 1 only when catches strictly exceed the threshold.
    pub strict_threshold: bool,
    pub t_base: f64,
    pub doy_period: f64,
    pub case: Case,
    pub stats_per_variable: BTreeSet<Stat>,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            window_days: 7,
            n_lags: 3,
            action_threshold: 10,
            strict_threshold: false,
            t_base: 15.6,
            doy_period: 365.0,
            case: Case::A,
            stats_per_variable: [Stat::Min, Stat::Max, Stat::Mean].into_iter().collect(),
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_days < 1 {
            return Err(Error::Argument("window_days must be >= 1".into()));
        }
        if !self.t_base.is_finite() {
            return Err(Error::Argument("t_base must be finite".into()));
        }
        if !(self.doy_period > 0.0) {
            return Err(Error::Argument("doy_period must be > 0".into()));
        }
        Ok(())
    }

    pub fn column_names(&self) -> Vec<String> {
        let mut cols: Vec<String> =
            ["lat", "lon", "sin_doy", "cos_doy"].iter().map(|s| s.to_string()).collect();
        if self.case == Case::A {
            cols.extend((1..=self.n_lags).map(lag_column));
        }
        for var in WeatherVar::ALL {
            for stat in &self.stats_per_variable {
                cols.push(format!("{}_{}", var.name(), stat.name()));
                cols.push(format!("{}_{}_acc", var.name(), stat.name()));
            }
        }
        cols.push("ap_sum".into());
        cols.push("ap_sum_acc".into());
        cols.push("gdd_day".into());
        cols.push("gdd_acc".into());
        for index in VegIndex::ALL {
            cols.push(index.name().to_string());
            cols.push(format!("{}_int", index.name()));
        }
        cols
    }
}

pub fn lag_column(k: usize) -> String {
    format!("catches_t{k}")
}

pub fn is_lag_column(name: &str) -> bool {
    name.strip_prefix("catches_t").is_some_and(|rest| rest.parse::<usize>().is_ok())
}

/// Growing degree days: `max((t_max + t_min) / 2 - t_base, 0)`.
pub fn growing_degree_days(t_max: f64, t_min: f64, t_base: f64) -> Result<f64> {
    if !(t_max.is_finite() && t_min.is_finite() && t_base.is_finite()) {
        return Err(Error::Argument("temperatures must be finite".into()));
    }
    if t_max < t_min {
        return Err(Error::Argument(format!("t_max {t_max} < t_min {t_min}")));
    }
    Ok(((t_max + t_min) / 2.0 - t_base).max(0.0))
}

/// `(sin(2π·doy/period), cos(2π·doy/period))`.
pub fn encode_doy_cyclic(doy: f64, period: f64) -> Result<(f64, f64)> {
    if !(doy > 0.0) || !(period > 0.0) || !doy.is_finite() || !period.is_finite() {
        return Err(Error::Argument(format!(
            "day of year ({doy}) and period ({period}) must be positive"
        )));
    }
    let angle = std::f64::consts::TAU * doy / period;
    Ok(angle.sin_cos())
}

pub fn accumulate_weather(window: &[f64], window_days: usize) -> Result<f64> {
    if window.len() != window_days {
        return Err(Error::Argument(format!(
            "expected {window_days} daily values, got {}",
            window.len()
        )));
    }
    if window.iter().any(|v| !v.is_finite()) {
        return Err(Error::Argument("daily values must be finite".into()));
    }
    Ok(window.iter().sum())
}

/// Trapezoidal integral of `(day_offset, value)` samples inside a window of
/// `window_days`. One sample integrates as `value × window_days`; no samples
/// give [`MISSING`].
pub fn integrate_vi(samples: &[(f64, f64)], window_days: f64) -> Result<f64> {
    for (i, &(t, v)) in samples.iter().enumerate() {
        if !(0.0..=window_days).contains(&t) {
            return Err(Error::Argument(format!("offset {t} outside [0, {window_days}]")));
        }
        if !v.is_finite() {
            return Err(Error::Argument("index values must be finite".into()));
        }
        if i > 0 && samples[i - 1].0 >= t {
            return Err(Error::Argument("day offsets must be strictly increasing".into()));
        }
    }
    Ok(match samples {
        [] => MISSING,
        [(_, v)] => v * window_days,
        _ => samples
            .windows(2)
            .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
            .sum(),
    })
}

/// Catch counts of the `n_lags` most recent visits, most recent first.
pub fn lag_catches(history: &[(NaiveDate, u32)], n_lags: usize) -> Result<Vec<u32>> {
    if history.len() < n_lags {
        return Err(Error::Argument(format!(
            "need {n_lags} prior visits, history has {}",
            history.len()
        )));
    }
    let mut sorted = history.to_vec();
    sorted.sort_by_key(|&(d, _)| d);
    Ok(sorted.iter().rev().take(n_lags).map(|&(_, c)| c).collect())
}

/// 1 (presence) when `catches >= action_threshold`, else 0.
pub fn binarize_label(catches: u32, action_threshold: u32) -> u8 {
    u8::from(catches >= action_threshold)
}

pub fn binarize_label_strict(catches: u32, action_threshold: u32) -> u8 {
    u8::from(catches > action_threshold)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl ScalerParams {
    /// Parameters that leave every column unchanged.
    pub fn identity(n_cols: usize) -> Self {
        ScalerParams { mean: vec![0.0; n_cols], std: vec![1.0; n_cols] }
    }

    pub fn n_cols(&self) -> usize {
        self.mean.len()
    }

    /// Turns scaling off for one column.
    pub fn disable_column(&mut self, col: usize) {
        self.mean[col] = 0.0;
        self.std[col] = 1.0;
    }

    fn divisor(&self, col: usize) -> f64 {
        if self.std[col] > 0.0 {
            self.std[col]
        } else {
            1.0
        }
    }

    pub fn scale_value(&self, col: usize, v: f64) -> f64 {
        if is_missing(v) {
            v
        } else {
            (v - self.mean[col]) / self.divisor(col)
        }
    }

    pub fn unscale_value(&self, col: usize, v: f64) -> f64 {
        if is_missing(v) {
            v
        } else {
            v * self.divisor(col) + self.mean[col]
        }
    }

    pub fn apply_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter().enumerate().map(|(c, &v)| self.scale_value(c, v)).collect()
    }

    pub fn unscale_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter().enumerate().map(|(c, &v)| self.unscale_value(c, v)).collect()
    }
}

/// Per-column mean and population standard deviation over `rows`, ignoring
/// missing values. Columns with no observed value get mean 0, std 1.
pub fn fit_scaler(rows: &[Vec<f64>]) -> Result<ScalerParams> {
    let Some(first) = rows.first() else {
        return Err(Error::Argument("cannot fit scaler on an empty training subset".into()));
    };
    let d = first.len();
    let mut mean = vec![0.0; d];
    let mut std = vec![1.0; d];
    for c in 0..d {
        let vals: Vec<f64> = rows.iter().map(|r| r[c]).filter(|v| !is_missing(*v)).collect();
        if vals.is_empty() {
            continue;
        }
        let n = vals.len() as f64;
        let m = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
        mean[c] = m;
        std[c] = var.sqrt();
    }
    Ok(ScalerParams { mean, std })
}

pub fn apply_scaler(rows: &[Vec<f64>], params: &ScalerParams) -> Result<Vec<Vec<f64>>> {
    rows.iter()
        .map(|r| {
            if r.len() != params.n_cols() {
                Err(Error::Schema(format!(
                    "row has {} columns, scaler has {}",
                    r.len(),
                    params.n_cols()
                )))
            } else {
                Ok(params.apply_row(r))
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RowMeta {
    pub trap_id: String,
    pub date: NaiveDate,
    pub raw_catches: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
    pub meta: Vec<RowMeta>,
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[col]).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.rows.len();
        if self.labels.len() != n || self.meta.len() != n {
            return Err(Error::Validation("rows, labels and meta lengths differ".into()));
        }
        for (i, r) in self.rows.iter().enumerate() {
            if r.len() != self.columns.len() {
                return Err(Error::Validation(format!("row {i} has {} values", r.len())));
            }
            if r.iter().any(|v| v.is_infinite()) {
                return Err(Error::Validation(format!("row {i} has an infinite value")));
            }
        }
        if self.labels.iter().any(|&y| y > 1) {
            return Err(Error::Validation("labels must be 0 or 1".into()));
        }
        Ok(())
    }

    pub fn subset(&self, indices: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            columns: self.columns.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            meta: indices.iter().map(|&i| self.meta[i].clone()).collect(),
        }
    }

    pub fn select_columns(&self, keep: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            columns: keep.iter().map(|&c| self.columns[c].clone()).collect(),
            rows: self.rows.iter().map(|r| keep.iter().map(|&c| r[c]).collect()).collect(),
            labels: self.labels.clone(),
            meta: self.meta.clone(),
        }
    }

    /// Case B drops the lag columns; Case A requires them.
    pub fn for_case(&self, case: Case) -> Result<FeatureMatrix> {
        let has_lags = self.columns.iter().any(|c| is_lag_column(c));
        match case {
            Case::A if !has_lags => {
                Err(Error::Validation("Case A requested but the matrix has no catch-lag columns".into()))
            }
            Case::A => Ok(self.clone()),
            Case::B => {
                let keep: Vec<usize> =
                    (0..self.n_cols()).filter(|&c| !is_lag_column(&self.columns[c])).collect();
                Ok(self.select_columns(&keep))
            }
        }
    }

    pub fn trap_ids(&self) -> Vec<String> {
        let set: BTreeSet<&str> = self.meta.iter().map(|m| m.trap_id.as_str()).collect();
        set.into_iter().map(String::from).collect()
    }

    pub fn prevalence(&self) -> f64 {
        if self.labels.is_empty() {
            return 0.0;
        }
        self.labels.iter().map(|&y| y as f64).sum::<f64>() / self.labels.len() as f64
    }

    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = self.columns.iter().map(String::as_str).collect();
        header.extend(["__label", "__trap_id", "__date", "__raw_catches"]);
        wtr.write_record(&header)?;
        for ((row, y), m) in self.rows.iter().zip(&self.labels).zip(&self.meta) {
            let mut rec: Vec<String> = row
                .iter()
                .map(|v| if is_missing(*v) { String::new() } else { format!("{v:?}") })
                .collect();
            rec.push(y.to_string());
            rec.push(m.trap_id.clone());
            rec.push(m.date.to_string());
            rec.push(m.raw_catches.to_string());
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv(reader: impl Read) -> Result<FeatureMatrix> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers()?.clone();
        let n = headers.len();
        let tail = ["__label", "__trap_id", "__date", "__raw_catches"];
        if n < tail.len() || headers.iter().skip(n - tail.len()).ne(tail.iter().copied()) {
            return Err(Error::Parse {
                line: 1,
                msg: format!("feature matrix header must end with {tail:?}"),
            });
        }
        let d = n - tail.len();
        let columns: Vec<String> = headers.iter().take(d).map(String::from).collect();
        let mut m = FeatureMatrix { columns, rows: vec![], labels: vec![], meta: vec![] };
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            let perr = |msg: String| Error::Parse { line, msg };
            let mut row = Vec::with_capacity(d);
            for field in rec.iter().take(d) {
                if field.is_empty() {
                    row.push(MISSING);
                } else {
                    row.push(field.parse::<f64>().map_err(|e| perr(format!("{field:?}: {e}")))?);
                }
            }
            let label: u8 = rec[d].parse().map_err(|e| perr(format!("label: {e}")))?;
            let date = NaiveDate::from_str(&rec[d + 2]).map_err(|e| perr(format!("date: {e}")))?;
            let raw_catches = rec[d + 3].parse().map_err(|e| perr(format!("raw catches: {e}")))?;
            m.rows.push(row);
            m.labels.push(label);
            m.meta.push(RowMeta { trap_id: rec[d + 1].to_string(), date, raw_catches });
        }
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
        FeatureMatrix::read_csv(std::fs::File::open(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

fn instance_row(inst: &RawInstance, config: &FeatureConfig) -> Result<Vec<f64>> {
    let w = config.window_days as usize;
    if inst.weather_window.len() != w {
        return Err(Error::Validation(format!(
            "instance ({}, {}) has {} weather days, expected {w}",
            inst.trap_id,
            inst.prediction_date,
            inst.weather_window.len()
        )));
    }
    let today = inst.weather_window.last().expect("window_days >= 1");
    let mut row = vec![inst.lat, inst.lon];
    let (s, c) = encode_doy_cyclic(inst.day_of_year() as f64, config.doy_period)?;
    row.push(s);
    row.push(c);
    if config.case == Case::A {
        let lags = lag_catches(&inst.catch_history, config.n_lags).map_err(|_| {
            Error::Validation(format!(
                "Case A needs {} catch lags; instance ({}, {}) has {}",
                config.n_lags,
                inst.trap_id,
                inst.prediction_date,
                inst.catch_history.len()
            ))
        })?;
        row.extend(lags.iter().map(|&c| c as f64));
    }
    for var in WeatherVar::ALL {
        for stat in &config.stats_per_variable {
            let pick = |r: &crate::dataset::DailyWeatherRecord| {
                let s = r.stat(var);
                match stat {
                    Stat::Min => s.min,
                    Stat::Max => s.max,
                    Stat::Mean => s.mean,
                }
            };
            let daily: Vec<f64> = inst.weather_window.iter().map(pick).collect();
            row.push(pick(today));
            row.push(accumulate_weather(&daily, w)?);
        }
    }
    let ap: Vec<f64> = inst.weather_window.iter().map(|r| r.ap_sum).collect();
    row.push(today.ap_sum);
    row.push(accumulate_weather(&ap, w)?);
    let gdd: Vec<f64> = inst
        .weather_window
        .iter()
        .map(|r| growing_degree_days(r.t2m_max, r.t2m_min, config.t_base))
        .collect::<Result<_>>()?;
    row.push(*gdd.last().expect("non-empty"));
    row.push(accumulate_weather(&gdd, w)?);

    let window_start = inst.prediction_date - chrono::Duration::days(config.window_days as i64);
    for index in VegIndex::ALL {
        let samples: Vec<(f64, f64)> = inst
            .vi_window
            .iter()
            .filter_map(|r| {
                let offset = (r.date - window_start).num_days();
                if offset < 0 || offset > config.window_days as i64 {
                    return None;
                }
                r.value(index).map(|v| (offset as f64, v))
            })
            .collect();
        row.push(samples.last().map_or(MISSING, |&(_, v)| v));
        row.push(integrate_vi(&samples, config.window_days as f64)?);
    }
    Ok(row)
}

/// Builds the labelled feature matrix, sorted by `(trap_id, date)`.
pub fn build_feature_matrix(instances: &[RawInstance], config: &FeatureConfig) -> Result<FeatureMatrix> {
    config.validate()?;
    let mut order: Vec<&RawInstance> = instances.iter().collect();
    order.sort_by(|a, b| (&a.trap_id, a.prediction_date).cmp(&(&b.trap_id, b.prediction_date)));
    let columns = config.column_names();
    let mut m = FeatureMatrix { columns, rows: vec![], labels: vec![], meta: vec![] };
    for inst in order {
        m.rows.push(instance_row(inst, config)?);
        m.labels.push(if config.strict_threshold {
            binarize_label_strict(inst.label_catches, config.action_threshold)
        } else {
            binarize_label(inst.label_catches, config.action_threshold)
        });
        m.meta.push(RowMeta {
            trap_id: inst.trap_id.clone(),
            date: inst.prediction_date,
            raw_catches: inst.label_catches,
        });
    }
    debug_assert!(m.rows.iter().all(|r| r.len() == m.columns.len()));
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn gdd_values() {
        assert!((growing_degree_days(30.0, 20.0, 15.6).unwrap() - 9.4).abs() < 1e-12);
        assert_eq!(growing_degree_days(16.0, 10.0, 15.6).unwrap(), 0.0);
        assert_eq!(growing_degree_days(21.2, 10.0, 15.6).unwrap(), 0.0);
        assert!(growing_degree_days(10.0, 20.0, 15.6).is_err());
    }

    #[test]
    fn doy_cycle_points() {
        let close = |(s, c): (f64, f64), (es, ec): (f64, f64)| {
            assert!((s - es).abs() < 1e-12 && (c - ec).abs() < 1e-12, "{s},{c}");
        };
        close(encode_doy_cyclic(365.0, 365.0).unwrap(), (0.0, 1.0));
        close(encode_doy_cyclic(91.25, 365.0).unwrap(), (1.0, 0.0));
        close(encode_doy_cyclic(182.5, 365.0).unwrap(), (0.0, -1.0));
        assert!(encode_doy_cyclic(0.0, 365.0).is_err());
        assert!(encode_doy_cyclic(10.0, -1.0).is_err());
    }

    #[test]
    fn weather_accumulation() {
        assert_eq!(accumulate_weather(&[1.0; 7], 7).unwrap(), 7.0);
        assert_eq!(accumulate_weather(&[0.0, 0.0, 5.0, 0.0, 0.0, 0.0, 2.0], 7).unwrap(), 7.0);
        assert_eq!(accumulate_weather(&[0.0; 7], 7).unwrap(), 0.0);
        assert!(accumulate_weather(&[1.0; 6], 7).is_err());
    }

    #[test]
    fn vi_integral() {
        assert!((integrate_vi(&[(0.0, 0.5), (7.0, 0.7)], 7.0).unwrap() - 4.2).abs() < 1e-12);
        assert!((integrate_vi(&[(0.0, 0.2), (3.0, 0.4), (7.0, 0.1)], 7.0).unwrap() - 1.9).abs() < 1e-12);
        assert!((integrate_vi(&[(2.0, 0.6)], 7.0).unwrap() - 4.2).abs() < 1e-12);
        assert!(integrate_vi(&[], 7.0).unwrap().is_nan());
        assert!(integrate_vi(&[(3.0, 0.2), (1.0, 0.4)], 7.0).is_err());
        assert!(integrate_vi(&[(3.0, 0.2), (3.0, 0.4)], 7.0).is_err());
    }

    fn d(day: u32) -> NaiveDate {
        NaiveDate::from_yo_opt(2021, day).unwrap()
    }

    #[test]
    fn lags_most_recent_first() {
        let h = [(d(160), 5), (d(164), 0), (d(168), 12)];
        assert_eq!(lag_catches(&h, 3).unwrap(), vec![12, 0, 5]);
        let h5 = [(d(152), 1), (d(156), 2), (d(160), 5), (d(164), 0), (d(168), 12)];
        assert_eq!(lag_catches(&h5, 3).unwrap(), vec![12, 0, 5]);
        assert!(lag_catches(&h[..2], 3).is_err());
    }

    #[test]
    fn label_threshold() {
        assert_eq!(binarize_label(12, 10), 1);
        assert_eq!(binarize_label(3, 10), 0);
        assert_eq!(binarize_label(10, 10), 1);
        assert_eq!(binarize_label_strict(10, 10), 0);
    }

    #[test]
    fn scaler_examples() {
        let rows = vec![vec![0.0, 5.0], vec![2.0, 5.0]];
        let p = fit_scaler(&rows).unwrap();
        assert_eq!(p.mean, vec![1.0, 5.0]);
        assert_eq!(p.std, vec![1.0, 0.0]);
        let s = apply_scaler(&rows, &p).unwrap();
        assert_eq!(s, vec![vec![-1.0, 0.0], vec![1.0, 0.0]]);
        let constant = vec![vec![5.0], vec![5.0], vec![5.0]];
        let pc = fit_scaler(&constant).unwrap();
        assert_eq!(apply_scaler(&constant, &pc).unwrap(), vec![vec![0.0]; 3]);
        assert!(fit_scaler(&[]).is_err());
    }

    #[test]
    fn scaler_passes_missing_through() {
        let rows = vec![vec![1.0], vec![MISSING], vec![3.0]];
        let p = fit_scaler(&rows).unwrap();
        assert_eq!(p.mean, vec![2.0]);
        let s = apply_scaler(&rows, &p).unwrap();
        assert!(s[1][0].is_nan());
    }

    #[test]
    fn case_a_has_three_more_columns() {
        let a = FeatureConfig::default();
        let b = FeatureConfig { case: Case::B, ..FeatureConfig::default() };
        assert_eq!(a.column_names().len(), b.column_names().len() + 3);
        assert_eq!(a.column_names().len(), 51);
    }

    proptest! {
        #[test]
        fn gdd_monotone(tmin in -10.0f64..40.0, spread in 0.0f64..20.0, bump in 0.0f64..5.0, base in 0.0f64..30.0) {
            let tmax = tmin + spread;
            let g = growing_degree_days(tmax, tmin, base).unwrap();
            prop_assert!(g >= 0.0);
            prop_assert!(growing_degree_days(tmax + bump, tmin, base).unwrap() >= g);
            prop_assert!(growing_degree_days(tmax + bump, tmin + bump.min(spread + bump), base).unwrap() >= g);
            prop_assert!(growing_degree_days(tmax, tmin, base + bump).unwrap() <= g);
        }

        #[test]
        fn doy_unit_circle(doy in 0.001f64..366.0) {
            let (s, c) = encode_doy_cyclic(doy, 365.0).unwrap();
            prop_assert!((s * s + c * c - 1.0).abs() < 1e-12);
        }

        #[test]
        fn constant_series_integral(v in -1.0f64..1.0, a in 0u32..3, b in 4u32..8) {
            let samples = [(a as f64, v), (3.5, v), (b as f64, v)];
            let got = integrate_vi(&samples, 7.0).unwrap();
            prop_assert!((got - v * (b - a) as f64).abs() < 1e-12);
        }

        #[test]
        fn scale_unscale_roundtrip(rows in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 3), 1..20)) {
            let p = fit_scaler(&rows).unwrap();
            for r in &rows {
                let back = p.unscale_row(&p.apply_row(r));
                for (x, y) in r.iter().zip(&back) {
                    prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()));
                }
            }
        }
    }
}
