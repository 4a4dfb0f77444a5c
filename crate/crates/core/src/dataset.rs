//! On-disk record schemas and the join into per-visit raw instances.
//!
//! Three CSV inputs are supported:
//!
//! * `traps.csv`: `trap_id,lat,lon,date,catches`
//! * `weather.csv`: daily min/max/mean statistics per trap location
//! * `vi.csv`: sparse vegetation-index observations (empty field = missing)
//!
//! Loaders validate every row and return records sorted by `(trap_id, date)`.

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{Datelike, Duration, NaiveDate};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TRAP_HEADER: &[&str] = &["trap_id", "lat", "lon", "date", "catches"];

pub const WEATHER_HEADER: &[&str] = &[
    "trap_id", "date", "t2m_min", "t2m_max", "t2m_mean", "tsoil_min", "tsoil_max", "tsoil_mean",
    "rh_min", "rh_max", "rh_mean", "ap_sum", "dp_min", "dp_max", "dp_mean", "ws_min", "ws_max",
    "ws_mean",
];

pub const VI_HEADER: &[&str] = &["trap_id", "date", "ndvi", "ndwi", "ndmi", "gi", "gcvi"];

/// Largest accepted gap between consecutive visits of one trap, in days.
pub const MAX_VISIT_GAP_DAYS: i64 = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrapVisitRecord {
    pub trap_id: String,
    pub lat: f64,
    pub lon: f64,
    pub date: NaiveDate,
    pub catches: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TrapRow {
    trap_id: String,
    lat: f64,
    lon: f64,
    date: NaiveDate,
    catches: i64,
}

/// Min/max/mean of one daily weather variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DailyStat {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyWeatherRecord {
    pub trap_id: String,
    pub date: NaiveDate,
    pub t2m_min: f64,
    pub t2m_max: f64,
    pub t2m_mean: f64,
    pub tsoil_min: f64,
    pub tsoil_max: f64,
    pub tsoil_mean: f64,
    pub rh_min: f64,
    pub rh_max: f64,
    pub rh_mean: f64,
    pub ap_sum: f64,
    pub dp_min: f64,
    pub dp_max: f64,
    pub dp_mean: f64,
    pub ws_min: f64,
    pub ws_max: f64,
    pub ws_mean: f64,
}

/// Weather variables that carry a min/max/mean triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WeatherVar {
    T2m,
    Tsoil,
    Rh,
    Dp,
    Ws,
}

impl WeatherVar {
    pub const ALL: [WeatherVar; 5] =
        [WeatherVar::T2m, WeatherVar::Tsoil, WeatherVar::Rh, WeatherVar::Dp, WeatherVar::Ws];

    pub fn name(self) -> &'static str {
        match self {
            WeatherVar::T2m => "t2m",
            WeatherVar::Tsoil => "tsoil",
            WeatherVar::Rh => "rh",
            WeatherVar::Dp => "dp",
            WeatherVar::Ws => "ws",
        }
    }
}

impl DailyWeatherRecord {
    pub fn stat(&self, var: WeatherVar) -> DailyStat {
        let (min, max, mean) = match var {
            WeatherVar::T2m => (self.t2m_min, self.t2m_max, self.t2m_mean),
            WeatherVar::Tsoil => (self.tsoil_min, self.tsoil_max, self.tsoil_mean),
            WeatherVar::Rh => (self.rh_min, self.rh_max, self.rh_mean),
            WeatherVar::Dp => (self.dp_min, self.dp_max, self.dp_mean),
            WeatherVar::Ws => (self.ws_min, self.ws_max, self.ws_mean),
        };
        DailyStat { min, max, mean }
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        for var in WeatherVar::ALL {
            let s = self.stat(var);
            if !(s.min.is_finite() && s.max.is_finite() && s.mean.is_finite()) {
                return Err(format!("{} statistics must be finite", var.name()));
            }
            if !(s.min <= s.mean && s.mean <= s.max) {
                return Err(format!(
                    "{name}_min <= {name}_mean <= {name}_max violated ({} / {} / {})",
                    s.min,
                    s.mean,
                    s.max,
                    name = var.name()
                ));
            }
        }
        for (name, v) in [("rh_min", self.rh_min), ("rh_max", self.rh_max), ("rh_mean", self.rh_mean)] {
            if !(0.0..=100.0).contains(&v) {
                return Err(format!("{name}={v} outside [0, 100]"));
            }
        }
        if !(self.ap_sum.is_finite() && self.ap_sum >= 0.0) {
            return Err(format!("ap_sum={} must be >= 0", self.ap_sum));
        }
        if self.ws_min < 0.0 {
            return Err(format!("ws_min={} must be >= 0", self.ws_min));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VegIndexRecord {
    pub trap_id: String,
    pub date: NaiveDate,
    pub ndvi: Option<f64>,
    pub ndwi: Option<f64>,
    pub ndmi: Option<f64>,
    pub gi: Option<f64>,
    pub gcvi: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VegIndex {
    Ndvi,
    Ndwi,
    Ndmi,
    Gi,
    Gcvi,
}

impl VegIndex {
    pub const ALL: [VegIndex; 5] =
        [VegIndex::Ndvi, VegIndex::Ndwi, VegIndex::Ndmi, VegIndex::Gi, VegIndex::Gcvi];

    pub fn name(self) -> &'static str {
        match self {
            VegIndex::Ndvi => "ndvi",
            VegIndex::Ndwi => "ndwi",
            VegIndex::Ndmi => "ndmi",
            VegIndex::Gi => "gi",
            VegIndex::Gcvi => "gcvi",
        }
    }

    /// Normalized-difference indices live in [-1, 1]; the others are ratios >= 0.
    pub fn is_normalized_difference(self) -> bool {
        matches!(self, VegIndex::Ndvi | VegIndex::Ndwi | VegIndex::Ndmi)
    }
}

impl VegIndexRecord {
    pub fn value(&self, index: VegIndex) -> Option<f64> {
        match index {
            VegIndex::Ndvi => self.ndvi,
            VegIndex::Ndwi => self.ndwi,
            VegIndex::Ndmi => self.ndmi,
            VegIndex::Gi => self.gi,
            VegIndex::Gcvi => self.gcvi,
        }
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        for index in VegIndex::ALL {
            let Some(v) = self.value(index) else { continue };
            let ok = if index.is_normalized_difference() {
                (-1.0..=1.0).contains(&v)
            } else {
                v.is_finite() && v >= 0.0
            };
            if !ok {
                return Err(format!("{}={v} out of range", index.name()));
            }
        }
        Ok(())
    }
}

/// One (trap, visit) pair before feature engineering.
#[derive(Debug, Clone, PartialEq)]
pub struct RawInstance {
    pub trap_id: String,
    pub prediction_date: NaiveDate,
    pub lat: f64,
    pub lon: f64,
    /// All visits strictly before `prediction_date`, oldest first.
    pub catch_history: Vec<(NaiveDate, u32)>,
    /// `window_days` consecutive daily records ending at `prediction_date`.
    pub weather_window: Vec<DailyWeatherRecord>,
    /// Index observations dated within `window_days` before `prediction_date`
    /// (inclusive on both ends), oldest first.
    pub vi_window: Vec<VegIndexRecord>,
    pub label_catches: u32,
}

impl RawInstance {
    pub fn day_of_year(&self) -> u32 {
        self.prediction_date.ordinal()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RejectReason {
    InsufficientCatchHistory,
    IncompleteWeatherWindow,
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RejectReason::InsufficientCatchHistory => "insufficient-catch-history",
            RejectReason::IncompleteWeatherWindow => "incomplete-weather-window",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rejection {
    pub trap_id: String,
    pub date: NaiveDate,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Assembly {
    pub instances: Vec<RawInstance>,
    pub rejected: Vec<Rejection>,
}

fn check_header(reader: &mut csv::Reader<impl Read>, expected: &[&str]) -> Result<()> {
    let headers = reader.headers()?;
    let found: Vec<&str> = headers.iter().collect();
    if found != expected {
        return Err(Error::Parse {
            line: 1,
            msg: format!("header {:?} does not match expected {:?}", found, expected),
        });
    }
    Ok(())
}

/// Reads every row of `reader` as `T`, reporting the 1-based line of any
/// malformed row.
fn read_rows<T: DeserializeOwned>(
    reader: impl Read,
    expected: &[&str],
) -> Result<Vec<(u64, T)>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    check_header(&mut rdr, expected)?;
    let headers = rdr.headers()?.clone();
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            msg: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let row: T = record
            .deserialize(Some(&headers))
            .map_err(|e| Error::Parse { line, msg: e.to_string() })?;
        out.push((line, row));
    }
    Ok(out)
}

fn sort_and_check_unique<T>(
    rows: &mut [(u64, T)],
    key: impl Fn(&T) -> (&str, NaiveDate),
) -> Result<()> {
    rows.sort_by(|a, b| key(&a.1).cmp(&key(&b.1)));
    for pair in rows.windows(2) {
        if key(&pair[0].1) == key(&pair[1].1) {
            let (trap, date) = key(&pair[1].1);
            return Err(Error::InvalidRow {
                line: pair[0].0.max(pair[1].0),
                msg: format!("duplicate record for ({trap}, {date})"),
            });
        }
    }
    Ok(())
}

pub fn read_traps(reader: impl Read) -> Result<Vec<TrapVisitRecord>> {
    let mut rows: Vec<(u64, TrapRow)> = read_rows(reader, TRAP_HEADER)?;
    for (line, r) in &rows {
        if r.catches < 0 {
            return Err(Error::InvalidRow {
                line: *line,
                msg: format!("catches={} must be >= 0", r.catches),
            });
        }
        if r.catches > u32::MAX as i64 {
            return Err(Error::InvalidRow { line: *line, msg: "catches overflow".into() });
        }
        if !(-90.0..=90.0).contains(&r.lat) || !(-180.0..=180.0).contains(&r.lon) {
            return Err(Error::InvalidRow {
                line: *line,
                msg: format!("coordinates ({}, {}) out of range", r.lat, r.lon),
            });
        }
    }
    sort_and_check_unique(&mut rows, |r| (r.trap_id.as_str(), r.date))?;
    for pair in rows.windows(2) {
        let (a, b) = (&pair[0].1, &pair[1].1);
        if a.trap_id == b.trap_id {
            let gap = (b.date - a.date).num_days();
            if !(1..=MAX_VISIT_GAP_DAYS).contains(&gap) {
                return Err(Error::InvalidRow {
                    line: pair[1].0,
                    msg: format!(
                        "visit gap of {gap} days for trap {} outside 1..={MAX_VISIT_GAP_DAYS}",
                        b.trap_id
                    ),
                });
            }
        }
    }
    Ok(rows
        .into_iter()
        .map(|(_, r)| TrapVisitRecord {
            trap_id: r.trap_id,
            lat: r.lat,
            lon: r.lon,
            date: r.date,
            catches: r.catches as u32,
        })
        .collect())
}

pub fn read_weather(reader: impl Read) -> Result<Vec<DailyWeatherRecord>> {
    let mut rows: Vec<(u64, DailyWeatherRecord)> = read_rows(reader, WEATHER_HEADER)?;
    for (line, r) in &rows {
        r.validate().map_err(|msg| Error::InvalidRow { line: *line, msg })?;
    }
    sort_and_check_unique(&mut rows, |r| (r.trap_id.as_str(), r.date))?;
    Ok(rows.into_iter().map(|(_, r)| r).collect())
}

pub fn read_vi(reader: impl Read) -> Result<Vec<VegIndexRecord>> {
    let mut rows: Vec<(u64, VegIndexRecord)> = read_rows(reader, VI_HEADER)?;
    for (line, r) in &rows {
        r.validate().map_err(|msg| Error::InvalidRow { line: *line, msg })?;
    }
    sort_and_check_unique(&mut rows, |r| (r.trap_id.as_str(), r.date))?;
    Ok(rows.into_iter().map(|(_, r)| r).collect())
}

pub fn load_trap_csv(path: impl AsRef<Path>) -> Result<Vec<TrapVisitRecord>> {
    read_traps(std::fs::File::open(path)?)
}

pub fn load_weather_csv(path: impl AsRef<Path>) -> Result<Vec<DailyWeatherRecord>> {
    read_weather(std::fs::File::open(path)?)
}

pub fn load_vi_csv(path: impl AsRef<Path>) -> Result<Vec<VegIndexRecord>> {
    read_vi(std::fs::File::open(path)?)
}

fn write_records<T: Serialize>(writer: impl Write, records: &[T], header: &[&str]) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    wtr.write_record(header)?;
    for r in records {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_traps(writer: impl Write, records: &[TrapVisitRecord]) -> Result<()> {
    write_records(writer, records, TRAP_HEADER)
}

pub fn write_weather(writer: impl Write, records: &[DailyWeatherRecord]) -> Result<()> {
    write_records(writer, records, WEATHER_HEADER)
}

pub fn write_vi(writer: impl Write, records: &[VegIndexRecord]) -> Result<()> {
    write_records(writer, records, VI_HEADER)
}

pub fn save_trap_csv(path: impl AsRef<Path>, records: &[TrapVisitRecord]) -> Result<()> {
    write_traps(std::fs::File::create(path)?, records)
}

pub fn save_weather_csv(path: impl AsRef<Path>, records: &[DailyWeatherRecord]) -> Result<()> {
    write_weather(std::fs::File::create(path)?, records)
}

pub fn save_vi_csv(path: impl AsRef<Path>, records: &[VegIndexRecord]) -> Result<()> {
    write_vi(std::fs::File::create(path)?, records)
}

/// Joins visits with their weather and vegetation windows.
///
/// A visit becomes a [`RawInstance`] when it has at least `n_lags` earlier
/// visits and all `window_days` daily weather records ending on the visit
/// date. Everything else lands in [`Assembly::rejected`]. Output is sorted by
/// `(trap_id, date)` and does not depend on input row order.
pub fn assemble_raw_instances(
    traps: &[TrapVisitRecord],
    weather: &[DailyWeatherRecord],
    vi: &[VegIndexRecord],
    window_days: u32,
    n_lags: usize,
) -> Result<Assembly> {
    if window_days == 0 {
        return Err(Error::Argument("window_days must be >= 1".into()));
    }

    let weather_by_key: HashMap<(&str, NaiveDate), &DailyWeatherRecord> =
        weather.iter().map(|w| ((w.trap_id.as_str(), w.date), w)).collect();

    let mut vi_by_trap: HashMap<&str, Vec<&VegIndexRecord>> = HashMap::new();
    for r in vi {
        vi_by_trap.entry(r.trap_id.as_str()).or_default().push(r);
    }
    for list in vi_by_trap.values_mut() {
        list.sort_by_key(|r| r.date);
    }

    let mut visits_by_trap: HashMap<&str, Vec<&TrapVisitRecord>> = HashMap::new();
    for t in traps {
        visits_by_trap.entry(t.trap_id.as_str()).or_default().push(t);
    }
    let mut trap_ids: Vec<&str> = visits_by_trap.keys().copied().collect();
    trap_ids.sort_unstable();

    let mut out = Assembly::default();
    for trap_id in trap_ids {
        let visits = visits_by_trap.get_mut(trap_id).expect("key from map");
        visits.sort_by_key(|v| v.date);
        let vi_list = vi_by_trap.get(trap_id).map(Vec::as_slice).unwrap_or(&[]);

        for (k, visit) in visits.iter().enumerate() {
            let reject = |reason| Rejection { trap_id: trap_id.to_string(), date: visit.date, reason };
            if k < n_lags {
                out.rejected.push(reject(RejectReason::InsufficientCatchHistory));
                continue;
            }
            let first_day = visit.date - Duration::days(window_days as i64 - 1);
            let weather_window: Option<Vec<DailyWeatherRecord>> = first_day
                .iter_days()
                .take(window_days as usize)
                .map(|d| weather_by_key.get(&(trap_id, d)).map(|w| (*w).clone()))
                .collect();
            let Some(weather_window) = weather_window else {
                out.rejected.push(reject(RejectReason::IncompleteWeatherWindow));
                continue;
            };
            let vi_start = visit.date - Duration::days(window_days as i64);
            let vi_window = vi_list
                .iter()
                .filter(|r| r.date >= vi_start && r.date <= visit.date)
                .map(|r| (*r).clone())
                .collect();
            out.instances.push(RawInstance {
                trap_id: trap_id.to_string(),
                prediction_date: visit.date,
                lat: visit.lat,
                lon: visit.lon,
                catch_history: visits[..k].iter().map(|v| (v.date, v.catches)).collect(),
                weather_window,
                vi_window,
                label_catches: visit.catches,
            });
        }
    }
    Ok(out)
}
