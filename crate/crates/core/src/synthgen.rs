//! Seeded synthetic trap network.
//!
//! Two seasons of traps are visited every few days. Weather follows smooth
//! seasonal curves plus AR(1) anomalies (a regional component shared by all
//! traps of a year and a local one per trap). Vegetation indices follow a
//! logistic green-up and late senescence, sampled every few days with
//! dropouts. Catches are negative binomial with log-mean
//!
//! ```text
//! log mu = base + trap effect
//!        + lag_weight * (ln(1 + previous catches) - ln(1 + threshold))
//!        + temp_coef * z(mean daily GDD over the window)
//!        + rh_coef * z(mean RH over the window)
//!        + season_amp * double_peak(doy)
//!        + interaction_coef * z(ws_min) * z(ap_sum_acc)
//!        + ndvi_coef * z(ndvi)
//!        + ln(gap / 4)
//! ```
//!
//! Each count is drawn by inverse CDF from a single uniform, so for fixed
//! seed the counts are monotone in `mu`.

use std::f64::consts::PI;
use std::path::Path;

use chrono::NaiveDate;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::{self, DailyWeatherRecord, TrapVisitRecord, VegIndexRecord};
use crate::error::{Error, Result};
use crate::features::growing_degree_days;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WeatherParams {
    /// Seasonal air temperature: `t2m_level + t2m_amp * sin(2 pi (doy - t2m_phase) / 365)`.
    pub t2m_level: f64,
    pub t2m_amp: f64,
    pub t2m_phase: f64,
    pub ar_coef: f64,
    pub regional_sd: f64,
    pub local_sd: f64,
    pub diurnal_range: f64,
    pub rh_level: f64,
    pub rh_amp: f64,
    pub rh_sd: f64,
    pub ws_level: f64,
    pub ws_sd: f64,
    pub rain_prob: f64,
    pub rain_mean_mm: f64,
}

impl Default for WeatherParams {
    fn default() -> Self {
        WeatherParams {
            t2m_level: 22.0,
            t2m_amp: 5.5,
            t2m_phase: 105.0,
            ar_coef: 0.8,
            regional_sd: 1.0,
            local_sd: 0.6,
            diurnal_range: 11.0,
            rh_level: 58.0,
            rh_amp: 10.0,
            rh_sd: 4.0,
            ws_level: 2.5,
            ws_sd: 0.6,
            rain_prob: 0.12,
            rain_mean_mm: 6.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PopulationParams {
    /// Log-mean catches per 4-day interval at average conditions.
    pub base: f64,
    pub trap_sd: f64,
    pub lag_weight: f64,
    pub temp_coef: f64,
    pub rh_coef: f64,
    pub season_amp: f64,
    pub peak_doys: [f64; 2],
    pub peak_width: f64,
    pub interaction_coef: f64,
    /// Feature columns whose product drives the interaction term.
    pub interaction_pair: [String; 2],
    pub ndvi_coef: f64,
    /// Negative-binomial size parameter; smaller is more overdispersed.
    pub dispersion: f64,
    /// Extra log-abundance of the first trap, giving it clear peaks.
    pub showcase_boost: f64,
}

impl Default for PopulationParams {
    fn default() -> Self {
        PopulationParams {
            base: 2.0,
            trap_sd: 0.3,
            lag_weight: 0.6,
            temp_coef: 0.3,
            rh_coef: -0.2,
            season_amp: 1.0,
            peak_doys: [178.0, 212.0],
            peak_width: 9.0,
            interaction_coef: 0.3,
            interaction_pair: ["ws_min".into(), "ap_sum_acc".into()],
            ndvi_coef: 0.1,
            dispersion: 4.0,
            showcase_boost: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_traps_year1: usize,
    pub n_traps_year2: usize,
    pub year1: i32,
    pub year2: i32,
    pub season_start_doy: u32,
    pub season_end_doy: u32,
    pub gap_min: u32,
    pub gap_max: u32,
    /// Probability that a scheduled visit is skipped.
    pub skip_prob: f64,
    /// Days of weather generated before the season starts.
    pub weather_lead_days: u32,
    pub lat_range: [f64; 2],
    pub lon_range: [f64; 2],
    pub vi_revisit_days: u32,
    pub vi_dropout: f64,
    pub vi_field_missing: f64,
    pub action_threshold: u32,
    pub weather: WeatherParams,
    pub population: PopulationParams,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 42,
            n_traps_year1: 16,
            n_traps_year2: 10,
            year1: 2020,
            year2: 2021,
            season_start_doy: 152,
            season_end_doy: 250,
            gap_min: 3,
            gap_max: 5,
            skip_prob: 0.1,
            weather_lead_days: 10,
            lat_range: [40.3, 41.0],
            lon_range: [22.2, 23.6],
            vi_revisit_days: 5,
            vi_dropout: 0.2,
            vi_field_missing: 0.03,
            action_threshold: 10,
            weather: WeatherParams::default(),
            population: PopulationParams::default(),
        }
    }
}

impl SynthConfig {
    pub fn with_seed(seed: u64) -> Self {
        SynthConfig { seed, ..SynthConfig::default() }
    }

    /// Catches independent of every covariate and of the past.
    pub fn null_signal(mut self) -> Self {
        let p = &mut self.population;
        p.trap_sd = 0.0;
        p.lag_weight = 0.0;
        p.temp_coef = 0.0;
        p.rh_coef = 0.0;
        p.season_amp = 0.0;
        p.interaction_coef = 0.0;
        p.ndvi_coef = 0.0;
        p.showcase_boost = 0.0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Argument(m.to_string()));
        if self.n_traps_year1 + self.n_traps_year2 == 0 {
            return bad("at least one trap required");
        }
        if !(1..=365).contains(&self.season_start_doy)
            || !(1..=365).contains(&self.season_end_doy)
            || self.season_start_doy > self.season_end_doy
        {
            return bad("season must lie within DoY 1..365");
        }
        if self.season_start_doy <= self.weather_lead_days {
            return bad("weather lead extends before January 1");
        }
        if self.gap_min < 1 || self.gap_min > self.gap_max {
            return bad("visit gaps must satisfy 1 <= gap_min <= gap_max");
        }
        if 2 * self.gap_max as i64 > dataset::MAX_VISIT_GAP_DAYS {
            return bad("gap_max too large for the visit-gap limit");
        }
        for p in [self.skip_prob, self.vi_dropout, self.vi_field_missing, self.weather.rain_prob] {
            if !(0.0..1.0).contains(&p) {
                return bad("probabilities must lie in [0, 1)");
            }
        }
        if self.vi_revisit_days < 1 {
            return bad("vi_revisit_days must be >= 1");
        }
        if !(self.population.dispersion > 0.0) || !(self.weather.rain_mean_mm > 0.0) {
            return bad("dispersion and rain mean must be > 0");
        }
        if self.lat_range[0] > self.lat_range[1] || self.lon_range[0] > self.lon_range[1] {
            return bad("coordinate ranges must be ordered");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorMeta {
    pub seed: u64,
    pub trap_ids: Vec<String>,
    pub planted_pair: [String; 2],
    /// Trap with the boosted abundance, used for leave-one-trap-out checks.
    pub showcase_trap: String,
    pub config: SynthConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub traps: Vec<TrapVisitRecord>,
    pub weather: Vec<DailyWeatherRecord>,
    pub vi: Vec<VegIndexRecord>,
    pub meta: GeneratorMeta,
}

impl SyntheticData {
    /// Writes `traps.csv`, `weather.csv`, `vi.csv` and `generator_meta.json`.
    pub fn write_to_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        dataset::save_trap_csv(dir.join("traps.csv"), &self.traps)?;
        dataset::save_weather_csv(dir.join("weather.csv"), &self.weather)?;
        dataset::save_vi_csv(dir.join("vi.csv"), &self.vi)?;
        crate::json::write_file(dir.join("generator_meta.json"), &self.meta)
    }
}

fn round_to(x: f64, decimals: i32) -> f64 {
    let s = 10f64.powi(decimals);
    (x * s).round() / s
}

fn normal(rng: &mut ChaCha8Rng, sd: f64) -> f64 {
    if sd > 0.0 {
        Normal::new(0.0, sd).expect("finite sd").sample(rng)
    } else {
        0.0
    }
}

/// AR(1) series of length `n` with stationary start.
fn ar_series(rng: &mut ChaCha8Rng, n: usize, phi: f64, sd: f64) -> Vec<f64> {
    let stationary = sd / (1.0 - phi * phi).max(1e-9).sqrt();
    let mut x = normal(rng, stationary);
    (0..n)
        .map(|_| {
            let v = x;
            x = phi * x + normal(rng, sd);
            v
        })
        .collect()
}

/// Smallest `k` with `P(X <= k) >= u` for a negative binomial of mean `mu`
/// and size `r`.
pub fn negative_binomial_quantile(mu: f64, r: f64, u: f64) -> u32 {
    if !(mu > 0.0) {
        return 0;
    }
    let q = mu / (r + mu);
    let mut p = (r / (r + mu)).powf(r);
    let mut cdf = p;
    let mut k = 0u32;
    while cdf < u && k < 100_000 {
        p *= (k as f64 + r) / (k as f64 + 1.0) * q;
        k += 1;
        cdf += p;
        if p == 0.0 && cdf < u {
            break;
        }
    }
    k
}

/// Sum of two Gaussian bumps centred on the peak days, shifted so the
/// season average is roughly zero.
pub fn double_peak(doy: f64, peaks: [f64; 2], width: f64) -> f64 {
    let bump = |c: f64| (-((doy - c) / width).powi(2)).exp();
    bump(peaks[0]) + bump(peaks[1]) - 0.3
}

struct TrapSite {
    id: String,
    year: i32,
    year_index: usize,
    lat: f64,
    lon: f64,
    effect: f64,
}

/// Reference scales used to standardize covariates inside the intensity.
const GDD_REF: f64 = 11.0;
const GDD_SCALE: f64 = 2.0;
const RH_REF: f64 = 50.0;
const RH_SCALE: f64 = 6.0;
const WS_MIN_REF: f64 = 1.0;
const WS_MIN_SCALE: f64 = 0.45;
const AP_ACC_REF: f64 = 5.0;
const AP_ACC_SCALE: f64 = 8.0;
const NDVI_REF: f64 = 0.55;
const NDVI_SCALE: f64 = 0.2;

fn weather_for_trap(
    cfg: &SynthConfig,
    site: &TrapSite,
    index: usize,
    regional: &[f64],
    first_doy: u32,
) -> Vec<DailyWeatherRecord> {
    let w = &cfg.weather;
    let n = regional.len();
    let mut rng = rng::stream_rng(cfg.seed, rng::STREAM_WEATHER, index as u64);
    let local = ar_series(&mut rng, n, w.ar_coef, w.local_sd);
    let rh_noise = ar_series(&mut rng, n, 0.6, w.rh_sd);
    let ws_noise = ar_series(&mut rng, n, 0.5, w.ws_sd);
    // higher sites run slightly cooler
    let site_offset = -1.5 * (site.lat - cfg.lat_range[0]) + normal(&mut rng, 0.3);
    let rain = Exp::new(1.0 / w.rain_mean_mm).expect("positive mean");
    (0..n)
        .map(|k| {
            let doy = first_doy + k as u32;
            let date = NaiveDate::from_yo_opt(site.year, doy).expect("valid day of year");
            let season = (2.0 * PI * (doy as f64 - w.t2m_phase) / 365.0).sin();
            let t_mean = w.t2m_level + w.t2m_amp * season + site_offset + regional[k] + local[k];
            let dtr = (w.diurnal_range + normal(&mut rng, 1.5)).clamp(4.0, 18.0);
            let (t_min, t_max) = (t_mean - 0.45 * dtr, t_mean + 0.55 * dtr);
            let s_mean = t_mean + 2.0 + normal(&mut rng, 0.5);
            let s_dtr = 1.4 * dtr;
            let rh_mean = (w.rh_level - w.rh_amp * season - 1.5 * regional[k] + rh_noise[k]).clamp(5.0, 95.0);
            let rh_lo = rh_mean - rng.random_range(10.0..20.0);
            let rh_hi = rh_mean + rng.random_range(8.0..18.0);
            let dp_mean = t_mean - (100.0 - rh_mean) / 5.0;
            let ws_mean = (w.ws_level + ws_noise[k]).max(0.2);
            let ws_min = ws_mean * rng.random_range(0.2..0.6);
            let ws_max = ws_mean * rng.random_range(1.4..2.2);
            let ap = if rng.random_bool(w.rain_prob) { rain.sample(&mut rng) } else { 0.0 };
            let dp_lo = dp_mean - rng.random_range(1.0..3.0);
            let dp_hi = dp_mean + rng.random_range(1.0..3.0);
            let r2 = |x: f64| round_to(x, 2);
            DailyWeatherRecord {
                trap_id: site.id.clone(),
                date,
                t2m_min: r2(t_min),
                t2m_max: r2(t_max),
                t2m_mean: r2(t_mean),
                tsoil_min: r2(s_mean - 0.45 * s_dtr),
                tsoil_max: r2(s_mean + 0.55 * s_dtr),
                tsoil_mean: r2(s_mean),
                rh_min: r2(rh_lo.clamp(0.0, 100.0)),
                rh_max: r2(rh_hi.clamp(0.0, 100.0)),
                rh_mean: r2(rh_mean),
                ap_sum: r2(ap),
                dp_min: r2(dp_lo),
                dp_max: r2(dp_hi),
                dp_mean: r2(dp_mean),
                ws_min: r2(ws_min),
                ws_max: r2(ws_max),
                ws_mean: r2(ws_mean),
            }
        })
        .collect()
}

/// Noise-free NDVI of a trap's field on a given day.
fn ndvi_curve(doy: f64, green_up: f64) -> f64 {
    0.2 + 0.6 / (1.0 + (-(doy - green_up) / 8.0).exp()) - 0.3 / (1.0 + (-(doy - 240.0) / 6.0).exp())
}

fn vi_for_trap(cfg: &SynthConfig, site: &TrapSite, index: usize, green_up: f64, first_doy: u32) -> Vec<VegIndexRecord> {
    let mut rng = rng::stream_rng(cfg.seed, rng::STREAM_VI, index as u64);
    let mut out = Vec::new();
    let mut doy = first_doy + rng.random_range(0..cfg.vi_revisit_days);
    while doy <= cfg.season_end_doy {
        let keep = !rng.random_bool(cfg.vi_dropout);
        let ndvi = (ndvi_curve(doy as f64, green_up) + normal(&mut rng, 0.03)).clamp(-1.0, 1.0);
        let ndwi = (0.5 * ndvi - 0.25 + normal(&mut rng, 0.03)).clamp(-1.0, 1.0);
        let ndmi = (0.6 * ndvi - 0.1 + normal(&mut rng, 0.03)).clamp(-1.0, 1.0);
        let gi = (1.0 + 1.5 * ndvi + normal(&mut rng, 0.05)).max(0.0);
        let gcvi = (1.0 + 4.0 * ndvi + normal(&mut rng, 0.15)).max(0.0);
        let mut field = |v: f64| {
            if rng.random_bool(cfg.vi_field_missing) {
                None
            } else {
                Some(round_to(v, 4))
            }
        };
        let rec = VegIndexRecord {
            trap_id: site.id.clone(),
            date: NaiveDate::from_yo_opt(site.year, doy).expect("valid day of year"),
            ndvi: field(ndvi),
            ndwi: field(ndwi),
            ndmi: field(ndmi),
            gi: field(gi),
            gcvi: field(gcvi),
        };
        if keep {
            out.push(rec);
        }
        doy += cfg.vi_revisit_days;
    }
    out
}

fn visit_schedule(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Vec<u32> {
    let mut visits = Vec::new();
    let mut doy = cfg.season_start_doy + rng.random_range(0..cfg.gap_min);
    let mut skipped = true;
    while doy <= cfg.season_end_doy {
        // never skip twice in a row, so gaps stay within twice the maximum
        skipped = !skipped && rng.random_bool(cfg.skip_prob);
        if !skipped {
            visits.push(doy);
        }
        doy += rng.random_range(cfg.gap_min..=cfg.gap_max);
    }
    visits
}

pub fn generate(cfg: &SynthConfig) -> Result<SyntheticData> {
    cfg.validate()?;
    let pop = &cfg.population;
    let mut geo = rng::stream_rng(cfg.seed, rng::STREAM_GEOMETRY, 0);
    let mut sites = Vec::new();
    for (year_index, (year, count)) in [(cfg.year1, cfg.n_traps_year1), (cfg.year2, cfg.n_traps_year2)].into_iter().enumerate() {
        for k in 0..count {
            sites.push(TrapSite {
                id: format!("T{year}-{:02}", k + 1),
                year,
                year_index,
                lat: round_to(geo.random_range(cfg.lat_range[0]..=cfg.lat_range[1]), 5),
                lon: round_to(geo.random_range(cfg.lon_range[0]..=cfg.lon_range[1]), 5),
                effect: normal(&mut geo, pop.trap_sd),
            });
        }
    }
    if let Some(first) = sites.first_mut() {
        first.effect = first.effect.abs() + pop.showcase_boost;
    }

    let first_doy = cfg.season_start_doy - cfg.weather_lead_days;
    let n_days = (cfg.season_end_doy - first_doy + 1) as usize;
    let regional: Vec<Vec<f64>> = (0..2)
        .map(|y| {
            let mut r = rng::stream_rng(cfg.seed, rng::STREAM_WEATHER, 1_000_000 + y as u64);
            ar_series(&mut r, n_days, cfg.weather.ar_coef, cfg.weather.regional_sd)
        })
        .collect();

    let threshold_log = (1.0 + cfg.action_threshold as f64).ln();
    let mut traps = Vec::new();
    let mut weather = Vec::new();
    let mut vi = Vec::new();
    for (index, site) in sites.iter().enumerate() {
        let wx = weather_for_trap(cfg, site, index, &regional[site.year_index], first_doy);
        let green_up = {
            let mut r = rng::stream_rng(cfg.seed, rng::STREAM_VI, 1_000_000 + index as u64);
            r.random_range(165.0..185.0)
        };
        let site_vi = vi_for_trap(cfg, site, index, green_up, first_doy);

        let mut sched_rng = rng::stream_rng(cfg.seed, rng::STREAM_TRAP, index as u64);
        let visits = visit_schedule(cfg, &mut sched_rng);
        let mut catch_rng = rng::stream_rng(cfg.seed, rng::STREAM_CATCH, index as u64);
        let mut prev: Option<(u32, u32)> = None;
        for &doy in &visits {
            let k = (doy - first_doy) as usize;
            let window = &wx[k + 1 - 7..=k];
            let gdd = window
                .iter()
                .map(|r| growing_degree_days(r.t2m_max, r.t2m_min, 15.6))
                .collect::<Result<Vec<f64>>>()?
                .iter()
                .sum::<f64>()
                / 7.0;
            let rh = window.iter().map(|r| r.rh_mean).sum::<f64>() / 7.0;
            let ap_acc: f64 = window.iter().map(|r| r.ap_sum).sum();
            let ws_min = wx[k].ws_min;
            let z_gdd = (gdd - GDD_REF) / GDD_SCALE;
            let z_rh = (rh - RH_REF) / RH_SCALE;
            let z_pair = ((ws_min - WS_MIN_REF) / WS_MIN_SCALE) * ((ap_acc - AP_ACC_REF) / AP_ACC_SCALE);
            let z_ndvi = (ndvi_curve(doy as f64, green_up) - NDVI_REF) / NDVI_SCALE;
            let (lag_term, gap) = match prev {
                Some((pdoy, c)) => ((1.0 + c as f64).ln() - threshold_log, (doy - pdoy) as f64),
                None => (0.0, 4.0),
            };
            let log_mu = pop.base
                + site.effect
                + pop.lag_weight * lag_term
                + pop.temp_coef * z_gdd
                + pop.rh_coef * z_rh
                + pop.season_amp * double_peak(doy as f64, pop.peak_doys, pop.peak_width)
                + pop.interaction_coef * z_pair.clamp(-4.0, 4.0)
                + pop.ndvi_coef * z_ndvi
                + (gap / 4.0).ln();
            let u: f64 = catch_rng.random();
            let catches = negative_binomial_quantile(log_mu.min(12.0).exp(), pop.dispersion, u);
            traps.push(TrapVisitRecord {
                trap_id: site.id.clone(),
                lat: site.lat,
                lon: site.lon,
                date: NaiveDate::from_yo_opt(site.year, doy).expect("valid day of year"),
                catches,
            });
            prev = Some((doy, catches));
        }
        weather.extend(wx);
        vi.extend(site_vi);
    }

    let meta = GeneratorMeta {
        seed: cfg.seed,
        trap_ids: sites.iter().map(|s| s.id.clone()).collect(),
        planted_pair: pop.interaction_pair.clone(),
        showcase_trap: sites.first().map(|s| s.id.clone()).unwrap_or_default(),
        config: cfg.clone(),
    };
    Ok(SyntheticData { traps, weather, vi, meta })
}
