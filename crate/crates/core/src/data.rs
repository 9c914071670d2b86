//! Weather-history ingest, sampling/testing partitioning, price profiles, and
//! synthetic weather generation for tests and bundled demos.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use chrono::{Datelike, NaiveDate, NaiveDateTime, Timelike};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::plant::{WeatherSample, WeatherTrajectory};

/// Historical weather, one trajectory per complete calendar day.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HistoryDatabase {
    pub dt_hours: f64,
    pub days: BTreeMap<NaiveDate, WeatherTrajectory>,
    pub location: Option<String>,
    /// Days excluded at load time, with the reason.
    pub dropped_days: Vec<(NaiveDate, String)>,
}

impl HistoryDatabase {
    pub fn steps_per_day(&self) -> usize {
        (24.0 / self.dt_hours).round() as usize
    }
}

/// A two-day weather window identified by its start day.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeatherWindow {
    pub start_day: NaiveDate,
    pub trajectory: WeatherTrajectory,
}

/// Disjoint split of window start-days into sampling and testing sets.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HistoryPartition {
    pub sampling: BTreeSet<NaiveDate>,
    pub testing: BTreeSet<NaiveDate>,
}

impl HistoryPartition {
    pub fn validate(&self) -> Result<(), Error> {
        if !self.sampling.is_disjoint(&self.testing) {
            let shared = self.sampling.intersection(&self.testing).next().unwrap();
            return Err(Error::config(format!(
                "partition sets overlap (e.g. window {shared})"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum SplitRule {
    /// Windows starting before `first_testing_year` go to sampling, the rest
    /// to testing.
    YearBoundary { first_testing_year: i32 },
    /// Explicit start-day lists; must be disjoint.
    Explicit { sampling: Vec<NaiveDate>, testing: Vec<NaiveDate> },
}

/// Per-step electricity price over one horizon (currency/MWh_e).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceProfile {
    pub prices: Vec<f64>,
}

impl PriceProfile {
    pub fn validate(&self, horizon_k: usize) -> Result<(), Error> {
        if self.prices.len() != horizon_k {
            return Err(Error::config(format!(
                "price profile has {} steps, horizon needs {horizon_k}",
                self.prices.len()
            )));
        }
        if let Some(p) = self.prices.iter().find(|p| !(**p >= 0.0)) {
            return Err(Error::config(format!("negative or NaN price {p}")));
        }
        Ok(())
    }
}

/// Column names for the weather CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct CsvSchema {
    pub timestamp: String,
    /// DNI in W/m² (converted to kW/m² on load).
    pub dni_wm2: String,
    pub tamb_c: String,
    pub wind_ms: String,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            timestamp: "timestamp".into(),
            dni_wm2: "dni_wm2".into(),
            tamb_c: "tamb_c".into(),
            wind_ms: "wind_ms".into(),
        }
    }
}

/// Loads half-hourly (or any fixed-step) weather records and assembles them
/// into midnight-to-midnight days. Days with a missing interior step are
/// dropped and reported in `dropped_days`.
pub fn load_weather_csv(path: &Path, schema: &CsvSchema) -> Result<HistoryDatabase, Error> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| -> Result<usize, Error> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::parse(format!("weather csv missing column {name:?}")))
    };
    let (c_ts, c_dni, c_tamb, c_wind) =
        (col(&schema.timestamp)?, col(&schema.dni_wm2)?, col(&schema.tamb_c)?, col(&schema.wind_ms)?);

    let mut rows: Vec<(NaiveDateTime, WeatherSample)> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2; // header is line 1
        let record = record?;
        let field = |c: usize| -> Result<&str, Error> {
            record.get(c).ok_or_else(|| Error::parse(format!("line {line}: short row")))
        };
        let ts_text = field(c_ts)?;
        let ts = NaiveDateTime::parse_from_str(ts_text, "%Y-%m-%dT%H:%M:%S")
            .or_else(|_| NaiveDateTime::parse_from_str(ts_text, "%Y-%m-%d %H:%M:%S"))
            .map_err(|_| Error::parse(format!("line {line}: bad timestamp {ts_text:?}")))?;
        let num = |c: usize, name: &str| -> Result<f64, Error> {
            field(c)?.trim().parse::<f64>().map_err(|_| {
                Error::parse(format!("line {line}: bad {name} value {:?}", field(c).unwrap_or("")))
            })
        };
        let sample = WeatherSample {
            dni: num(c_dni, "dni")? / 1000.0,
            t_amb: num(c_tamb, "t_amb")?,
            wind: num(c_wind, "wind")?,
        };
        sample
            .validate()
            .map_err(|e| Error::parse(format!("line {line}: {e}")))?;
        rows.push((ts, sample));
    }
    if rows.len() < 2 {
        return Err(Error::parse("weather csv needs at least two rows to infer the step"));
    }
    rows.sort_by_key(|(ts, _)| *ts);

    let dt_secs = (rows[1].0 - rows[0].0).num_seconds();
    if dt_secs <= 0 {
        return Err(Error::parse("weather csv has duplicate timestamps"));
    }
    if 86_400 % dt_secs != 0 {
        return Err(Error::parse(format!(
            "step of {dt_secs} s does not divide a day; irregular schema"
        )));
    }
    let dt_hours = dt_secs as f64 / 3600.0;
    let steps_per_day = (86_400 / dt_secs) as usize;

    // Group on the day grid; any off-grid timestamp is a schema error.
    let mut by_day: BTreeMap<NaiveDate, BTreeMap<usize, WeatherSample>> = BTreeMap::new();
    for (ts, sample) in rows {
        let secs = ts.num_seconds_from_midnight() as i64;
        if secs % dt_secs != 0 {
            return Err(Error::parse(format!(
                "timestamp {ts} is off the {dt_secs}-second grid; irregular schema"
            )));
        }
        let slot = (secs / dt_secs) as usize;
        if by_day.entry(ts.date()).or_default().insert(slot, sample).is_some() {
            return Err(Error::parse(format!("duplicate timestamp {ts}")));
        }
    }

    let mut days = BTreeMap::new();
    let mut dropped = Vec::new();
    for (day, slots) in by_day {
        if slots.len() != steps_per_day {
            dropped.push((day, format!("{} of {steps_per_day} steps present", slots.len())));
            continue;
        }
        let samples: Vec<WeatherSample> = slots.into_values().collect();
        let start = day.and_hms_opt(0, 0, 0).unwrap();
        days.insert(day, WeatherTrajectory::new(start, dt_hours, samples)?);
    }
    Ok(HistoryDatabase { dt_hours, days, location: None, dropped_days: dropped })
}

/// Writes a database back to the CSV schema accepted by [`load_weather_csv`].
pub fn write_weather_csv(db: &HistoryDatabase, path: &Path, schema: &CsvSchema) -> Result<(), Error> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([&schema.timestamp, &schema.dni_wm2, &schema.tamb_c, &schema.wind_ms])?;
    let dt_secs = (db.dt_hours * 3600.0).round() as i64;
    for (day, traj) in &db.days {
        for (k, s) in traj.samples.iter().enumerate() {
            let ts = day.and_hms_opt(0, 0, 0).unwrap() + chrono::Duration::seconds(k as i64 * dt_secs);
            w.write_record([
                ts.format("%Y-%m-%dT%H:%M:%S").to_string(),
                format!("{}", s.dni * 1000.0),
                format!("{}", s.t_amb),
                format!("{}", s.wind),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Every consecutive day-pair whose first day falls in `month` becomes one
/// two-day window; pairs with a missing second day are skipped.
pub fn build_two_day_windows(db: &HistoryDatabase, month: u32) -> Result<Vec<WeatherWindow>, Error> {
    if !(1..=12).contains(&month) {
        return Err(Error::config(format!("month {month} outside 1..=12")));
    }
    let mut windows = Vec::new();
    for (day, traj) in &db.days {
        if day.month() != month {
            continue;
        }
        let next = *day + chrono::Duration::days(1);
        if let Some(next_traj) = db.days.get(&next) {
            windows.push(WeatherWindow { start_day: *day, trajectory: traj.concat(next_traj)? });
        }
    }
    Ok(windows)
}

/// Splits windows into disjoint sampling and testing sets.
pub fn partition_history(
    windows: &[WeatherWindow],
    rule: &SplitRule,
) -> Result<HistoryPartition, Error> {
    let available: BTreeSet<NaiveDate> = windows.iter().map(|w| w.start_day).collect();
    let partition = match rule {
        SplitRule::YearBoundary { first_testing_year } => {
            let (sampling, testing): (BTreeSet<_>, BTreeSet<_>) =
                available.iter().partition(|d| d.year() < *first_testing_year);
            HistoryPartition { sampling, testing }
        }
        SplitRule::Explicit { sampling, testing } => {
            let sampling: BTreeSet<NaiveDate> = sampling.iter().copied().collect();
            let testing: BTreeSet<NaiveDate> = testing.iter().copied().collect();
            for d in sampling.union(&testing) {
                if !available.contains(d) {
                    return Err(Error::config(format!("window {d} not in the available set")));
                }
            }
            HistoryPartition { sampling, testing }
        }
    };
    partition.validate()?;
    if partition.sampling.is_empty() {
        return Err(Error::config("split rule yields an empty sampling set"));
    }
    Ok(partition)
}

/// A daily peak window in hours of day, [start, end).
pub type PeakWindow = (f64, f64);

/// Two-tier contract price: peak price inside the (daily, repeated) peak
/// windows, off-peak elsewhere. Overlapping windows are merged.
pub fn two_tier_price_profile(
    horizon_k: usize,
    dt_hours: f64,
    peak_windows: &[PeakWindow],
    peak_price: f64,
    offpeak_price: f64,
) -> Result<PriceProfile, Error> {
    if !(peak_price >= offpeak_price && offpeak_price >= 0.0) {
        return Err(Error::config("need peak_price >= offpeak_price >= 0"));
    }
    if !(dt_hours > 0.0) {
        return Err(Error::config("dt_hours must be positive"));
    }
    let mut windows: Vec<PeakWindow> = Vec::new();
    let mut sorted: Vec<PeakWindow> = peak_windows.to_vec();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    for (a, b) in sorted {
        if !(0.0..=24.0).contains(&a) || !(0.0..=24.0).contains(&b) || a >= b {
            return Err(Error::config(format!("peak window ({a}, {b}) invalid")));
        }
        match windows.last_mut() {
            Some(last) if a <= last.1 => {
                eprintln!("warning: merging overlapping peak windows ({},{}) and ({a},{b})", last.0, last.1);
                last.1 = last.1.max(b);
            }
            _ => windows.push((a, b)),
        }
    }
    let prices = (0..horizon_k)
        .map(|k| {
            let h = (k as f64 * dt_hours) % 24.0;
            let peak = windows.iter().any(|&(a, b)| h >= a && h < b);
            if peak {
                peak_price
            } else {
                offpeak_price
            }
        })
        .collect();
    Ok(PriceProfile { prices })
}

/// Clear-sky envelope parameters for [`synthetic_weather`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ClearSkyParams {
    pub start_day: NaiveDate,
    pub dt_hours: f64,
    /// Peak DNI at solar noon (kW/m²).
    pub dni_peak: f64,
    pub sunrise_hour: f64,
    pub sunset_hour: f64,
    pub t_amb: f64,
    pub wind: f64,
}

impl Default for ClearSkyParams {
    fn default() -> Self {
        Self {
            start_day: NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(),
            dt_hours: 0.5,
            dni_peak: 0.95,
            sunrise_hour: 6.0,
            sunset_hour: 18.0,
            t_amb: 25.0,
            wind: 3.0,
        }
    }
}

/// Clear-sky DNI at hour `h` of day: half-sine between sunrise and sunset.
pub fn clear_sky_dni(params: &ClearSkyParams, h: f64) -> f64 {
    if h <= params.sunrise_hour || h >= params.sunset_hour {
        return 0.0;
    }
    let frac = (h - params.sunrise_hour) / (params.sunset_hour - params.sunrise_hour);
    params.dni_peak * (std::f64::consts::PI * frac).sin()
}

/// Reproducible synthetic weather: sinusoidal clear-sky DNI with Bernoulli
/// per-step cloud dropout.
pub fn synthetic_weather(
    seed: u64,
    days: usize,
    params: &ClearSkyParams,
    cloud_dropout_prob: f64,
) -> Result<HistoryDatabase, Error> {
    if !(0.0..=1.0).contains(&cloud_dropout_prob) {
        return Err(Error::config("cloud_dropout_prob must lie in [0, 1]"));
    }
    if !(params.sunrise_hour < params.sunset_hour) {
        return Err(Error::config("sunrise must precede sunset"));
    }
    let steps = (24.0 / params.dt_hours).round() as usize;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut db_days = BTreeMap::new();
    for d in 0..days {
        let day = params.start_day + chrono::Duration::days(d as i64);
        let samples: Vec<WeatherSample> = (0..steps)
            .map(|k| {
                let h = k as f64 * params.dt_hours;
                let clouded = cloud_dropout_prob > 0.0 && rng.gen::<f64>() < cloud_dropout_prob;
                WeatherSample {
                    dni: if clouded { 0.0 } else { clear_sky_dni(params, h) },
                    t_amb: params.t_amb,
                    wind: params.wind,
                }
            })
            .collect();
        let start = day.and_hms_opt(0, 0, 0).unwrap();
        db_days.insert(day, WeatherTrajectory::new(start, params.dt_hours, samples)?);
    }
    Ok(HistoryDatabase {
        dt_hours: params.dt_hours,
        days: db_days,
        location: Some("synthetic".into()),
        dropped_days: Vec::new(),
    })
}
