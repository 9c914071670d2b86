//! C ABI for the dispatch toolkit: opaque handles, integer status codes, and
//! a thread-local last-error message. The generated header lands in
//! `include/heliodispatch.h`.
//!
//! Ownership rules: every `*_new`/`*_from_json`-style constructor hands the
//! caller an owned handle that must be released with the matching `*_free`;
//! strings returned by the library must be released with `hd_string_free`.
//! All functions tolerate null inputs and report `NullPointer` instead of
//! crashing.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use heliodispatch::config::RunConfig;
use heliodispatch::data::{synthetic_weather, two_tier_price_profile, PriceProfile};
use heliodispatch::error::Error;
use heliodispatch::formulation::DispatchPlan;
use heliodispatch::heuristics::perfect_knowledge;
use heliodispatch::plant::WeatherTrajectory;
use heliodispatch::simulator::simulate;

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HdStatus {
    Ok = 0,
    ConfigError = 1,
    ParseError = 2,
    ModelError = 3,
    SolverError = 4,
    NoSolution = 5,
    IoError = 6,
    NullPointer = 7,
    Panic = 8,
}

pub struct HdConfig(RunConfig);
pub struct HdWeather(WeatherTrajectory);
pub struct HdPlan(DispatchPlan);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let sanitized = msg.replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(sanitized).unwrap_or_default());
}

fn status_of(err: &Error) -> HdStatus {
    match err {
        Error::Config(_) => HdStatus::ConfigError,
        Error::Parse(_) | Error::Json(_) | Error::Csv(_) => HdStatus::ParseError,
        Error::Model(_) => HdStatus::ModelError,
        Error::Solver(_) => HdStatus::SolverError,
        Error::NoSolution(_) => HdStatus::NoSolution,
        Error::Io(_) => HdStatus::IoError,
    }
}

fn report(err: Error) -> HdStatus {
    set_error(&err.to_string());
    status_of(&err)
}

fn guarded<F: FnOnce() -> HdStatus>(f: F) -> HdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("internal panic");
            HdStatus::Panic
        }
    }
}

/// Message for the most recent failure on this thread; empty string when no
/// failure has occurred. The pointer stays valid until the next failing call
/// on the same thread.
#[no_mangle]
pub extern "C" fn hd_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

unsafe fn read_utf8<'a>(ptr: *const c_char) -> Result<&'a str, HdStatus> {
    if ptr.is_null() {
        set_error("null string argument");
        return Err(HdStatus::NullPointer);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8");
        HdStatus::ParseError
    })
}

// --- Config ----------------------------------------------------------------

/// Default configuration (reference plant, synthetic weather, two-tier
/// prices). Never fails.
#[no_mangle]
pub extern "C" fn hd_config_default() -> *mut HdConfig {
    Box::into_raw(Box::new(HdConfig(RunConfig::default())))
}

/// Parses and validates a configuration from JSON; null `out` or JSON is an
/// error.
#[no_mangle]
pub unsafe extern "C" fn hd_config_from_json(
    json: *const c_char,
    out: *mut *mut HdConfig,
) -> HdStatus {
    guarded(|| {
        if out.is_null() {
            set_error("null output pointer");
            return HdStatus::NullPointer;
        }
        let text = match read_utf8(json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let cfg: RunConfig = match serde_json::from_str(text) {
            Ok(c) => c,
            Err(e) => {
                set_error(&format!("config JSON: {e}"));
                return HdStatus::ParseError;
            }
        };
        if let Err(e) = cfg.validate() {
            return report(e);
        }
        *out = Box::into_raw(Box::new(HdConfig(cfg)));
        HdStatus::Ok
    })
}

#[no_mangle]
pub unsafe extern "C" fn hd_config_free(config: *mut HdConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

// --- Weather -----------------------------------------------------------------

/// Builds a synthetic weather trajectory of `days` consecutive days from the
/// config's sky model and seed.
#[no_mangle]
pub unsafe extern "C" fn hd_weather_synthetic(
    config: *const HdConfig,
    days: usize,
    out: *mut *mut HdWeather,
) -> HdStatus {
    guarded(|| {
        if config.is_null() || out.is_null() {
            set_error("null argument");
            return HdStatus::NullPointer;
        }
        let cfg = &(*config).0;
        let db = match synthetic_weather(
            cfg.seed,
            days,
            &cfg.weather.synthetic,
            cfg.weather.synthetic_cloud_dropout,
        ) {
            Ok(db) => db,
            Err(e) => return report(e),
        };
        let mut iter = db.days.values();
        let mut traj = match iter.next() {
            Some(t) => t.clone(),
            None => {
                set_error("no days generated");
                return HdStatus::ConfigError;
            }
        };
        for day in iter {
            traj = match traj.concat(day) {
                Ok(t) => t,
                Err(e) => return report(e),
            };
        }
        *out = Box::into_raw(Box::new(HdWeather(traj)));
        HdStatus::Ok
    })
}

/// Number of steps in a weather trajectory; 0 for null.
#[no_mangle]
pub unsafe extern "C" fn hd_weather_len(weather: *const HdWeather) -> usize {
    if weather.is_null() {
        return 0;
    }
    (*weather).0.len()
}

#[no_mangle]
pub unsafe extern "C" fn hd_weather_free(weather: *mut HdWeather) {
    if !weather.is_null() {
        drop(Box::from_raw(weather));
    }
}

// --- Plans ---------------------------------------------------------------------

#[no_mangle]
pub unsafe extern "C" fn hd_plan_from_json(
    config: *const HdConfig,
    json: *const c_char,
    out: *mut *mut HdPlan,
) -> HdStatus {
    guarded(|| {
        if config.is_null() || out.is_null() {
            set_error("null argument");
            return HdStatus::NullPointer;
        }
        let text = match read_utf8(json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let plan: DispatchPlan = match serde_json::from_str(text) {
            Ok(p) => p,
            Err(e) => {
                set_error(&format!("plan JSON: {e}"));
                return HdStatus::ParseError;
            }
        };
        if let Err(e) = plan.validate(&(*config).0.plant) {
            return report(e);
        }
        *out = Box::into_raw(Box::new(HdPlan(plan)));
        HdStatus::Ok
    })
}

/// Serializes a plan to JSON. Release the string with `hd_string_free`.
#[no_mangle]
pub unsafe extern "C" fn hd_plan_to_json(plan: *const HdPlan) -> *mut c_char {
    if plan.is_null() {
        return std::ptr::null_mut();
    }
    match serde_json::to_string(&(*plan).0) {
        Ok(s) => CString::new(s).map(CString::into_raw).unwrap_or(std::ptr::null_mut()),
        Err(_) => std::ptr::null_mut(),
    }
}

#[no_mangle]
pub unsafe extern "C" fn hd_plan_free(plan: *mut HdPlan) {
    if !plan.is_null() {
        drop(Box::from_raw(plan));
    }
}

#[no_mangle]
pub unsafe extern "C" fn hd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

fn prices_for(cfg: &RunConfig, horizon_k: usize) -> Result<PriceProfile, Error> {
    two_tier_price_profile(
        horizon_k,
        cfg.dt_hours,
        &cfg.prices.peak_windows,
        cfg.prices.peak_price,
        cfg.prices.offpeak_price,
    )
}

// --- Optimization and simulation ------------------------------------------------

/// Deterministic optimization against the given weather (the
/// perfect-knowledge plan).
#[no_mangle]
pub unsafe extern "C" fn hd_optimize(
    config: *const HdConfig,
    weather: *const HdWeather,
    out: *mut *mut HdPlan,
) -> HdStatus {
    guarded(|| {
        if config.is_null() || weather.is_null() || out.is_null() {
            set_error("null argument");
            return HdStatus::NullPointer;
        }
        let cfg = &(*config).0;
        let traj = &(*weather).0;
        let prices = match prices_for(cfg, traj.len()) {
            Ok(p) => p,
            Err(e) => return report(e),
        };
        match perfect_knowledge(traj, &prices, cfg) {
            Ok(plan) => {
                *out = Box::into_raw(Box::new(HdPlan(plan)));
                HdStatus::Ok
            }
            Err(e) => report(e),
        }
    })
}

/// Simulates a plan against weather; writes the discounted profit to
/// `out_profit`.
#[no_mangle]
pub unsafe extern "C" fn hd_simulate(
    config: *const HdConfig,
    plan: *const HdPlan,
    weather: *const HdWeather,
    out_profit: *mut f64,
) -> HdStatus {
    guarded(|| {
        if config.is_null() || plan.is_null() || weather.is_null() || out_profit.is_null() {
            set_error("null argument");
            return HdStatus::NullPointer;
        }
        let cfg = &(*config).0;
        let traj = &(*weather).0;
        let prices = match prices_for(cfg, traj.len()) {
            Ok(p) => p,
            Err(e) => return report(e),
        };
        match simulate(&(*plan).0, traj, &prices, cfg) {
            Ok(res) => {
                *out_profit = res.breakdown.profit;
                HdStatus::Ok
            }
            Err(e) => report(e),
        }
    })
}
