//! Run configuration: one JSON file covering plant, costs, losses, prices,
//! weather source, sampling, and solver settings, validated on load.
//!
//! Several physical parameters have no published value (piping loss,
//! parasitic coefficients, shutdown penalties, peak-window hours). Their
//! defaults are design decisions; [`RunConfig::annotated_echo`] tags each such
//! field with `"source": "default"` unless the loaded file overrode it.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{ClearSkyParams, CsvSchema, PeakWindow, SplitRule};
use crate::error::Error;
use crate::formulation::CostModel;
use crate::milp::SolverConfig;
use crate::plant::{reference_plant, LossModel, OpticalEfficiencyTable, PlantDesign};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PriceConfig {
    /// Daily peak windows as (start_hour, end_hour) pairs.
    pub peak_windows: Vec<PeakWindow>,
    pub peak_price: f64,
    pub offpeak_price: f64,
    pub currency_unit: String,
}

impl Default for PriceConfig {
    fn default() -> Self {
        Self {
            peak_windows: vec![(7.0, 9.0), (17.0, 21.0)],
            peak_price: 120.0,
            offpeak_price: 40.0,
            currency_unit: "AUD/MWh".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct WeatherConfig {
    /// Historical weather CSV; when absent, synthetic weather is generated.
    pub csv_path: Option<PathBuf>,
    pub schema: CsvSchema,
    pub synthetic: ClearSkyParams,
    pub synthetic_days: usize,
    pub synthetic_cloud_dropout: f64,
    pub partition: SplitRule,
}

impl Default for WeatherConfig {
    fn default() -> Self {
        Self {
            csv_path: None,
            schema: CsvSchema::default(),
            synthetic: ClearSkyParams::default(),
            synthetic_days: 40,
            synthetic_cloud_dropout: 0.15,
            partition: SplitRule::Explicit { sampling: vec![], testing: vec![] },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplingConfig {
    pub month: u32,
    pub n_s: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self { month: 1, n_s: 3 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub horizon_k: usize,
    pub dt_hours: f64,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub plant: PlantDesign,
    pub costs: CostModel,
    pub loss: LossModel,
    pub efficiency: OpticalEfficiencyTable,
    pub prices: PriceConfig,
    pub weather: WeatherConfig,
    pub sampling: SamplingConfig,
    pub solver: SolverConfig,
    /// Strict-inequality slack for the switch linearizations (MW / MWh).
    pub epsilon: f64,
    /// Receiver operating window as (sunrise_hour, sunset_hour); when absent
    /// the window is the union of positive-DNI steps across scenarios.
    pub daylight: Option<(f64, f64)>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            horizon_k: 96,
            dt_hours: 0.5,
            seed: 42,
            output_dir: PathBuf::from("runs"),
            plant: reference_plant(),
            costs: CostModel::default(),
            loss: LossModel::constant(8.0, 5.0),
            efficiency: OpticalEfficiencyTable::constant(0.6),
            prices: PriceConfig::default(),
            weather: WeatherConfig::default(),
            sampling: SamplingConfig::default(),
            solver: SolverConfig::default(),
            epsilon: 1e-3,
            daylight: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)?;
        let config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.horizon_k == 0 {
            return Err(Error::config("horizon_k must be positive"));
        }
        if !(self.dt_hours > 0.0 && self.dt_hours <= 24.0) {
            return Err(Error::config("dt_hours must lie in (0, 24]"));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::config("epsilon must be positive"));
        }
        self.plant.validate()?;
        self.costs.validate()?;
        self.efficiency.validate()?;
        self.solver.validate()?;
        if let Some((rise, set)) = self.daylight {
            if !(0.0 <= rise && rise < set && set <= 24.0) {
                return Err(Error::config("daylight window must satisfy 0 <= rise < set <= 24"));
            }
        }
        if !(1..=12).contains(&self.sampling.month) {
            return Err(Error::config("sampling.month outside 1..=12"));
        }
        // Startup accounting requires the startup energy to be a whole number
        // of steps at the startup draw, or the energy balance can never hit
        // the completion threshold exactly.
        for (label, energy, draw) in [
            ("receiver (e_r vs dt*q_ru)", self.plant.e_r, self.plant.q_ru),
            ("power block (e_c vs dt*q_c)", self.plant.e_c, self.plant.q_c),
        ] {
            if draw <= 0.0 {
                return Err(Error::config(format!("{label}: startup draw must be positive")));
            }
            let steps = energy / (self.dt_hours * draw);
            if (steps - steps.round()).abs() > 1e-9 || steps < 1.0 - 1e-9 {
                return Err(Error::config(format!(
                    "{label}: startup energy must be a whole number of steps \
                     (got {steps} steps of {} h)",
                    self.dt_hours
                )));
            }
        }
        Ok(())
    }

    /// Number of steps a receiver startup takes.
    pub fn receiver_startup_steps(&self) -> usize {
        (self.plant.e_r / (self.dt_hours * self.plant.q_ru)).round() as usize
    }

    /// Number of steps a power-block startup takes.
    pub fn pb_startup_steps(&self) -> usize {
        (self.plant.e_c / (self.dt_hours * self.plant.q_c)).round() as usize
    }

    /// Serializes the resolved config plus a `sources` block tagging every
    /// placeholder default that the loaded file did not override.
    pub fn annotated_echo(&self) -> serde_json::Value {
        let d = RunConfig::default();
        let tag = |same: bool| if same { "default" } else { "user" };
        let sources = serde_json::json!({
            "plant.q_pipe": tag(self.plant.q_pipe == d.plant.q_pipe),
            "plant.l_r": tag(self.plant.l_r == d.plant.l_r),
            "plant.l_c": tag(self.plant.l_c == d.plant.l_c),
            "plant.w_h": tag(self.plant.w_h == d.plant.w_h),
            "plant.e_hs": tag(self.plant.e_hs == d.plant.e_hs),
            "plant.eta_c": tag(self.plant.eta_c == d.plant.eta_c),
            "costs.alpha_r_sd": tag(self.costs.alpha_r_sd == d.costs.alpha_r_sd),
            "costs.alpha_c_sd": tag(self.costs.alpha_c_sd == d.costs.alpha_c_sd),
            "costs.lambda_discount": tag(self.costs.lambda_discount == d.costs.lambda_discount),
            "prices.peak_windows": tag(self.prices.peak_windows == d.prices.peak_windows),
            "prices.peak_price": tag(self.prices.peak_price == d.prices.peak_price),
            "prices.offpeak_price": tag(self.prices.offpeak_price == d.prices.offpeak_price),
            "loss": tag(serde_json::to_value(&self.loss).unwrap() == serde_json::to_value(&d.loss).unwrap()),
            "epsilon": tag(self.epsilon == d.epsilon),
        });
        serde_json::json!({ "config": self, "sources": sources })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn startup_divisibility_enforced() {
        let mut cfg = RunConfig::default();
        cfg.plant.e_r = 100.0; // not a multiple of 0.5 * 175
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("whole number of steps"), "{err}");
    }

    #[test]
    fn startup_step_counts() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.receiver_startup_steps(), 2); // 175 / (0.5 * 175)
        assert_eq!(cfg.pb_startup_steps(), 2); // 164.3 / (0.5 * 164.3)
    }

    #[test]
    fn echo_tags_defaults_and_overrides() {
        let mut cfg = RunConfig::default();
        cfg.plant.q_pipe = 5.0;
        let echo = cfg.annotated_echo();
        assert_eq!(echo["sources"]["plant.q_pipe"], "user");
        assert_eq!(echo["sources"]["plant.l_r"], "default");
        assert_eq!(echo["sources"]["costs.alpha_r_sd"], "default");
    }

    #[test]
    fn json_round_trip() {
        let cfg = RunConfig::default();
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        back.validate().unwrap();
        assert_eq!(back.horizon_k, cfg.horizon_k);
        assert_eq!(back.plant.q_rlim, cfg.plant.q_rlim);
    }

    #[test]
    fn partial_json_fills_defaults() {
        let cfg: RunConfig = serde_json::from_str(r#"{"horizon_k": 24, "seed": 7}"#).unwrap();
        assert_eq!(cfg.horizon_k, 24);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.dt_hours, 0.5);
        cfg.validate().unwrap();
    }
}
