//! Physical model of the CST plant: heliostat field power, receiver potential
//! power, dumping, net electrical output, and per-scenario potential-energy
//! aggregates used to score weather windows.

use chrono::{Datelike, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::error::Error;

/// All physical parameters of the heliostat field, receiver, power block and
/// storage. Powers in MW, energies in MWh, durations in hours.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlantDesign {
    /// Number of heliostats.
    pub n_helio: f64,
    /// Reflective area per heliostat (m²).
    pub a_helio: f64,
    /// Mirror reflectance and soiling coefficient.
    pub reflectance_rho: f64,
    /// Heliostat availability in [0, 1].
    pub availability_c: f64,
    /// Constant piping loss (MW_t).
    pub q_pipe: f64,
    /// Receiver startup thermal draw per step (MW_t).
    pub q_ru: f64,
    /// Receiver startup energy threshold (MWh_t).
    pub e_r: f64,
    /// Receiver minimum generation (MW_t).
    pub q_rl: f64,
    /// Receiver maximum generation (MW_t).
    pub q_rlim: f64,
    /// Receiver shutdown thermal draw (MW_t).
    pub q_rsd: f64,
    /// Power-block startup thermal draw per step (MW_t).
    pub q_c: f64,
    /// Power-block startup energy threshold (MWh_t).
    pub e_c: f64,
    /// Power-block minimum thermal input (MW_t).
    pub q_l: f64,
    /// Power-block maximum thermal input (MW_t).
    pub q_u: f64,
    /// Power-block minimum electrical output (MW_e).
    pub w_l: f64,
    /// Power-block maximum electrical output (MW_e).
    pub w_u: f64,
    /// Slope of the linear power-block performance curve (MW_e/MW_t).
    pub eta_p: f64,
    /// Storage capacity (MWh_t).
    pub e_u: f64,
    /// Minimum state of charge (fraction of capacity).
    pub soc_min: f64,
    /// Receiver pump parasitic (MW_e per MW_t).
    pub l_r: f64,
    /// Power-block pump parasitic (MW_e per MW_t).
    pub l_c: f64,
    /// Heliostat tracking parasitic while the receiver generates (MW_e).
    pub w_h: f64,
    /// Field startup/shutdown electrical parasitic (MWh_e).
    pub e_hs: f64,
    /// Condenser parasitic fraction on gross generation.
    pub eta_c: f64,
}

impl PlantDesign {
    pub fn validate(&self) -> Result<(), Error> {
        let nonneg = [
            ("n_helio", self.n_helio),
            ("a_helio", self.a_helio),
            ("reflectance_rho", self.reflectance_rho),
            ("q_pipe", self.q_pipe),
            ("q_ru", self.q_ru),
            ("e_r", self.e_r),
            ("q_rsd", self.q_rsd),
            ("q_c", self.q_c),
            ("e_c", self.e_c),
            ("l_r", self.l_r),
            ("l_c", self.l_c),
            ("w_h", self.w_h),
            ("e_hs", self.e_hs),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0) {
                return Err(Error::config(format!("plant.{name} must be non-negative, got {v}")));
            }
        }
        if !(self.availability_c >= 0.0 && self.availability_c <= 1.0) {
            return Err(Error::config("plant.availability_c must lie in [0, 1]"));
        }
        if !(self.eta_c >= 0.0 && self.eta_c <= 1.0) {
            return Err(Error::config("plant.eta_c must lie in [0, 1]"));
        }
        if !(self.q_rl > 0.0 && self.q_rl <= self.q_rlim) {
            return Err(Error::config("plant must satisfy 0 < q_rl <= q_rlim"));
        }
        if !(self.q_l > 0.0 && self.q_l <= self.q_u) {
            return Err(Error::config("plant must satisfy 0 < q_l <= q_u"));
        }
        if !(self.w_l > 0.0 && self.w_l <= self.w_u) {
            return Err(Error::config("plant must satisfy 0 < w_l <= w_u"));
        }
        if !(self.e_u > 0.0) {
            return Err(Error::config("plant.e_u must be positive"));
        }
        if !(self.soc_min >= 0.0 && self.soc_min < 1.0) {
            return Err(Error::config("plant.soc_min must lie in [0, 1)"));
        }
        // Keeps the part-load intercept of the electricity map non-negative.
        if self.eta_p * self.q_u > self.w_u + 1e-9 {
            return Err(Error::config("plant must satisfy eta_p * q_u <= w_u"));
        }
        Ok(())
    }
}

/// One weather observation: DNI in kW/m², ambient temperature in °C, wind in m/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeatherSample {
    pub dni: f64,
    pub t_amb: f64,
    pub wind: f64,
}

impl WeatherSample {
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.dni >= 0.0) {
            return Err(Error::config(format!("weather sample has negative dni {}", self.dni)));
        }
        if !(self.wind >= 0.0) {
            return Err(Error::config(format!("weather sample has negative wind {}", self.wind)));
        }
        Ok(())
    }
}

/// A uniformly spaced weather time series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeatherTrajectory {
    pub start_timestamp: NaiveDateTime,
    pub dt_hours: f64,
    pub samples: Vec<WeatherSample>,
}

impl WeatherTrajectory {
    pub fn new(
        start_timestamp: NaiveDateTime,
        dt_hours: f64,
        samples: Vec<WeatherSample>,
    ) -> Result<Self, Error> {
        if !(dt_hours > 0.0) {
            return Err(Error::config("trajectory dt_hours must be positive"));
        }
        if samples.is_empty() {
            return Err(Error::config("trajectory must contain at least one sample"));
        }
        for s in &samples {
            s.validate()?;
        }
        Ok(Self { start_timestamp, dt_hours, samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Calendar month (1-12) and fractional hour of day of step `k`.
    pub fn step_time(&self, k: usize) -> (u32, f64) {
        let secs = (k as f64 * self.dt_hours * 3600.0).round() as i64;
        let t = self.start_timestamp + chrono::Duration::seconds(secs);
        let hour = t.time().num_seconds_from_midnight() as f64 / 3600.0;
        (t.date().month(), hour)
    }

    /// Concatenates `self` followed by `other`; steps must match.
    pub fn concat(&self, other: &WeatherTrajectory) -> Result<WeatherTrajectory, Error> {
        if (self.dt_hours - other.dt_hours).abs() > 1e-12 {
            return Err(Error::config("cannot concatenate trajectories with different steps"));
        }
        let mut samples = self.samples.clone();
        samples.extend_from_slice(&other.samples);
        WeatherTrajectory::new(self.start_timestamp, self.dt_hours, samples)
    }
}

/// Receiver thermal-loss model: a polynomial in ambient temperature for the
/// radiative part and a polynomial plus wind terms for the convective part.
/// Evaluated losses are clamped at zero.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LossModel {
    /// Radiative loss polynomial coefficients over t_amb (MW_t), constant first.
    pub rad_coeffs: Vec<f64>,
    /// Convective loss polynomial coefficients over t_amb (MW_t), constant first.
    pub conv_coeffs: Vec<f64>,
    /// Linear wind term (MW_t per m/s).
    #[serde(default)]
    pub conv_wind: f64,
    /// Bilinear t_amb × wind term (MW_t per °C·m/s).
    #[serde(default)]
    pub conv_cross: f64,
}

impl LossModel {
    /// Constant radiative and convective losses.
    pub fn constant(rad: f64, conv: f64) -> Self {
        Self { rad_coeffs: vec![rad], conv_coeffs: vec![conv], conv_wind: 0.0, conv_cross: 0.0 }
    }

    pub fn zero() -> Self {
        Self::constant(0.0, 0.0)
    }

    pub fn radiative(&self, t_amb: f64) -> f64 {
        poly_eval(&self.rad_coeffs, t_amb).max(0.0)
    }

    pub fn convective(&self, t_amb: f64, wind: f64) -> f64 {
        (poly_eval(&self.conv_coeffs, t_amb) + self.conv_wind * wind + self.conv_cross * t_amb * wind)
            .max(0.0)
    }
}

fn poly_eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Average optical efficiency as a lookup over (month, step of day), with a
/// constant fallback when no table is configured.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OpticalEfficiencyTable {
    Constant(f64),
    /// One entry per month (1-12); each holds one efficiency per step of day.
    Monthly { months: std::collections::BTreeMap<u32, Vec<f64>> },
}

impl OpticalEfficiencyTable {
    pub fn constant(eta: f64) -> Self {
        OpticalEfficiencyTable::Constant(eta)
    }

    pub fn validate(&self) -> Result<(), Error> {
        match self {
            OpticalEfficiencyTable::Constant(eta) => {
                if !(*eta >= 0.0 && *eta <= 1.0) {
                    return Err(Error::config(format!("optical efficiency {eta} outside [0, 1]")));
                }
            }
            OpticalEfficiencyTable::Monthly { months } => {
                for (m, row) in months {
                    if !(1..=12).contains(m) {
                        return Err(Error::config(format!("efficiency table month {m} invalid")));
                    }
                    for eta in row {
                        if !(*eta >= 0.0 && *eta <= 1.0) {
                            return Err(Error::config(format!(
                                "efficiency table entry {eta} outside [0, 1]"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Efficiency at a given month and fractional hour of day for step `dt_hours`.
    pub fn lookup(&self, month: u32, hour_of_day: f64, dt_hours: f64) -> Result<f64, Error> {
        match self {
            OpticalEfficiencyTable::Constant(eta) => Ok(*eta),
            OpticalEfficiencyTable::Monthly { months } => {
                let row = months.get(&month).ok_or_else(|| {
                    Error::config(format!("efficiency table has no entry for month {month}"))
                })?;
                let idx = (hour_of_day / dt_hours).round() as usize;
                row.get(idx).copied().ok_or_else(|| {
                    Error::config(format!(
                        "efficiency table for month {month} has no step {idx} (hour {hour_of_day})"
                    ))
                })
            }
        }
    }
}

/// Thermal power collected by the heliostat field (MW_t).
pub fn heliostat_field_power(design: &PlantDesign, sample: &WeatherSample, eta_opt: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&eta_opt));
    // kW/m² × m² yields kW; report MW.
    design.n_helio
        * design.a_helio
        * design.reflectance_rho
        * design.availability_c
        * eta_opt
        * sample.dni
        / 1000.0
}

/// Potential thermal power at the receiver after radiative, convective and
/// piping losses (MW_t), clamped at zero.
pub fn receiver_potential_power(
    q_helio: f64,
    sample: &WeatherSample,
    design: &PlantDesign,
    loss: &LossModel,
) -> f64 {
    debug_assert!(q_helio >= 0.0);
    (q_helio - loss.radiative(sample.t_amb) - loss.convective(sample.t_amb, sample.wind)
        - design.q_pipe)
        .max(0.0)
}

/// Thermal power dumped to ambient after startup/shutdown draws and the
/// actual charge are taken out of the potential power (MW_t).
pub fn dumped_power(
    q_p: f64,
    in_startup: bool,
    in_shutdown: bool,
    q_ract: f64,
    design: &PlantDesign,
) -> f64 {
    debug_assert!(q_p >= 0.0 && q_ract >= 0.0);
    debug_assert!(!(in_startup && in_shutdown));
    let startup = if in_startup { design.q_ru } else { 0.0 };
    let shutdown = if in_shutdown { design.q_rsd } else { 0.0 };
    (q_p - startup - shutdown - q_ract).max(0.0)
}

/// Net plant output (MW_e, signed): gross generation less condenser parasitic
/// and grid purchases.
pub fn net_output(w_gross: f64, eta_c: f64, w_purchased: f64) -> f64 {
    debug_assert!(w_gross >= 0.0 && w_purchased >= 0.0);
    debug_assert!((0.0..=1.0).contains(&eta_c));
    w_gross * (1.0 - eta_c) - w_purchased
}

/// Maximum solar energy collectable over a trajectory less aggregate losses
/// (MWh_t), clamped at zero.
pub fn scenario_potential_energy(
    traj: &WeatherTrajectory,
    design: &PlantDesign,
    loss: &LossModel,
    eff: &OpticalEfficiencyTable,
) -> Result<f64, Error> {
    let dt = traj.dt_hours;
    let mut e_helio = 0.0;
    let mut e_rad = 0.0;
    let mut e_conv = 0.0;
    for (k, sample) in traj.samples.iter().enumerate() {
        let (month, hour) = traj.step_time(k);
        let eta = eff.lookup(month, hour, dt)?;
        e_helio += dt * heliostat_field_power(design, sample, eta);
        e_rad += dt * loss.radiative(sample.t_amb);
        e_conv += dt * loss.convective(sample.t_amb, sample.wind);
    }
    Ok((e_helio - e_rad - e_conv).max(0.0))
}

/// Per-step potential receiver power for a whole trajectory (MW_t each step).
pub fn potential_power_series(
    traj: &WeatherTrajectory,
    design: &PlantDesign,
    loss: &LossModel,
    eff: &OpticalEfficiencyTable,
) -> Result<Vec<f64>, Error> {
    traj.samples
        .iter()
        .enumerate()
        .map(|(k, sample)| {
            let (month, hour) = traj.step_time(k);
            let eta = eff.lookup(month, hour, traj.dt_hours)?;
            let q_helio = heliostat_field_power(design, sample, eta);
            Ok(receiver_potential_power(q_helio, sample, design, loss))
        })
        .collect()
}

/// The hypothetical 115 MW_e / 700 MW_t plant used as the default configuration.
///
/// Parasitic coefficients and the piping loss are placeholder defaults; the
/// published design tables do not specify them.
pub fn reference_plant() -> PlantDesign {
    let q_u = 329.0;
    let w_u = 115.0;
    PlantDesign {
        n_helio: 11547.0,
        a_helio: 11.3 * 10.4,
        reflectance_rho: 0.95,
        availability_c: 1.0,
        q_pipe: 2.0,
        q_ru: 175.0,
        e_r: 175.0,
        q_rl: 175.0,
        q_rlim: 700.0,
        q_rsd: 0.25 * 175.0,
        q_c: 164.3,
        e_c: 164.3,
        q_l: 65.7,
        q_u,
        w_l: 23.0,
        w_u,
        eta_p: w_u / q_u,
        e_u: 10.0 * q_u,
        soc_min: 0.10,
        l_r: 0.01,
        l_c: 0.01,
        w_h: 0.5,
        e_hs: 0.2,
        eta_c: 0.03,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use chrono::NaiveDate;

    fn sample(dni: f64) -> WeatherSample {
        WeatherSample { dni, t_amb: 25.0, wind: 3.0 }
    }

    fn start() -> NaiveDateTime {
        NaiveDate::from_ymd_opt(2020, 1, 15).unwrap().and_hms_opt(0, 0, 0).unwrap()
    }

    #[test]
    fn field_power_matches_reference_design() {
        let mut design = reference_plant();
        design.a_helio = 117.52;
        let p = heliostat_field_power(&design, &sample(0.95), 0.6);
        assert_relative_eq!(p, 734.82, max_relative = 1e-4);
        // Consistent with a 700 MW_t receiver design.
        assert!(p > 700.0 && p < 770.0);
    }

    #[test]
    fn field_power_zero_cases() {
        let design = reference_plant();
        assert_eq!(heliostat_field_power(&design, &sample(0.0), 0.6), 0.0);
        let mut off = design.clone();
        off.availability_c = 0.0;
        assert_eq!(heliostat_field_power(&off, &sample(0.95), 0.6), 0.0);
    }

    #[test]
    fn field_power_monotone_in_dni() {
        let design = reference_plant();
        let mut last = -1.0;
        for i in 0..20 {
            let p = heliostat_field_power(&design, &sample(i as f64 * 0.05), 0.6);
            assert!(p >= last);
            last = p;
        }
    }

    #[test]
    fn receiver_potential_power_subtracts_losses() {
        let mut design = reference_plant();
        design.q_pipe = 10.0;
        let loss = LossModel::constant(20.0, 15.0);
        let q = receiver_potential_power(700.0, &sample(1.0), &design, &loss);
        assert_relative_eq!(q, 655.0);
    }

    #[test]
    fn receiver_potential_power_clamps_at_zero() {
        let mut design = reference_plant();
        design.q_pipe = 0.0;
        let loss = LossModel::constant(30.0, 20.0);
        assert_eq!(receiver_potential_power(30.0, &sample(1.0), &design, &loss), 0.0);
        // Identity with no losses.
        let q = receiver_potential_power(123.4, &sample(1.0), &design, &LossModel::zero());
        assert_relative_eq!(q, 123.4);
    }

    #[test]
    fn dumped_power_cases() {
        let design = reference_plant();
        assert_relative_eq!(dumped_power(500.0, false, false, 400.0, &design), 100.0);
        assert_eq!(dumped_power(0.0, false, false, 0.0, &design), 0.0);
        assert_eq!(dumped_power(100.0, true, false, 0.0, &design), 0.0);
    }

    #[test]
    fn net_output_cases() {
        assert_relative_eq!(net_output(100.0, 0.05, 3.0), 92.0);
        assert_eq!(net_output(0.0, 0.05, 0.0), 0.0);
        assert_relative_eq!(net_output(0.0, 0.05, 5.0), -5.0);
    }

    #[test]
    fn scenario_energy_zero_dni() {
        let design = reference_plant();
        let traj = WeatherTrajectory::new(start(), 0.5, vec![sample(0.0); 48]).unwrap();
        let e = scenario_potential_energy(&traj, &design, &LossModel::zero(), &OpticalEfficiencyTable::constant(0.6))
            .unwrap();
        assert_eq!(e, 0.0);
    }

    #[test]
    fn scenario_energy_matches_hand_sum() {
        let mut design = reference_plant();
        design.a_helio = 117.52;
        let traj = WeatherTrajectory::new(start(), 0.5, vec![sample(1.0); 2]).unwrap();
        let e = scenario_potential_energy(&traj, &design, &LossModel::zero(), &OpticalEfficiencyTable::constant(0.6))
            .unwrap();
        assert_relative_eq!(e, 773.49, max_relative = 1e-4);
    }

    #[test]
    fn scenario_energy_clamps_when_losses_dominate() {
        let design = reference_plant();
        let traj = WeatherTrajectory::new(start(), 0.5, vec![sample(0.001); 4]).unwrap();
        let loss = LossModel::constant(500.0, 500.0);
        let e = scenario_potential_energy(&traj, &design, &loss, &OpticalEfficiencyTable::constant(0.6))
            .unwrap();
        assert_eq!(e, 0.0);
    }

    #[test]
    fn scenario_energy_equals_dt_weighted_field_power_without_losses() {
        let design = reference_plant();
        let samples: Vec<_> = (0..10).map(|i| sample(0.1 * i as f64)).collect();
        let traj = WeatherTrajectory::new(start(), 0.5, samples).unwrap();
        let eff = OpticalEfficiencyTable::constant(0.55);
        let by_hand: f64 = traj
            .samples
            .iter()
            .map(|s| 0.5 * heliostat_field_power(&design, s, 0.55))
            .sum();
        let e = scenario_potential_energy(&traj, &design, &LossModel::zero(), &eff).unwrap();
        assert_eq!(e, by_hand);
    }

    #[test]
    fn efficiency_table_missing_month_is_config_error() {
        let mut months = std::collections::BTreeMap::new();
        months.insert(1u32, vec![0.5; 48]);
        let eff = OpticalEfficiencyTable::Monthly { months };
        let design = reference_plant();
        let july = NaiveDate::from_ymd_opt(2020, 7, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
        let traj = WeatherTrajectory::new(july, 0.5, vec![sample(0.5); 4]).unwrap();
        assert!(scenario_potential_energy(&traj, &design, &LossModel::zero(), &eff).is_err());
    }

    #[test]
    fn reference_plant_is_valid() {
        reference_plant().validate().unwrap();
    }
}
