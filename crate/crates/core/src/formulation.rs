//! Translation of plant, costs, prices and a scenario space into the
//! stochastic MILP (and its single-scenario deterministic specialization),
//! plus solution extraction and an independent constraint auditor.
//!
//! The program couples one scenario-independent dispatch plan (ŷ, q̂ per step)
//! to per-scenario control trajectories (mode binaries δ, switches z, and the
//! continuous operation variables) through big-M linearizations of the
//! plant's case rules. Switch conventions, shared with the simulator:
//!
//! * z1 = [potential power < receiver minimum]
//! * z2 = [receiver startup energy complete]       (boundary counts as done)
//! * z3 = [available power ≤ receiver minimum]     (equality blocks generation)
//! * z4 = [available generation power ≤ receiver minimum]
//! * z5 = [planned charge ≥ available generation power]
//! * z6 = [power-block startup energy complete]
//! * z7 = [storage cannot fund a power-block startup step]
//!
//! Each strict side carries the configured epsilon slack; inputs inside an
//! open (boundary, boundary + epsilon) band make the switch undecidable and
//! the model infeasible, so fixtures keep clear of those bands.

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::data::PriceProfile;
use crate::error::Error;
use crate::milp::{big_m_for, MilpModel, ObjSense, RowSense, Solution, VarKind};
use crate::plant::{potential_power_series, PlantDesign, WeatherTrajectory};
use crate::sampling::{Scenario, ScenarioSpace};

/// Operation and degradation costs. Monetary units follow the price config.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct CostModel {
    /// Receiver generation cost (per MWh_t).
    pub c_rec: f64,
    /// Power-block generation cost (per MWh_e gross).
    pub c_c: f64,
    /// Receiver cold-start cost (per start).
    pub c_rsup: f64,
    /// Power-block cold-start cost (per start).
    pub c_csup: f64,
    /// Ramping cost (per MW_e of output change).
    pub c_dw: f64,
    /// Receiver shutdown penalty (per shutdown).
    pub alpha_r_sd: f64,
    /// Power-block shutdown penalty (per shutdown).
    pub alpha_c_sd: f64,
    /// Per-step discount factor in (0, 1]; step k is weighted lambda^k.
    pub lambda_discount: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            c_rec: 3.7,
            c_c: 1.7,
            c_rsup: 7000.0,
            c_csup: 5451.0,
            c_dw: 0.59,
            alpha_r_sd: 7000.0,
            alpha_c_sd: 5451.0,
            lambda_discount: 1.0,
        }
    }
}

impl CostModel {
    pub fn validate(&self) -> Result<(), Error> {
        for (name, v) in [
            ("c_rec", self.c_rec),
            ("c_c", self.c_c),
            ("c_rsup", self.c_rsup),
            ("c_csup", self.c_csup),
            ("c_dw", self.c_dw),
            ("alpha_r_sd", self.alpha_r_sd),
            ("alpha_c_sd", self.alpha_c_sd),
        ] {
            if !(v >= 0.0) {
                return Err(Error::config(format!("costs.{name} must be non-negative")));
            }
        }
        if !(self.lambda_discount > 0.0 && self.lambda_discount <= 1.0) {
            return Err(Error::config("costs.lambda_discount must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// The scenario-independent dispatch plan: commitment and startup/shutdown
/// indicators plus planned charge/discharge per step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispatchPlan {
    pub horizon_k: usize,
    pub y_r: Vec<u8>,
    pub y_rsup: Vec<u8>,
    pub y_rsd: Vec<u8>,
    pub y_c: Vec<u8>,
    pub y_csup: Vec<u8>,
    pub y_csd: Vec<u8>,
    /// Planned receiver charge (MW_t).
    pub q_r_hat: Vec<f64>,
    /// Planned power-block thermal draw (MW_t).
    pub q_c_hat: Vec<f64>,
}

impl DispatchPlan {
    pub fn all_off(horizon_k: usize) -> Self {
        Self {
            horizon_k,
            y_r: vec![0; horizon_k],
            y_rsup: vec![0; horizon_k],
            y_rsd: vec![0; horizon_k],
            y_c: vec![0; horizon_k],
            y_csup: vec![0; horizon_k],
            y_csd: vec![0; horizon_k],
            q_r_hat: vec![0.0; horizon_k],
            q_c_hat: vec![0.0; horizon_k],
        }
    }

    /// Builds a plan from commitment vectors, deriving the canonical
    /// startup/shutdown edge indicators and clamping planned charges into
    /// their envelopes.
    pub fn from_commitment(
        plant: &PlantDesign,
        y_r: &[u8],
        y_c: &[u8],
        q_r_hat: &[f64],
        q_c_hat: &[f64],
    ) -> Result<Self, Error> {
        let k_len = y_r.len();
        if [y_c.len(), q_r_hat.len(), q_c_hat.len()].iter().any(|&l| l != k_len) {
            return Err(Error::config("plan vectors must share one length"));
        }
        let edge_up = |v: &[u8], k: usize| {
            let prev = if k == 0 { 0 } else { v[k - 1] };
            u8::from(v[k] == 1 && prev == 0)
        };
        let mut plan = DispatchPlan::all_off(k_len);
        plan.y_r = y_r.to_vec();
        plan.y_c = y_c.to_vec();
        for k in 0..k_len {
            plan.y_rsup[k] = edge_up(y_r, k);
            plan.y_csup[k] = edge_up(y_c, k);
            // Receiver shutdown is flagged on the last on-step, power-block
            // shutdown on the first off-step.
            if k + 1 < k_len && y_r[k] == 1 && y_r[k + 1] == 0 {
                plan.y_rsd[k] = 1;
            }
            if k > 0 && y_c[k - 1] == 1 && y_c[k] == 0 {
                plan.y_csd[k] = 1;
            }
            plan.q_r_hat[k] = if y_r[k] == 1 && plan.y_rsup[k] == 0 {
                q_r_hat[k].clamp(plant.q_rl, plant.q_rlim)
            } else {
                0.0
            };
            plan.q_c_hat[k] = if plan.y_csup[k] == 1 {
                plant.q_c
            } else if y_c[k] == 1 {
                q_c_hat[k].clamp(plant.q_l, plant.q_u)
            } else {
                0.0
            };
        }
        plan.validate(plant)?;
        Ok(plan)
    }

    /// Draws a random but logically consistent plan: a handful of receiver
    /// and power-block commitment blocks with planned charges sampled inside
    /// their envelopes. Useful for stress-testing the simulator against
    /// plans no optimizer would propose.
    pub fn random<R: rand::Rng>(plant: &PlantDesign, horizon_k: usize, rng: &mut R) -> Self {
        let mut y_r = vec![0u8; horizon_k];
        let mut y_c = vec![0u8; horizon_k];
        for y in [&mut y_r, &mut y_c] {
            for _ in 0..rng.gen_range(0..=3) {
                let start = rng.gen_range(0..horizon_k);
                let len = rng.gen_range(1..=horizon_k.min(12));
                for k in start..horizon_k.min(start + len) {
                    y[k] = 1;
                }
            }
        }
        let q_r_hat: Vec<f64> =
            (0..horizon_k).map(|_| rng.gen_range(plant.q_rl..=plant.q_rlim)).collect();
        let q_c_hat: Vec<f64> =
            (0..horizon_k).map(|_| rng.gen_range(plant.q_l..=plant.q_u)).collect();
        Self::from_commitment(plant, &y_r, &y_c, &q_r_hat, &q_c_hat)
            .expect("commitment-derived plans are always consistent")
    }

    /// Checks the logical-plan constraints and the planned-charge envelopes.
    pub fn validate(&self, plant: &PlantDesign) -> Result<(), Error> {
        let k_len = self.horizon_k;
        for (name, v) in [
            ("y_r", &self.y_r),
            ("y_rsup", &self.y_rsup),
            ("y_rsd", &self.y_rsd),
            ("y_c", &self.y_c),
            ("y_csup", &self.y_csup),
            ("y_csd", &self.y_csd),
        ] {
            if v.len() != k_len {
                return Err(Error::config(format!("plan field {name} length != horizon")));
            }
            if v.iter().any(|&b| b > 1) {
                return Err(Error::config(format!("plan field {name} not binary")));
            }
        }
        if self.q_r_hat.len() != k_len || self.q_c_hat.len() != k_len {
            return Err(Error::config("plan charge vectors length != horizon"));
        }
        let tol = 1e-6;
        for k in 0..k_len {
            let yr_prev = if k == 0 { 0 } else { self.y_r[k - 1] };
            let yc_prev = if k == 0 { 0 } else { self.y_c[k - 1] };
            if self.y_rsup[k] < self.y_r[k].saturating_sub(yr_prev) {
                return Err(Error::config(format!("k={k}: y_rsup misses a receiver start")));
            }
            if self.y_rsup[k] + yr_prev > 1 {
                return Err(Error::config(format!("k={k}: y_rsup while already committed")));
            }
            if k > 0 {
                if self.y_rsd[k - 1] < self.y_r[k - 1].saturating_sub(self.y_r[k]) {
                    return Err(Error::config(format!("k={k}: y_rsd misses a receiver stop")));
                }
                if self.y_rsd[k - 1] + self.y_r[k] > 1 {
                    return Err(Error::config(format!("k={k}: y_rsd contradicts commitment")));
                }
            }
            if self.y_csup[k] < self.y_c[k].saturating_sub(yc_prev) {
                return Err(Error::config(format!("k={k}: y_csup misses a power-block start")));
            }
            if self.y_csd[k] < yc_prev.saturating_sub(self.y_c[k]) {
                return Err(Error::config(format!("k={k}: y_csd misses a power-block stop")));
            }
            if self.y_csd[k] + self.y_c[k] > 1 {
                return Err(Error::config(format!("k={k}: y_csd contradicts commitment")));
            }
            if self.y_csd[k] > yc_prev {
                return Err(Error::config(format!("k={k}: y_csd without prior commitment")));
            }
            // Planned-charge envelopes.
            let gate_r = f64::from(self.y_r[k]) - f64::from(self.y_rsup[k]);
            let (lo_r, hi_r) = (plant.q_rl * gate_r, plant.q_rlim * gate_r);
            if self.q_r_hat[k] < lo_r - tol || self.q_r_hat[k] > hi_r + tol {
                return Err(Error::config(format!(
                    "k={k}: q_r_hat {} outside [{lo_r}, {hi_r}]",
                    self.q_r_hat[k]
                )));
            }
            let gate_c = f64::from(self.y_c[k]) - f64::from(self.y_csup[k]);
            let sup_c = f64::from(self.y_csup[k]);
            let (lo_c, hi_c) =
                (plant.q_l * gate_c + plant.q_c * sup_c, plant.q_u * gate_c + plant.q_c * sup_c);
            if self.q_c_hat[k] < lo_c - tol || self.q_c_hat[k] > hi_c + tol {
                return Err(Error::config(format!(
                    "k={k}: q_c_hat {} outside [{lo_c}, {hi_c}]",
                    self.q_c_hat[k]
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanSym {
    Yr,
    Yrsup,
    Yrsd,
    Yc,
    Ycsup,
    Ycsd,
    QrHat,
    QcHat,
}

impl PlanSym {
    pub const ALL: [PlanSym; 8] = [
        PlanSym::Yr,
        PlanSym::Yrsup,
        PlanSym::Yrsd,
        PlanSym::Yc,
        PlanSym::Ycsup,
        PlanSym::Ycsd,
        PlanSym::QrHat,
        PlanSym::QcHat,
    ];

    fn stem(&self) -> &'static str {
        match self {
            PlanSym::Yr => "yr",
            PlanSym::Yrsup => "yrsup",
            PlanSym::Yrsd => "yrsd",
            PlanSym::Yc => "yc",
            PlanSym::Ycsup => "ycsup",
            PlanSym::Ycsd => "ycsd",
            PlanSym::QrHat => "qrhat",
            PlanSym::QcHat => "qchat",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CtrlSym {
    Drsup,
    Drsu,
    Dr,
    Drsd,
    Dcsup,
    Dcsu,
    Dc,
    Dcsd,
    Z1,
    Z2,
    Z3,
    Z4,
    Z5,
    Z6,
    Z7,
    Qract,
    Qcact,
    Ersu,
    Ecsu,
    PhiR,
    PhiC,
    W,
    Wd,
    Ws,
    Wp,
    Stor,
    Phi,
    Qavail,
    QavailGen,
}

impl CtrlSym {
    pub const ALL: [CtrlSym; 29] = [
        CtrlSym::Drsup,
        CtrlSym::Drsu,
        CtrlSym::Dr,
        CtrlSym::Drsd,
        CtrlSym::Dcsup,
        CtrlSym::Dcsu,
        CtrlSym::Dc,
        CtrlSym::Dcsd,
        CtrlSym::Z1,
        CtrlSym::Z2,
        CtrlSym::Z3,
        CtrlSym::Z4,
        CtrlSym::Z5,
        CtrlSym::Z6,
        CtrlSym::Z7,
        CtrlSym::Qract,
        CtrlSym::Qcact,
        CtrlSym::Ersu,
        CtrlSym::Ecsu,
        CtrlSym::PhiR,
        CtrlSym::PhiC,
        CtrlSym::W,
        CtrlSym::Wd,
        CtrlSym::Ws,
        CtrlSym::Wp,
        CtrlSym::Stor,
        CtrlSym::Phi,
        CtrlSym::Qavail,
        CtrlSym::QavailGen,
    ];

    fn stem(&self) -> &'static str {
        match self {
            CtrlSym::Drsup => "drsup",
            CtrlSym::Drsu => "drsu",
            CtrlSym::Dr => "dr",
            CtrlSym::Drsd => "drsd",
            CtrlSym::Dcsup => "dcsup",
            CtrlSym::Dcsu => "dcsu",
            CtrlSym::Dc => "dc",
            CtrlSym::Dcsd => "dcsd",
            CtrlSym::Z1 => "z1",
            CtrlSym::Z2 => "z2",
            CtrlSym::Z3 => "z3",
            CtrlSym::Z4 => "z4",
            CtrlSym::Z5 => "z5",
            CtrlSym::Z6 => "z6",
            CtrlSym::Z7 => "z7",
            CtrlSym::Qract => "qract",
            CtrlSym::Qcact => "qcact",
            CtrlSym::Ersu => "ersu",
            CtrlSym::Ecsu => "ecsu",
            CtrlSym::PhiR => "phir",
            CtrlSym::PhiC => "phic",
            CtrlSym::W => "w",
            CtrlSym::Wd => "wd",
            CtrlSym::Ws => "ws",
            CtrlSym::Wp => "wp",
            CtrlSym::Stor => "stor",
            CtrlSym::Phi => "phi",
            CtrlSym::Qavail => "qavail",
            CtrlSym::QavailGen => "qavailgen",
        }
    }

    pub fn is_binary(&self) -> bool {
        matches!(
            self,
            CtrlSym::Drsup
                | CtrlSym::Drsu
                | CtrlSym::Dr
                | CtrlSym::Drsd
                | CtrlSym::Dcsup
                | CtrlSym::Dcsu
                | CtrlSym::Dc
                | CtrlSym::Dcsd
                | CtrlSym::Z1
                | CtrlSym::Z2
                | CtrlSym::Z3
                | CtrlSym::Z4
                | CtrlSym::Z5
                | CtrlSym::Z6
                | CtrlSym::Z7
        )
    }
}

/// Total lookup from formulation symbols to MILP variable names.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SmilpIndexMap {
    pub horizon_k: usize,
    pub n_s: usize,
}

impl SmilpIndexMap {
    pub fn plan(&self, sym: PlanSym, k: usize) -> String {
        debug_assert!(k < self.horizon_k);
        format!("{}_k{k}", sym.stem())
    }

    pub fn ctrl(&self, sym: CtrlSym, k: usize, s: usize) -> String {
        debug_assert!(k < self.horizon_k && s < self.n_s);
        format!("{}_k{k}_s{s}", sym.stem())
    }

    /// Full enumeration for audit tooling; confirms no plan symbol is
    /// scenario-indexed.
    pub fn to_json(&self) -> serde_json::Value {
        let mut plan = serde_json::Map::new();
        for sym in PlanSym::ALL {
            for k in 0..self.horizon_k {
                plan.insert(format!("{}[{k}]", sym.stem()), self.plan(sym, k).into());
            }
        }
        let mut ctrl = serde_json::Map::new();
        for sym in CtrlSym::ALL {
            for s in 0..self.n_s {
                for k in 0..self.horizon_k {
                    ctrl.insert(format!("{}[{k},{s}]", sym.stem()), self.ctrl(sym, k, s).into());
                }
            }
        }
        serde_json::json!({
            "horizon_k": self.horizon_k,
            "n_s": self.n_s,
            "plan": plan,
            "control": ctrl,
        })
    }
}

// ---------------------------------------------------------------------------
// Case functions (the plant rules the big-M rows linearize)
// ---------------------------------------------------------------------------

/// Receiver startup trigger: commitment, enough potential power, startup not
/// already complete, not already generating.
pub fn case_delta_rsu(y_r: bool, z1: bool, z2_prev: bool, dr_prev: bool) -> bool {
    y_r && !z1 && !z2_prev && !dr_prev
}

/// Receiver generation gate: commitment, startup complete or already
/// generating, and enough available power.
pub fn case_delta_r(y_r: bool, z2: bool, dr_prev: bool, z3: bool) -> bool {
    y_r && (z2 || dr_prev) && !z3
}

/// Actual receiver charge: track the plan when it fits, fall back to the
/// available generation power while above the minimum, else zero.
pub fn case_q_ract(q_r_hat: f64, q_avail_gen: f64, q_rl: f64) -> f64 {
    if q_r_hat < q_avail_gen {
        q_r_hat
    } else if q_avail_gen > q_rl {
        q_avail_gen
    } else {
        0.0
    }
}

/// Power-block startup trigger: commitment, not generating, startup not
/// already complete, enough stored energy.
pub fn case_delta_csu(y_c: bool, dc_prev: bool, z6_prev: bool, z7: bool) -> bool {
    y_c && !dc_prev && !z6_prev && !z7
}

// ---------------------------------------------------------------------------
// Model construction
// ---------------------------------------------------------------------------

struct BigM {
    /// Receiver power comparisons (z1/z3/z4/z5 and charge tracking).
    rec: f64,
    /// Receiver startup energy (reset gate and z2).
    er: f64,
    /// Power-block startup energy (reset gate and z6).
    ec: f64,
    /// Storage-funding comparison (z7).
    stor: f64,
    /// Power-block discharge tracking.
    pb: f64,
    /// Pure-binary forcing rows (planned-shutdown coupling).
    bin: f64,
}

impl BigM {
    fn for_problem(plant: &PlantDesign, qp_max: f64, dt: f64) -> Result<Self, Error> {
        Ok(Self {
            rec: big_m_for(qp_max.max(plant.q_rlim) + plant.q_ru + plant.q_rsd)?,
            er: big_m_for(plant.e_r)?,
            ec: big_m_for(plant.e_c)?,
            stor: big_m_for(plant.e_u + dt * plant.q_rlim)?,
            pb: big_m_for(plant.q_u + plant.q_c)?,
            bin: big_m_for(1.0)?,
        })
    }
}

/// Builds the stochastic program over a scenario space.
pub fn build_smilp(
    plant: &PlantDesign,
    costs: &CostModel,
    scenarios: &ScenarioSpace,
    prices: &PriceProfile,
    cfg: &RunConfig,
) -> Result<(MilpModel, SmilpIndexMap), Error> {
    plant.validate()?;
    costs.validate()?;
    scenarios.validate()?;
    let horizon_k = scenarios.scenarios[0].trajectory.len();
    let dt = scenarios.scenarios[0].trajectory.dt_hours;
    prices.validate(horizon_k)?;
    let n_s = scenarios.n_s();
    let eps = cfg.epsilon;

    // Per-scenario potential power, entered as constants.
    let qp: Vec<Vec<f64>> = scenarios
        .scenarios
        .iter()
        .map(|sc| potential_power_series(&sc.trajectory, plant, &cfg.loss, &cfg.efficiency))
        .collect::<Result<_, _>>()?;
    let qp_max = qp.iter().flatten().fold(0.0f64, |a, &b| a.max(b));
    let m = BigM::for_problem(plant, qp_max, dt)?;

    // Receiver operating window: configured hours, or the union of
    // positive-DNI steps across scenarios.
    let daylight: Vec<bool> = (0..horizon_k)
        .map(|k| match cfg.daylight {
            Some((rise, set)) => {
                let (_, hour) = scenarios.scenarios[0].trajectory.step_time(k);
                hour >= rise && hour < set
            }
            None => scenarios.scenarios.iter().any(|sc| sc.trajectory.samples[k].dni > 0.0),
        })
        .collect();

    let map = SmilpIndexMap { horizon_k, n_s };
    let mut model = MilpModel::new("smilp");
    let s_min = plant.soc_min * plant.e_u;

    // --- Plan variables -----------------------------------------------------
    let plan_var = |model: &mut MilpModel, sym: PlanSym, k: usize| -> Result<usize, Error> {
        let name = map.plan(sym, k);
        match sym {
            PlanSym::QrHat => model.add_variable(name, VarKind::Continuous, 0.0, plant.q_rlim),
            PlanSym::QcHat => model.add_variable(name, VarKind::Continuous, 0.0, plant.q_u),
            PlanSym::Yr => {
                let ub = if daylight[k] { 1.0 } else { 0.0 };
                model.add_variable(name, VarKind::Binary, 0.0, ub)
            }
            _ => model.add_variable(name, VarKind::Binary, 0.0, 1.0),
        }
    };
    let mut plan_handles = vec![vec![0usize; horizon_k]; PlanSym::ALL.len()];
    for (i, sym) in PlanSym::ALL.into_iter().enumerate() {
        for k in 0..horizon_k {
            plan_handles[i][k] = plan_var(&mut model, sym, k)?;
        }
    }
    let ph = |sym: PlanSym, k: usize| -> usize {
        plan_handles[PlanSym::ALL.iter().position(|s| *s == sym).unwrap()][k]
    };

    // --- Control variables ---------------------------------------------------
    let mut ctrl_handles = vec![vec![vec![0usize; horizon_k]; n_s]; CtrlSym::ALL.len()];
    for s in 0..n_s {
        for k in 0..horizon_k {
            for (i, sym) in CtrlSym::ALL.into_iter().enumerate() {
                let name = map.ctrl(sym, k, s);
                let h = if sym.is_binary() {
                    model.add_variable(name, VarKind::Binary, 0.0, 1.0)?
                } else {
                    let (lo, hi) = match sym {
                        CtrlSym::Qract => (0.0, plant.q_rlim),
                        CtrlSym::Qcact => (0.0, plant.q_u),
                        CtrlSym::Ersu => (0.0, plant.e_r),
                        CtrlSym::Ecsu => (0.0, plant.e_c),
                        CtrlSym::PhiR => (0.0, plant.e_r),
                        CtrlSym::PhiC => (0.0, plant.e_c),
                        CtrlSym::W => (0.0, plant.w_u),
                        CtrlSym::Wd => (0.0, plant.w_u),
                        CtrlSym::Ws => (0.0, plant.w_u),
                        CtrlSym::Wp => (0.0, f64::INFINITY),
                        CtrlSym::Stor => (s_min, plant.e_u),
                        CtrlSym::Phi => (0.0, plant.e_u - s_min + dt * plant.q_rlim),
                        CtrlSym::Qavail => (-(plant.q_ru + plant.q_rsd), qp_max),
                        CtrlSym::QavailGen => (-(plant.q_ru + plant.q_rsd), qp_max),
                        _ => unreachable!(),
                    };
                    model.add_variable(name, VarKind::Continuous, lo, hi)?
                };
                ctrl_handles[i][s][k] = h;
            }
        }
    }
    let ch = |sym: CtrlSym, k: usize, s: usize| -> usize {
        ctrl_handles[CtrlSym::ALL.iter().position(|c| *c == sym).unwrap()][s][k]
    };

    // --- Plan logic rows -----------------------------------------------------
    for k in 0..horizon_k {
        let (yr, yrsup, yc, ycsup, ycsd) = (
            ph(PlanSym::Yr, k),
            ph(PlanSym::Yrsup, k),
            ph(PlanSym::Yc, k),
            ph(PlanSym::Ycsup, k),
            ph(PlanSym::Ycsd, k),
        );
        // Receiver commitment edges.
        if k == 0 {
            model.add_row(format!("p_rsup_edge_k{k}"), RowSense::Ge, 0.0, &[(yrsup, 1.0), (yr, -1.0)])?;
        } else {
            let yr_p = ph(PlanSym::Yr, k - 1);
            model.add_row(
                format!("p_rsup_edge_k{k}"),
                RowSense::Ge,
                0.0,
                &[(yrsup, 1.0), (yr, -1.0), (yr_p, 1.0)],
            )?;
            model.add_row(format!("p_rsup_once_k{k}"), RowSense::Le, 1.0, &[(yrsup, 1.0), (yr_p, 1.0)])?;
            let yrsd_p = ph(PlanSym::Yrsd, k - 1);
            model.add_row(
                format!("p_rsd_edge_k{k}"),
                RowSense::Ge,
                0.0,
                &[(yrsd_p, 1.0), (yr_p, -1.0), (yr, 1.0)],
            )?;
            model.add_row(format!("p_rsd_off_k{k}"), RowSense::Le, 1.0, &[(yrsd_p, 1.0), (yr, 1.0)])?;
        }
        // Power-block commitment edges.
        if k == 0 {
            model.add_row(format!("p_csup_edge_k{k}"), RowSense::Ge, 0.0, &[(ycsup, 1.0), (yc, -1.0)])?;
            model.add_row(format!("p_csd_prior_k{k}"), RowSense::Le, 0.0, &[(ycsd, 1.0)])?;
        } else {
            let yc_p = ph(PlanSym::Yc, k - 1);
            model.add_row(
                format!("p_csup_edge_k{k}"),
                RowSense::Ge,
                0.0,
                &[(ycsup, 1.0), (yc, -1.0), (yc_p, 1.0)],
            )?;
            model.add_row(
                format!("p_csd_edge_k{k}"),
                RowSense::Ge,
                0.0,
                &[(ycsd, 1.0), (yc_p, -1.0), (yc, 1.0)],
            )?;
            model.add_row(format!("p_csd_prior_k{k}"), RowSense::Le, 0.0, &[(ycsd, 1.0), (yc_p, -1.0)])?;
        }
        model.add_row(format!("p_csd_off_k{k}"), RowSense::Le, 1.0, &[(ycsd, 1.0), (yc, 1.0)])?;
        // Planned-charge envelopes.
        let qrhat = ph(PlanSym::QrHat, k);
        model.add_row(
            format!("p_qrhat_lo_k{k}"),
            RowSense::Ge,
            0.0,
            &[(qrhat, 1.0), (yr, -plant.q_rl), (yrsup, plant.q_rl)],
        )?;
        model.add_row(
            format!("p_qrhat_hi_k{k}"),
            RowSense::Le,
            0.0,
            &[(qrhat, 1.0), (yr, -plant.q_rlim), (yrsup, plant.q_rlim)],
        )?;
        let qchat = ph(PlanSym::QcHat, k);
        model.add_row(
            format!("p_qchat_lo_k{k}"),
            RowSense::Ge,
            0.0,
            &[(qchat, 1.0), (yc, -plant.q_l), (ycsup, plant.q_l - plant.q_c)],
        )?;
        model.add_row(
            format!("p_qchat_hi_k{k}"),
            RowSense::Le,
            0.0,
            &[(qchat, 1.0), (yc, -plant.q_u), (ycsup, plant.q_u - plant.q_c)],
        )?;
    }

    // --- Control rows per (k, s) ---------------------------------------------
    for s in 0..n_s {
        for k in 0..horizon_k {
            let qpk = qp[s][k];
            let n = |stem: &str| format!("{stem}_k{k}_s{s}");
            let yr = ph(PlanSym::Yr, k);
            let yrsd = ph(PlanSym::Yrsd, k);
            let yc = ph(PlanSym::Yc, k);
            let ycsd = ph(PlanSym::Ycsd, k);
            let qrhat = ph(PlanSym::QrHat, k);
            let qchat = ph(PlanSym::QcHat, k);
            let (drsup, drsu, dr, drsd) = (
                ch(CtrlSym::Drsup, k, s),
                ch(CtrlSym::Drsu, k, s),
                ch(CtrlSym::Dr, k, s),
                ch(CtrlSym::Drsd, k, s),
            );
            let (dcsup, dcsu, dc, dcsd) = (
                ch(CtrlSym::Dcsup, k, s),
                ch(CtrlSym::Dcsu, k, s),
                ch(CtrlSym::Dc, k, s),
                ch(CtrlSym::Dcsd, k, s),
            );
            let (z1, z2, z3, z4, z5, z6, z7) = (
                ch(CtrlSym::Z1, k, s),
                ch(CtrlSym::Z2, k, s),
                ch(CtrlSym::Z3, k, s),
                ch(CtrlSym::Z4, k, s),
                ch(CtrlSym::Z5, k, s),
                ch(CtrlSym::Z6, k, s),
                ch(CtrlSym::Z7, k, s),
            );
            let (qract, qcact, ersu, ecsu, phir, phic) = (
                ch(CtrlSym::Qract, k, s),
                ch(CtrlSym::Qcact, k, s),
                ch(CtrlSym::Ersu, k, s),
                ch(CtrlSym::Ecsu, k, s),
                ch(CtrlSym::PhiR, k, s),
                ch(CtrlSym::PhiC, k, s),
            );
            let (w, wd, ws, wp, stor, phi, qavail, qavailgen) = (
                ch(CtrlSym::W, k, s),
                ch(CtrlSym::Wd, k, s),
                ch(CtrlSym::Ws, k, s),
                ch(CtrlSym::Wp, k, s),
                ch(CtrlSym::Stor, k, s),
                ch(CtrlSym::Phi, k, s),
                ch(CtrlSym::Qavail, k, s),
                ch(CtrlSym::QavailGen, k, s),
            );

            // Receiver startup thermal state: e_rsu recurrence with reset
            // slack, the completion cap, and the slack gate during startup.
            let mut coeffs = vec![(ersu, 1.0), (drsu, -dt * plant.q_ru), (phir, 1.0)];
            if k > 0 {
                coeffs.push((ch(CtrlSym::Ersu, k - 1, s), -1.0));
            }
            model.add_row(n("c_ersu_rec"), RowSense::Eq, 0.0, &coeffs)?;
            model.add_row(n("c_ersu_cap"), RowSense::Le, 0.0, &[(ersu, 1.0), (drsu, -plant.e_r)])?;
            model.add_row(n("c_phir_gate"), RowSense::Le, m.er, &[(phir, 1.0), (drsu, m.er)])?;

            // z1: potential power below receiver minimum.
            model.add_row(n("c_z1_lo"), RowSense::Ge, plant.q_rl - qpk, &[(z1, m.rec)])?;
            model.add_row(n("c_z1_hi"), RowSense::Le, m.rec - eps - qpk + plant.q_rl, &[(z1, m.rec)])?;

            // z2: startup energy complete.
            model.add_row(n("c_z2_lo"), RowSense::Ge, plant.e_r - m.er, &[(ersu, 1.0), (z2, -m.er)])?;
            model.add_row(n("c_z2_hi"), RowSense::Le, plant.e_r - eps, &[(ersu, 1.0), (z2, -m.er)])?;

            // Receiver startup trigger (forcing + upper arms).
            let mut force = vec![(drsu, 1.0), (yr, -1.0), (z1, 1.0)];
            if k > 0 {
                force.push((ch(CtrlSym::Z2, k - 1, s), 1.0));
                force.push((ch(CtrlSym::Dr, k - 1, s), 1.0));
            }
            model.add_row(n("c_drsu_force"), RowSense::Ge, 0.0, &force)?;
            model.add_row(n("c_drsu_plan"), RowSense::Le, 0.0, &[(drsu, 1.0), (yr, -1.0)])?;
            model.add_row(n("c_drsu_z1"), RowSense::Le, 1.0, &[(drsu, 1.0), (z1, 1.0)])?;
            if k > 0 {
                model.add_row(
                    n("c_drsu_z2p"),
                    RowSense::Le,
                    1.0,
                    &[(drsu, 1.0), (ch(CtrlSym::Z2, k - 1, s), 1.0)],
                )?;
                model.add_row(
                    n("c_drsu_drp"),
                    RowSense::Le,
                    1.0,
                    &[(drsu, 1.0), (ch(CtrlSym::Dr, k - 1, s), 1.0)],
                )?;
            }
            // Startup cold-start edge.
            let mut edge = vec![(drsup, 1.0), (drsu, -1.0)];
            if k > 0 {
                edge.push((ch(CtrlSym::Drsu, k - 1, s), 1.0));
            }
            model.add_row(n("c_drsup_edge"), RowSense::Ge, 0.0, &edge)?;

            // Power balance and generation envelope.
            model.add_row(
                n("c_balance"),
                RowSense::Le,
                qpk,
                &[(qract, 1.0), (drsu, plant.q_ru), (drsd, plant.q_rsd)],
            )?;
            model.add_row(n("c_qract_lo"), RowSense::Ge, 0.0, &[(qract, 1.0), (dr, -plant.q_rl)])?;
            model.add_row(n("c_qract_hi"), RowSense::Le, 0.0, &[(qract, 1.0), (dr, -plant.q_rlim)])?;

            // Available power definitions.
            model.add_row(
                n("c_qavail_def"),
                RowSense::Eq,
                qpk,
                &[(qavail, 1.0), (drsu, plant.q_ru), (drsd, plant.q_rsd)],
            )?;
            model.add_row(
                n("c_qavailgen_def"),
                RowSense::Eq,
                0.0,
                &[(qavailgen, 1.0), (dr, -qpk), (drsu, plant.q_ru), (drsd, plant.q_rsd)],
            )?;

            // z3: available power at or below the minimum.
            model.add_row(
                n("c_z3_lo"),
                RowSense::Le,
                plant.q_rl + m.rec,
                &[(qavail, 1.0), (z3, m.rec)],
            )?;
            model.add_row(
                n("c_z3_hi"),
                RowSense::Ge,
                plant.q_rl + eps,
                &[(qavail, 1.0), (z3, m.rec)],
            )?;

            // Receiver generation gate (forcing + upper arms).
            let mut force = vec![(dr, 1.0), (yr, -1.0), (z2, -1.0), (z3, 1.0)];
            if k > 0 {
                force.push((ch(CtrlSym::Dr, k - 1, s), -1.0));
            }
            model.add_row(n("c_dr_force"), RowSense::Ge, -1.0, &force)?;
            model.add_row(n("c_dr_plan"), RowSense::Le, 0.0, &[(dr, 1.0), (yr, -1.0)])?;
            let mut warm = vec![(dr, 1.0), (z2, -1.0)];
            if k > 0 {
                warm.push((ch(CtrlSym::Dr, k - 1, s), -1.0));
            }
            model.add_row(n("c_dr_warm"), RowSense::Le, 0.0, &warm)?;
            model.add_row(n("c_dr_z3"), RowSense::Le, 1.0, &[(dr, 1.0), (z3, 1.0)])?;

            // z4: generation-available power at or below the minimum.
            model.add_row(
                n("c_z4_lo"),
                RowSense::Le,
                plant.q_rl + m.rec,
                &[(qavailgen, 1.0), (z4, m.rec)],
            )?;
            model.add_row(
                n("c_z4_hi"),
                RowSense::Ge,
                plant.q_rl + eps,
                &[(qavailgen, 1.0), (z4, m.rec)],
            )?;
            // z5: planned charge at or above the generation-available power.
            model.add_row(
                n("c_z5_lo"),
                RowSense::Ge,
                -m.rec,
                &[(qrhat, 1.0), (qavailgen, -1.0), (z5, -m.rec)],
            )?;
            model.add_row(
                n("c_z5_hi"),
                RowSense::Le,
                -eps,
                &[(qrhat, 1.0), (qavailgen, -1.0), (z5, -m.rec)],
            )?;
            // Charge tracking cases.
            model.add_row(
                n("c_track_avail_hi"),
                RowSense::Le,
                m.rec,
                &[(qract, 1.0), (qavailgen, -1.0), (z4, -m.rec), (z5, m.rec)],
            )?;
            model.add_row(
                n("c_track_avail_lo"),
                RowSense::Ge,
                -m.rec,
                &[(qract, 1.0), (qavailgen, -1.0), (z4, m.rec), (z5, -m.rec)],
            )?;
            model.add_row(
                n("c_track_plan_hi"),
                RowSense::Le,
                0.0,
                &[(qract, 1.0), (qrhat, -1.0), (z5, -m.rec)],
            )?;
            model.add_row(
                n("c_track_plan_lo"),
                RowSense::Ge,
                0.0,
                &[(qract, 1.0), (qrhat, -1.0), (z5, m.rec)],
            )?;

            // Receiver shutdown logic.
            if k > 0 {
                model.add_row(
                    n("c_drsd_edge"),
                    RowSense::Ge,
                    0.0,
                    &[(ch(CtrlSym::Drsd, k - 1, s), 1.0), (ch(CtrlSym::Dr, k - 1, s), -1.0), (dr, 1.0)],
                )?;
                model.add_row(
                    n("c_drsd_off"),
                    RowSense::Le,
                    1.0,
                    &[(ch(CtrlSym::Drsd, k - 1, s), 1.0), (dr, 1.0)],
                )?;
            }
            model.add_row(n("c_drsd_gen"), RowSense::Le, 0.0, &[(drsd, 1.0), (dr, -1.0)])?;
            // Planned shutdown forces the draw while generating.
            model.add_row(
                n("c_drsd_plan_lo"),
                RowSense::Ge,
                1.0 - 2.0 * m.bin,
                &[(drsd, 1.0), (yrsd, -m.bin), (dr, -m.bin)],
            )?;
            model.add_row(
                n("c_drsd_plan_hi"),
                RowSense::Le,
                1.0 + 2.0 * m.bin,
                &[(drsd, 1.0), (yrsd, m.bin), (dr, m.bin)],
            )?;

            // Power-block startup thermal state.
            let mut coeffs = vec![(ecsu, 1.0), (dcsu, -dt * plant.q_c), (phic, 1.0)];
            if k > 0 {
                coeffs.push((ch(CtrlSym::Ecsu, k - 1, s), -1.0));
            }
            model.add_row(n("c_ecsu_rec"), RowSense::Eq, 0.0, &coeffs)?;
            model.add_row(n("c_ecsu_cap"), RowSense::Le, 0.0, &[(ecsu, 1.0), (dcsu, -plant.e_c)])?;
            model.add_row(n("c_phic_gate"), RowSense::Le, m.ec, &[(phic, 1.0), (dcsu, m.ec)])?;

            // z6: power-block startup complete.
            model.add_row(n("c_z6_lo"), RowSense::Ge, plant.e_c - m.ec, &[(ecsu, 1.0), (z6, -m.ec)])?;
            model.add_row(n("c_z6_hi"), RowSense::Le, plant.e_c - eps, &[(ecsu, 1.0), (z6, -m.ec)])?;

            // Startup-funding energy phi = s[k-1] - s_min + dt * q_ract.
            let mut coeffs = vec![(phi, 1.0), (qract, -dt)];
            let rhs = if k > 0 {
                coeffs.push((ch(CtrlSym::Stor, k - 1, s), -1.0));
                -s_min
            } else {
                0.0 // s[-1] = s_min cancels the -s_min term
            };
            model.add_row(n("c_phi_def"), RowSense::Eq, rhs, &coeffs)?;

            // z7: storage cannot fund a startup step.
            model.add_row(
                n("c_z7_lo"),
                RowSense::Le,
                dt * plant.q_c + m.stor,
                &[(phi, 1.0), (z7, m.stor)],
            )?;
            model.add_row(
                n("c_z7_hi"),
                RowSense::Ge,
                dt * plant.q_c + eps,
                &[(phi, 1.0), (z7, m.stor)],
            )?;

            // Power-block startup trigger.
            let mut force = vec![(dcsu, 1.0), (yc, -1.0), (z7, 1.0)];
            if k > 0 {
                force.push((ch(CtrlSym::Dc, k - 1, s), 1.0));
                force.push((ch(CtrlSym::Z6, k - 1, s), 1.0));
            }
            model.add_row(n("c_dcsu_force"), RowSense::Ge, 0.0, &force)?;
            model.add_row(n("c_dcsu_plan"), RowSense::Le, 0.0, &[(dcsu, 1.0), (yc, -1.0)])?;
            model.add_row(n("c_dcsu_z7"), RowSense::Le, 1.0, &[(dcsu, 1.0), (z7, 1.0)])?;
            if k > 0 {
                model.add_row(
                    n("c_dcsu_dcp"),
                    RowSense::Le,
                    1.0,
                    &[(dcsu, 1.0), (ch(CtrlSym::Dc, k - 1, s), 1.0)],
                )?;
                model.add_row(
                    n("c_dcsu_z6p"),
                    RowSense::Le,
                    1.0,
                    &[(dcsu, 1.0), (ch(CtrlSym::Z6, k - 1, s), 1.0)],
                )?;
            }
            let mut edge = vec![(dcsup, 1.0), (dcsu, -1.0)];
            if k > 0 {
                edge.push((ch(CtrlSym::Dcsu, k - 1, s), 1.0));
            }
            model.add_row(n("c_dcsup_edge"), RowSense::Ge, 0.0, &edge)?;

            // Power-block generation gate and envelope.
            let mut warm = vec![(dc, 1.0), (z6, -1.0)];
            if k > 0 {
                warm.push((ch(CtrlSym::Dc, k - 1, s), -1.0));
            }
            model.add_row(n("c_dc_warm"), RowSense::Le, 0.0, &warm)?;
            model.add_row(n("c_qcact_lo"), RowSense::Ge, 0.0, &[(qcact, 1.0), (dc, -plant.q_l)])?;
            model.add_row(n("c_qcact_hi"), RowSense::Le, 0.0, &[(qcact, 1.0), (dc, -plant.q_u)])?;

            // Discharge tracks the plan: q_cact + Q_c*dcsu in [q_chat - M(1-dc), q_chat].
            model.add_row(
                n("c_qc_track_hi"),
                RowSense::Le,
                0.0,
                &[(qcact, 1.0), (dcsu, plant.q_c), (qchat, -1.0)],
            )?;
            model.add_row(
                n("c_qc_track_lo"),
                RowSense::Ge,
                -m.pb,
                &[(qcact, 1.0), (dcsu, plant.q_c), (qchat, -1.0), (dc, -m.pb)],
            )?;

            // Storage balance.
            let mut coeffs = vec![(stor, 1.0), (qract, -dt), (qcact, dt), (dcsu, dt * plant.q_c)];
            let rhs = if k > 0 {
                coeffs.push((ch(CtrlSym::Stor, k - 1, s), -1.0));
                0.0
            } else {
                s_min
            };
            model.add_row(n("c_stor_bal"), RowSense::Eq, rhs, &coeffs)?;

            // Power-block shutdown logic.
            let mut edge = vec![(dcsd, 1.0), (dc, 1.0)];
            if k > 0 {
                edge.push((ch(CtrlSym::Dc, k - 1, s), -1.0));
            }
            model.add_row(n("c_dcsd_edge"), RowSense::Ge, 0.0, &edge)?;
            model.add_row(n("c_dcsd_excl"), RowSense::Le, 1.0, &[(dcsd, 1.0), (dc, 1.0)])?;
            let mut plan_lo = vec![(dcsd, 1.0), (ycsd, -m.bin)];
            let mut plan_hi = vec![(dcsd, 1.0), (ycsd, m.bin)];
            if k > 0 {
                plan_lo.push((ch(CtrlSym::Dc, k - 1, s), -m.bin));
                plan_hi.push((ch(CtrlSym::Dc, k - 1, s), m.bin));
                model.add_row(n("c_dcsd_plan_lo"), RowSense::Ge, 1.0 - 2.0 * m.bin, &plan_lo)?;
                model.add_row(n("c_dcsd_plan_hi"), RowSense::Le, 1.0 + 2.0 * m.bin, &plan_hi)?;
            } else {
                // dc[-1] = 0: the forcing arm is vacuous.
                model.add_row(n("c_dcsd_plan_lo"), RowSense::Ge, 1.0 - 2.0 * m.bin, &plan_lo)?;
                model.add_row(n("c_dcsd_plan_hi"), RowSense::Le, 1.0 + m.bin, &plan_hi)?;
            }

            // Electrical map, dispatch, purchase, ramping.
            model.add_row(
                n("c_w_map"),
                RowSense::Eq,
                0.0,
                &[(w, 1.0), (qcact, -plant.eta_p), (dc, -(plant.w_u - plant.eta_p * plant.q_u))],
            )?;
            model.add_row(n("c_ws_def"), RowSense::Eq, 0.0, &[(ws, 1.0), (w, -(1.0 - plant.eta_c))])?;
            model.add_row(
                n("c_wp_def"),
                RowSense::Eq,
                0.0,
                &[
                    (wp, 1.0),
                    (qract, -plant.l_r),
                    (drsu, -(plant.l_r * plant.q_ru + plant.e_hs / dt)),
                    (qcact, -plant.l_c),
                    (dr, -plant.w_h),
                    (drsd, -plant.e_hs / dt),
                ],
            )?;
            let mut ramp_up = vec![(wd, 1.0), (w, -1.0)];
            let mut ramp_dn = vec![(wd, 1.0), (w, 1.0)];
            if k > 0 {
                ramp_up.push((ch(CtrlSym::W, k - 1, s), 1.0));
                ramp_dn.push((ch(CtrlSym::W, k - 1, s), -1.0));
            }
            model.add_row(n("c_ramp_up"), RowSense::Ge, 0.0, &ramp_up)?;
            model.add_row(n("c_ramp_dn"), RowSense::Ge, 0.0, &ramp_dn)?;
        }
    }

    // --- Objective ------------------------------------------------------------
    // A vanishing penalty on the plan binaries breaks profit ties toward the
    // all-off plan, making solutions canonical (a dark-sky horizon yields an
    // all-zero plan rather than arbitrary cost-free commitments).
    const TIE_BREAK: f64 = 1e-4;
    let mut obj: Vec<(usize, f64)> = Vec::new();
    for sym in [
        PlanSym::Yr,
        PlanSym::Yrsup,
        PlanSym::Yrsd,
        PlanSym::Yc,
        PlanSym::Ycsup,
        PlanSym::Ycsd,
    ] {
        for k in 0..horizon_k {
            obj.push((ph(sym, k), -TIE_BREAK));
        }
    }
    for s in 0..n_s {
        for k in 0..horizon_k {
            let weight = costs.lambda_discount.powi(k as i32) / n_s as f64;
            let p = prices.prices[k];
            obj.push((ch(CtrlSym::Ws, k, s), weight * dt * p));
            obj.push((ch(CtrlSym::Wp, k, s), -weight * dt * p));
            obj.push((ch(CtrlSym::Qract, k, s), -weight * dt * costs.c_rec));
            obj.push((ch(CtrlSym::W, k, s), -weight * dt * costs.c_c));
            obj.push((ch(CtrlSym::Wd, k, s), -weight * costs.c_dw));
            obj.push((ch(CtrlSym::Drsup, k, s), -weight * costs.c_rsup));
            obj.push((ch(CtrlSym::Drsd, k, s), -weight * costs.alpha_r_sd));
            obj.push((ch(CtrlSym::Dcsup, k, s), -weight * costs.c_csup));
            obj.push((ch(CtrlSym::Dcsd, k, s), -weight * costs.alpha_c_sd));
        }
    }
    model.set_objective(&obj, ObjSense::Maximize)?;
    Ok((model, map))
}

/// Single-scenario deterministic specialization of [`build_smilp`].
pub fn build_deterministic(
    plant: &PlantDesign,
    costs: &CostModel,
    trajectory: &WeatherTrajectory,
    prices: &PriceProfile,
    cfg: &RunConfig,
) -> Result<(MilpModel, SmilpIndexMap), Error> {
    let space = ScenarioSpace {
        scenarios: vec![Scenario {
            window_id: trajectory.start_timestamp.date(),
            e_in: 0.0,
            trajectory: trajectory.clone(),
        }],
        seed: 0,
    };
    build_smilp(plant, costs, &space, prices, cfg)
}

// ---------------------------------------------------------------------------
// Solution extraction
// ---------------------------------------------------------------------------

fn binary_of(solution: &Solution, name: &str, tol: f64) -> Result<u8, Error> {
    let v = solution
        .value(name)
        .ok_or_else(|| Error::solver(format!("solution has no value for {name}")))?;
    let r = v.round();
    if (v - r).abs() > tol || !(r == 0.0 || r == 1.0) {
        return Err(Error::solver(format!("{name} = {v} violates integrality tolerance {tol}")));
    }
    Ok(r as u8)
}

fn continuous_of(solution: &Solution, name: &str) -> Result<f64, Error> {
    solution
        .value(name)
        .ok_or_else(|| Error::solver(format!("solution has no value for {name}")))
}

/// Reads the plan variables out of a solution and re-validates the plan.
pub fn extract_dispatch_plan(
    solution: &Solution,
    map: &SmilpIndexMap,
    plant: &PlantDesign,
    tol: f64,
) -> Result<DispatchPlan, Error> {
    let mut plan = DispatchPlan::all_off(map.horizon_k);
    for k in 0..map.horizon_k {
        plan.y_r[k] = binary_of(solution, &map.plan(PlanSym::Yr, k), tol)?;
        plan.y_rsup[k] = binary_of(solution, &map.plan(PlanSym::Yrsup, k), tol)?;
        plan.y_rsd[k] = binary_of(solution, &map.plan(PlanSym::Yrsd, k), tol)?;
        plan.y_c[k] = binary_of(solution, &map.plan(PlanSym::Yc, k), tol)?;
        plan.y_csup[k] = binary_of(solution, &map.plan(PlanSym::Ycsup, k), tol)?;
        plan.y_csd[k] = binary_of(solution, &map.plan(PlanSym::Ycsd, k), tol)?;
        plan.q_r_hat[k] = continuous_of(solution, &map.plan(PlanSym::QrHat, k))?.max(0.0);
        plan.q_c_hat[k] = continuous_of(solution, &map.plan(PlanSym::QcHat, k))?.max(0.0);
    }
    plan.validate(plant)?;
    Ok(plan)
}

/// One step of extracted per-scenario control values.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ControlStep {
    pub drsup: u8,
    pub drsu: u8,
    pub dr: u8,
    pub drsd: u8,
    pub dcsup: u8,
    pub dcsu: u8,
    pub dc: u8,
    pub dcsd: u8,
    pub z: [u8; 7],
    pub q_ract: f64,
    pub q_cact: f64,
    pub e_rsu: f64,
    pub e_csu: f64,
    pub w: f64,
    pub wd: f64,
    pub ws: f64,
    pub wp: f64,
    pub storage: f64,
    pub phi: f64,
    pub q_avail: f64,
    pub q_avail_gen: f64,
}

/// Reads one scenario's control trajectory out of a solution.
pub fn extract_control_trajectories(
    solution: &Solution,
    map: &SmilpIndexMap,
    s: usize,
    tol: f64,
) -> Result<Vec<ControlStep>, Error> {
    if s >= map.n_s {
        return Err(Error::config(format!("scenario index {s} outside 0..{}", map.n_s)));
    }
    let mut steps = Vec::with_capacity(map.horizon_k);
    for k in 0..map.horizon_k {
        let b = |sym: CtrlSym| binary_of(solution, &map.ctrl(sym, k, s), tol);
        let c = |sym: CtrlSym| continuous_of(solution, &map.ctrl(sym, k, s));
        steps.push(ControlStep {
            drsup: b(CtrlSym::Drsup)?,
            drsu: b(CtrlSym::Drsu)?,
            dr: b(CtrlSym::Dr)?,
            drsd: b(CtrlSym::Drsd)?,
            dcsup: b(CtrlSym::Dcsup)?,
            dcsu: b(CtrlSym::Dcsu)?,
            dc: b(CtrlSym::Dc)?,
            dcsd: b(CtrlSym::Dcsd)?,
            z: [
                b(CtrlSym::Z1)?,
                b(CtrlSym::Z2)?,
                b(CtrlSym::Z3)?,
                b(CtrlSym::Z4)?,
                b(CtrlSym::Z5)?,
                b(CtrlSym::Z6)?,
                b(CtrlSym::Z7)?,
            ],
            q_ract: c(CtrlSym::Qract)?,
            q_cact: c(CtrlSym::Qcact)?,
            e_rsu: c(CtrlSym::Ersu)?,
            e_csu: c(CtrlSym::Ecsu)?,
            w: c(CtrlSym::W)?,
            wd: c(CtrlSym::Wd)?,
            ws: c(CtrlSym::Ws)?,
            wp: c(CtrlSym::Wp)?,
            storage: c(CtrlSym::Stor)?,
            phi: c(CtrlSym::Phi)?,
            q_avail: c(CtrlSym::Qavail)?,
            q_avail_gen: c(CtrlSym::QavailGen)?,
        });
    }
    Ok(steps)
}

/// Discounted profit of one control trajectory under the objective's terms.
pub fn scenario_profit(
    controls: &[ControlStep],
    prices: &PriceProfile,
    costs: &CostModel,
    dt: f64,
) -> f64 {
    controls
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let lambda = costs.lambda_discount.powi(k as i32);
            let p = prices.prices[k];
            let f_r = dt * p * c.ws;
            let f_aux = dt * p * c.wp;
            let f_om = dt * (costs.c_rec * c.q_ract + costs.c_c * c.w)
                + costs.c_dw * c.wd
                + costs.c_rsup * f64::from(c.drsup)
                + costs.alpha_r_sd * f64::from(c.drsd)
                + costs.c_csup * f64::from(c.dcsup)
                + costs.alpha_c_sd * f64::from(c.dcsd);
            lambda * (f_r - f_aux - f_om)
        })
        .sum()
}

// ---------------------------------------------------------------------------
// Constraint auditor
// ---------------------------------------------------------------------------

/// Re-evaluates the operating constraints numerically on an extracted control
/// trajectory; returns human-readable violations (empty = clean).
pub fn audit_controls(
    plant: &PlantDesign,
    plan: &DispatchPlan,
    controls: &[ControlStep],
    qp: &[f64],
    dt: f64,
) -> Vec<String> {
    let mut bad = Vec::new();
    // Solver feasibility slack is amplified by the big-M magnitudes, so the
    // audit band sits above the raw solver tolerance.
    let tol = 1e-5;
    let s_min = plant.soc_min * plant.e_u;
    let mut prev = ControlStep { storage: s_min, ..Default::default() };
    for (k, c) in controls.iter().enumerate() {
        let mut check = |ok: bool, msg: String| {
            if !ok {
                bad.push(format!("k={k}: {msg}"));
            }
        };
        // Startup thermal recurrences.
        let ersu_expect = if c.drsu == 1 { prev.e_rsu + dt * plant.q_ru } else { 0.0 };
        check(
            (c.e_rsu - ersu_expect).abs() <= tol,
            format!("e_rsu {} != {}", c.e_rsu, ersu_expect),
        );
        check(c.e_rsu <= plant.e_r * f64::from(c.drsu) + tol, "e_rsu exceeds startup cap".into());
        let ecsu_expect = if c.dcsu == 1 { prev.e_csu + dt * plant.q_c } else { 0.0 };
        check(
            (c.e_csu - ecsu_expect).abs() <= tol,
            format!("e_csu {} != {}", c.e_csu, ecsu_expect),
        );
        // Switch definitions.
        check(c.z[0] == u8::from(qp[k] < plant.q_rl), "z1 mismatch".into());
        check(c.z[1] == u8::from(c.e_rsu >= plant.e_r - tol), "z2 mismatch".into());
        check(c.z[2] == u8::from(c.q_avail <= plant.q_rl + tol), "z3 mismatch".into());
        check(c.z[3] == u8::from(c.q_avail_gen <= plant.q_rl + tol), "z4 mismatch".into());
        check(
            c.z[4] == u8::from(plan.q_r_hat[k] >= c.q_avail_gen - tol),
            "z5 mismatch".into(),
        );
        check(c.z[5] == u8::from(c.e_csu >= plant.e_c - tol), "z6 mismatch".into());
        let phi_expect = prev.storage - s_min + dt * c.q_ract;
        check((c.phi - phi_expect).abs() <= tol, format!("phi {} != {}", c.phi, phi_expect));
        check(c.z[6] == u8::from(c.phi <= dt * plant.q_c + tol), "z7 mismatch".into());
        // Case functions.
        check(
            c.drsu
                == u8::from(case_delta_rsu(
                    plan.y_r[k] == 1,
                    c.z[0] == 1,
                    prev.z[1] == 1,
                    prev.dr == 1,
                )),
            "delta_rsu differs from its case function".into(),
        );
        check(
            c.dr == u8::from(case_delta_r(plan.y_r[k] == 1, c.z[1] == 1, prev.dr == 1, c.z[2] == 1)),
            "delta_r differs from its case function".into(),
        );
        if c.dr == 1 {
            let expect = case_q_ract(plan.q_r_hat[k], c.q_avail_gen, plant.q_rl);
            check(
                (c.q_ract - expect).abs() <= tol,
                format!("q_ract {} != case value {}", c.q_ract, expect),
            );
        }
        check(
            c.dcsu
                == u8::from(case_delta_csu(
                    plan.y_c[k] == 1,
                    prev.dc == 1,
                    prev.z[5] == 1,
                    c.z[6] == 1,
                )),
            "delta_csu differs from its case function".into(),
        );
        // Envelopes and balances.
        check(
            c.q_ract + plant.q_ru * f64::from(c.drsu) + plant.q_rsd * f64::from(c.drsd)
                <= qp[k] + tol,
            "power balance violated".into(),
        );
        check(
            c.q_ract >= plant.q_rl * f64::from(c.dr) - tol
                && c.q_ract <= plant.q_rlim * f64::from(c.dr) + tol,
            format!("q_ract {} outside generation envelope", c.q_ract),
        );
        check(
            c.q_cact >= plant.q_l * f64::from(c.dc) - tol
                && c.q_cact <= plant.q_u * f64::from(c.dc) + tol,
            format!("q_cact {} outside generation envelope", c.q_cact),
        );
        check(
            c.q_cact + plant.q_c * f64::from(c.dcsu) <= plan.q_c_hat[k] + tol,
            "discharge exceeds plan".into(),
        );
        if c.dc == 1 {
            check(
                c.q_cact + plant.q_c * f64::from(c.dcsu) >= plan.q_c_hat[k] - tol,
                "discharge below plan while generating".into(),
            );
        }
        let stor_expect =
            prev.storage + dt * (c.q_ract - c.q_cact - plant.q_c * f64::from(c.dcsu));
        check(
            (c.storage - stor_expect).abs() <= tol,
            format!("storage {} != recurrence {}", c.storage, stor_expect),
        );
        check(
            c.storage >= s_min - tol && c.storage <= plant.e_u + tol,
            format!("storage {} outside bounds", c.storage),
        );
        // Electrical identities.
        let w_expect = plant.eta_p * c.q_cact + f64::from(c.dc) * (plant.w_u - plant.eta_p * plant.q_u);
        check((c.w - w_expect).abs() <= tol, "electricity map violated".into());
        check((c.ws - c.w * (1.0 - plant.eta_c)).abs() <= tol, "dispatch map violated".into());
        let wp_expect = plant.l_r * (c.q_ract + plant.q_ru * f64::from(c.drsu))
            + plant.l_c * c.q_cact
            + plant.w_h * f64::from(c.dr)
            + plant.e_hs / dt * f64::from(c.drsd + c.drsu);
        check((c.wp - wp_expect).abs() <= tol, "purchase map violated".into());
        check(c.wd >= (c.w - prev.w).abs() - tol, "ramp underestimated".into());
        prev = *c;
    }
    bad
}
