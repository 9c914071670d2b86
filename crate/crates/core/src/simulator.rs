//! Rule-based plant simulator: executes a dispatch plan against one weather
//! trajectory step by step, mirroring the optimizer's operating rules and
//! boundary conventions exactly so that, for any plan the optimizer can emit,
//! the simulated trajectory reproduces the optimizer's control trajectory.
//!
//! Two behaviours extend past what the optimization model can represent,
//! because the simulator must accept *arbitrary* feasible plans while the
//! model simply becomes infeasible for pathological ones:
//!
//! * When a shutdown draw no longer fits above the receiver minimum, the
//!   shutdown still completes, drawing what power remains (a forced event).
//! * When following the plan would overfill storage, the receiver charge is
//!   curtailed to the available headroom; if the curtailed charge falls below
//!   the receiver minimum the receiver trips off (a forced shutdown).

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::data::PriceProfile;
use crate::error::Error;
use crate::formulation::{case_delta_csu, case_delta_rsu, case_q_ract, DispatchPlan};
use crate::plant::{potential_power_series, WeatherTrajectory};

/// Comparison slack for the switch boundaries. Kept far below the optimizer's
/// epsilon so both sides classify every representable operating point alike.
const TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Event {
    /// Receiver cold start began.
    Rsup,
    /// Receiver shutdown on the plan's say-so.
    RsdPlanned,
    /// Receiver shutdown forced by conditions (resource loss, curtailment,
    /// or a shutdown draw that no longer fits).
    RsdForced,
    /// Power-block cold start began.
    Csup,
    /// Power-block shutdown on the plan's say-so.
    CsdPlanned,
    /// Power-block shutdown forced by conditions (plan outside the
    /// generation envelope or storage exhausted).
    CsdForced,
}

/// Everything observable about one simulated step.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimStep {
    pub k: usize,
    pub q_pot: f64,
    pub drsup: u8,
    pub drsu: u8,
    pub dr: u8,
    pub drsd: u8,
    pub dcsup: u8,
    pub dcsu: u8,
    pub dc: u8,
    pub dcsd: u8,
    pub q_ract: f64,
    pub q_cact: f64,
    pub e_rsu: f64,
    pub e_csu: f64,
    pub storage: f64,
    pub w: f64,
    pub wd: f64,
    pub ws: f64,
    pub wp: f64,
    pub q_dump: f64,
    pub step_profit: f64,
    pub events: Vec<Event>,
}

/// Discounted profit, split into the objective's signed components so that
/// `revenue - purchase_cost - receiver_opex - receiver_sd_cost - pb_opex -
/// pb_sd_cost == profit` holds to numerical identity.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ProfitBreakdown {
    /// Dispatched-electricity revenue.
    pub revenue: f64,
    /// Cost of purchased parasitic electricity.
    pub purchase_cost: f64,
    /// Receiver generation plus cold-start costs.
    pub receiver_opex: f64,
    /// Receiver shutdown penalties.
    pub receiver_sd_cost: f64,
    /// Power-block generation, ramping, and cold-start costs.
    pub pb_opex: f64,
    /// Power-block shutdown penalties.
    pub pb_sd_cost: f64,
    pub profit: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationResult {
    pub steps: Vec<SimStep>,
    pub breakdown: ProfitBreakdown,
    /// Final storage level (MWh_t).
    pub storage_final: f64,
    /// Thermal energy dumped over the horizon (MWh_t).
    pub dumped_energy: f64,
}

impl SimulationResult {
    pub fn profit(&self) -> f64 {
        self.breakdown.profit
    }

    pub fn events(&self) -> impl Iterator<Item = (usize, Event)> + '_ {
        self.steps.iter().flat_map(|s| s.events.iter().map(move |&e| (s.k, e)))
    }

    /// Writes the step trace as CSV.
    pub fn write_trace_csv(&self, path: &std::path::Path) -> Result<(), Error> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record([
            "k", "q_pot", "drsup", "drsu", "dr", "drsd", "dcsup", "dcsu", "dc", "dcsd", "q_ract",
            "q_cact", "e_rsu", "e_csu", "storage", "w", "wd", "ws", "wp", "q_dump", "step_profit",
            "events",
        ])?;
        for s in &self.steps {
            let events = s
                .events
                .iter()
                .map(|e| format!("{e:?}"))
                .collect::<Vec<_>>()
                .join("|");
            w.write_record([
                s.k.to_string(),
                s.q_pot.to_string(),
                s.drsup.to_string(),
                s.drsu.to_string(),
                s.dr.to_string(),
                s.drsd.to_string(),
                s.dcsup.to_string(),
                s.dcsu.to_string(),
                s.dc.to_string(),
                s.dcsd.to_string(),
                s.q_ract.to_string(),
                s.q_cact.to_string(),
                s.e_rsu.to_string(),
                s.e_csu.to_string(),
                s.storage.to_string(),
                s.w.to_string(),
                s.wd.to_string(),
                s.ws.to_string(),
                s.wp.to_string(),
                s.q_dump.to_string(),
                s.step_profit.to_string(),
                events,
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs the plan against one trajectory. The price profile must cover the
/// trajectory's length.
pub fn simulate(
    plan: &DispatchPlan,
    trajectory: &WeatherTrajectory,
    prices: &PriceProfile,
    cfg: &RunConfig,
) -> Result<SimulationResult, Error> {
    let plant = &cfg.plant;
    let costs = &cfg.costs;
    let horizon_k = trajectory.len();
    if plan.horizon_k != horizon_k {
        return Err(Error::config(format!(
            "plan horizon {} != trajectory length {horizon_k}",
            plan.horizon_k
        )));
    }
    prices.validate(horizon_k)?;
    plan.validate(plant)?;
    let dt = trajectory.dt_hours;
    let qp = potential_power_series(trajectory, plant, &cfg.loss, &cfg.efficiency)?;
    let s_min = plant.soc_min * plant.e_u;

    // Carried state.
    let mut dr_prev = false;
    let mut drsd_prev = false;
    let mut z2_prev = false;
    let mut e_rsu_prev = 0.0f64;
    let mut drsu_prev = false;
    let mut dc_prev = false;
    let mut z6_prev = false;
    let mut e_csu_prev = 0.0f64;
    let mut dcsu_prev = false;
    let mut s_prev = s_min;
    let mut w_prev = 0.0f64;

    let mut steps = Vec::with_capacity(horizon_k);
    let mut breakdown = ProfitBreakdown::default();
    let mut dumped_energy = 0.0f64;

    for k in 0..horizon_k {
        let mut events = Vec::new();
        let y_r = plan.y_r[k] == 1;
        let y_c = plan.y_c[k] == 1;

        // --- Receiver ------------------------------------------------------
        let z1 = qp[k] < plant.q_rl - TOL;
        let drsu = case_delta_rsu(y_r, z1, z2_prev, dr_prev);
        let e_rsu = if drsu { e_rsu_prev + dt * plant.q_ru } else { 0.0 };
        let z2 = e_rsu >= plant.e_r - TOL;

        // Generation is possible once startup is complete or was already
        // running, and the remaining power clears the minimum strictly.
        let gen_possible = y_r
            && (z2 || dr_prev)
            && qp[k] - plant.q_ru * f64::from(u8::from(drsu)) > plant.q_rl + TOL;

        // Shutdown must be flagged on the last generating step; with the full
        // trajectory in hand the simulator looks one step ahead, exactly as
        // the optimizer's coupling rows force it to. Past the horizon there
        // is no coupling row, so generation may simply run off the end.
        let continue_next = k + 1 >= horizon_k
            || (plan.y_r[k + 1] == 1 && qp[k + 1] > plant.q_rl + TOL);
        let sd_requested = plan.y_rsd[k] == 1 || !continue_next;

        let mut dr = false;
        let mut drsd = false;
        let mut sd_draw = 0.0f64;
        let mut q_ract = 0.0f64;
        if gen_possible {
            let q_avail0 = qp[k] - plant.q_ru * f64::from(u8::from(drsu));
            if sd_requested {
                if q_avail0 - plant.q_rsd > plant.q_rl + TOL {
                    dr = true;
                    drsd = true;
                    sd_draw = plant.q_rsd;
                    events.push(if plan.y_rsd[k] == 1 || (k + 1 < horizon_k && plan.y_r[k + 1] == 0) || k + 1 == horizon_k {
                        Event::RsdPlanned
                    } else {
                        Event::RsdForced
                    });
                } else {
                    // The draw no longer fits above the minimum: shutdown
                    // completes anyway with whatever power remains.
                    sd_draw = plant.q_rsd.min(q_avail0.max(0.0));
                    events.push(Event::RsdForced);
                }
            } else {
                dr = true;
            }
            if dr {
                let q_avail_gen = q_avail0 - sd_draw;
                q_ract = case_q_ract(plan.q_r_hat[k], q_avail_gen, plant.q_rl);
                if q_ract == 0.0 {
                    // Plan demanded more than available and the fallback sat
                    // at or below the minimum: the receiver cannot run.
                    dr = false;
                    if drsd {
                        drsd = false;
                    }
                    if dr_prev {
                        events.push(Event::RsdForced);
                    }
                }
            }
        } else if dr_prev && !drsd_prev {
            // Resource or commitment vanished without a flagged last step
            // (can only happen at pathological plan/weather combinations).
            sd_draw = plant.q_rsd.min(qp[k].max(0.0));
            events.push(Event::RsdForced);
        }
        if drsu && !drsu_prev {
            events.push(Event::Rsup);
        }

        // --- Power block -----------------------------------------------------
        // Startup-funding check uses the charge as currently intended.
        let phi = s_prev - s_min + dt * q_ract;
        let z7 = phi <= dt * plant.q_c + TOL;
        let dcsu = case_delta_csu(y_c, dc_prev, z6_prev, z7) && plan.q_c_hat[k] >= plant.q_c - TOL;
        let e_csu = if dcsu { e_csu_prev + dt * plant.q_c } else { 0.0 };
        let z6 = e_csu >= plant.e_c - TOL;

        let mut dc = false;
        let mut dcsd = false;
        let mut q_cact = 0.0f64;
        let forced_off_by_plan = plan.y_csd[k] == 1 && dc_prev;
        if (z6 || dc_prev) && !forced_off_by_plan {
            let q_c_target = plan.q_c_hat[k] - plant.q_c * f64::from(u8::from(dcsu));
            let in_envelope =
                q_c_target >= plant.q_l - TOL && q_c_target <= plant.q_u + TOL;
            if in_envelope {
                let q_c_run = q_c_target.clamp(plant.q_l, plant.q_u);
                let s_next =
                    s_prev + dt * (q_ract - q_c_run - plant.q_c * f64::from(u8::from(dcsu)));
                if s_next >= s_min - TOL {
                    dc = true;
                    q_cact = q_c_run;
                } else if dc_prev {
                    events.push(Event::CsdForced);
                }
            } else if dc_prev {
                events.push(Event::CsdForced);
            }
        }
        if dc_prev && !dc {
            dcsd = true;
            if forced_off_by_plan {
                events.push(Event::CsdPlanned);
            }
        }
        if dcsu && !dcsu_prev {
            events.push(Event::Csup);
        }

        // --- Storage update and overcharge curtailment -----------------------
        let outflow = q_cact + plant.q_c * f64::from(u8::from(dcsu));
        let mut storage = s_prev + dt * (q_ract - outflow);
        if storage > plant.e_u + TOL {
            let headroom = (plant.e_u - s_prev) / dt + outflow;
            q_ract = headroom.max(0.0);
            if dr && q_ract < plant.q_rl - TOL {
                dr = false;
                drsd = false;
                q_ract = 0.0;
                events.push(Event::RsdForced);
            }
            storage = s_prev + dt * (q_ract - outflow);
        }
        storage = storage.clamp(s_min.min(s_prev), plant.e_u);

        // --- Dumped power and the electrical side -----------------------------
        let field_use = q_ract + plant.q_ru * f64::from(u8::from(drsu)) + sd_draw;
        let q_dump = (qp[k] - field_use).max(0.0);
        dumped_energy += dt * q_dump;

        let w = plant.eta_p * q_cact
            + f64::from(u8::from(dc)) * (plant.w_u - plant.eta_p * plant.q_u);
        let wd = (w - w_prev).abs();
        let ws = (1.0 - plant.eta_c) * w;
        let sd_active = drsd || sd_draw > 0.0;
        let wp = plant.l_r * (q_ract + plant.q_ru * f64::from(u8::from(drsu)))
            + plant.l_c * q_cact
            + plant.w_h * f64::from(u8::from(dr))
            + plant.e_hs / dt * (f64::from(u8::from(sd_active)) + f64::from(u8::from(drsu)));

        let drsup = drsu && !drsu_prev;
        let dcsup = dcsu && !dcsu_prev;
        let rsd_event = events
            .iter()
            .any(|e| matches!(e, Event::RsdPlanned | Event::RsdForced));

        // --- Profit accounting -------------------------------------------------
        let lambda = costs.lambda_discount.powi(k as i32);
        let p = prices.prices[k];
        let revenue = lambda * dt * p * ws;
        let purchase = lambda * dt * p * wp;
        let r_opex = lambda
            * (dt * costs.c_rec * q_ract + costs.c_rsup * f64::from(u8::from(drsup)));
        let r_sd = lambda * costs.alpha_r_sd * f64::from(u8::from(rsd_event));
        let c_opex = lambda
            * (dt * costs.c_c * w
                + costs.c_dw * wd
                + costs.c_csup * f64::from(u8::from(dcsup)));
        let c_sd = lambda * costs.alpha_c_sd * f64::from(u8::from(dcsd));
        let step_profit = revenue - purchase - r_opex - r_sd - c_opex - c_sd;
        breakdown.revenue += revenue;
        breakdown.purchase_cost += purchase;
        breakdown.receiver_opex += r_opex;
        breakdown.receiver_sd_cost += r_sd;
        breakdown.pb_opex += c_opex;
        breakdown.pb_sd_cost += c_sd;
        breakdown.profit += step_profit;

        steps.push(SimStep {
            k,
            q_pot: qp[k],
            drsup: u8::from(drsup),
            drsu: u8::from(drsu),
            dr: u8::from(dr),
            drsd: u8::from(drsd),
            dcsup: u8::from(dcsup),
            dcsu: u8::from(dcsu),
            dc: u8::from(dc),
            dcsd: u8::from(dcsd),
            q_ract,
            q_cact,
            e_rsu,
            e_csu,
            storage,
            w,
            wd,
            ws,
            wp,
            q_dump,
            step_profit,
            events,
        });

        // Advance state. A startup step that did not transition into
        // generation and does not continue starting up cools back down, so
        // progress only carries while the startup indicator holds.
        dr_prev = dr;
        drsd_prev = drsd;
        z2_prev = z2;
        e_rsu_prev = e_rsu;
        drsu_prev = drsu;
        dc_prev = dc;
        z6_prev = z6;
        e_csu_prev = e_csu;
        dcsu_prev = dcsu;
        s_prev = storage;
        w_prev = w;
    }

    Ok(SimulationResult { steps, breakdown, storage_final: s_prev, dumped_energy })
}
