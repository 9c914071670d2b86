//! Acceptance suite: ten independently runnable criteria covering the
//! optimizer/simulator oracle equivalence, the case-rule linearizations,
//! simulator invariants, benchmark dominance properties, sampling
//! determinism, clustering quality, the statistics kit, the MPS writer, and
//! the end-to-end CLI pipeline.
//!
//! Each test prints exactly one `ACCEPTANCE <n> ...: PASS|FAIL` line (visible
//! with `--nocapture`, or on failure).

use std::collections::BTreeMap;
use std::panic::{catch_unwind, resume_unwind, UnwindSafe};
use std::time::Instant;

use chrono::{Days, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use heliodispatch::bench::{dwa_price, percentile_summary, welch_t_test, ProfitRecord};
use heliodispatch::config::RunConfig;
use heliodispatch::data::{build_two_day_windows, synthetic_weather, ClearSkyParams, PriceProfile};
use heliodispatch::formulation::{
    build_deterministic, build_smilp, case_delta_csu, case_delta_r, case_delta_rsu, case_q_ract,
    extract_control_trajectories, extract_dispatch_plan, scenario_profit, DispatchPlan,
};
use heliodispatch::heuristics::{heuristic_1, perfect_knowledge};
use heliodispatch::milp::{
    solve, write_mps, MilpModel, ObjSense, RowSense, SolverConfig, VarKind,
};
use heliodispatch::plant::{LossModel, WeatherTrajectory};
use heliodispatch::sampling::{
    build_ecdf, k_medoids, k_medoids_brute_force, k_medoids_cost, strata_bounds,
    stratified_sample, Scenario, ScenarioSpace,
};
use heliodispatch::simulator::simulate;

// ---------------------------------------------------------------------------
// Harness
// ---------------------------------------------------------------------------

fn criterion<F: FnOnce() + UnwindSafe>(n: usize, name: &str, body: F) {
    let outcome = catch_unwind(body);
    let verdict = if outcome.is_ok() { "PASS" } else { "FAIL" };
    println!("ACCEPTANCE {n:2} ({name}): {verdict}");
    if let Err(payload) = outcome {
        resume_unwind(payload);
    }
}

// ---------------------------------------------------------------------------
// Shared fixtures
// ---------------------------------------------------------------------------

/// One synthetic day (48 half-hour steps starting at midnight).
fn synthetic_day(seed: u64, dropout: f64) -> WeatherTrajectory {
    let db = synthetic_weather(seed, 1, &ClearSkyParams::default(), dropout).unwrap();
    db.days.values().next().unwrap().clone()
}

/// The 24 daylight steps (06:00-18:00) of a synthetic day.
fn daylight_slice(seed: u64, dropout: f64) -> WeatherTrajectory {
    let day = synthetic_day(seed, dropout);
    WeatherTrajectory::new(
        day.start_timestamp + chrono::Duration::hours(6),
        day.dt_hours,
        day.samples[12..36].to_vec(),
    )
    .unwrap()
}

/// Desk-scale config for the 24-step daylight horizon: lossless receiver so
/// potential power is a pure function of DNI, keeping fixtures predictable.
fn daylight_cfg() -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.horizon_k = 24;
    cfg.dt_hours = 0.5;
    cfg.loss = LossModel::zero();
    cfg.plant.q_pipe = 0.0;
    cfg.solver.mip_gap_target = 0.005;
    cfg.solver.time_limit_s = 600.0;
    cfg.validate().unwrap();
    cfg
}

/// Midday peak (11:00-15:00 of the daylight slice), off-peak elsewhere.
fn daylight_prices() -> PriceProfile {
    PriceProfile {
        prices: (0..24).map(|k| if (10..18).contains(&k) { 120.0 } else { 40.0 }).collect(),
    }
}

fn daylight_space(seeds_dropouts: &[(u64, f64)]) -> ScenarioSpace {
    let scenarios = seeds_dropouts
        .iter()
        .enumerate()
        .map(|(i, &(seed, dropout))| Scenario {
            window_id: NaiveDate::from_ymd_opt(2020, 1, 1)
                .unwrap()
                .checked_add_days(Days::new(i as u64))
                .unwrap(),
            e_in: 0.0,
            trajectory: daylight_slice(seed, dropout),
        })
        .collect();
    ScenarioSpace { scenarios, seed: 0 }
}

fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

// ---------------------------------------------------------------------------
// 1. Optimizer controls replay exactly in the simulator
// ---------------------------------------------------------------------------

#[test]
fn acceptance_01_oracle_equivalence() {
    criterion(1, "optimizer controls replay in the simulator", || {
        let cfg = daylight_cfg();
        let prices = daylight_prices();
        let space = daylight_space(&[(101, 0.0), (102, 0.3), (103, 0.5)]);

        let t0 = Instant::now();
        let (model, map) =
            build_smilp(&cfg.plant, &cfg.costs, &space, &prices, &cfg).unwrap();
        let build_s = t0.elapsed().as_secs_f64();
        assert!(build_s < 5.0, "model build took {build_s:.2}s (budget 5s)");

        let t1 = Instant::now();
        let sol = solve(&model, &cfg.solver).unwrap();
        let solve_s = t1.elapsed().as_secs_f64();
        assert!(solve_s < 600.0, "solve took {solve_s:.1}s (budget 600s)");
        assert!(sol.has_values(), "no incumbent: {}", sol.status.as_str());

        let plan = extract_dispatch_plan(
            &sol,
            &map,
            &cfg.plant,
            cfg.solver.binary_integrality_tolerance,
        )
        .unwrap();

        for (s, scenario) in space.scenarios.iter().enumerate() {
            let ctrl = extract_control_trajectories(
                &sol,
                &map,
                s,
                cfg.solver.binary_integrality_tolerance,
            )
            .unwrap();
            let sim = simulate(&plan, &scenario.trajectory, &prices, &cfg).unwrap();
            for (k, (c, st)) in ctrl.iter().zip(&sim.steps).enumerate() {
                for (name, a, b) in [
                    ("drsup", c.drsup, st.drsup),
                    ("drsu", c.drsu, st.drsu),
                    ("dr", c.dr, st.dr),
                    ("drsd", c.drsd, st.drsd),
                    ("dcsup", c.dcsup, st.dcsup),
                    ("dcsu", c.dcsu, st.dcsu),
                    ("dc", c.dc, st.dc),
                    ("dcsd", c.dcsd, st.dcsd),
                ] {
                    assert_eq!(a, b, "s={s} k={k}: mode {name} diverges ({a} vs {b})");
                }
                for (name, a, b) in [
                    ("q_ract", c.q_ract, st.q_ract),
                    ("q_cact", c.q_cact, st.q_cact),
                    ("storage", c.storage, st.storage),
                    ("e_rsu", c.e_rsu, st.e_rsu),
                    ("e_csu", c.e_csu, st.e_csu),
                    ("w", c.w, st.w),
                    ("wd", c.wd, st.wd),
                    ("ws", c.ws, st.ws),
                    ("wp", c.wp, st.wp),
                ] {
                    assert!(
                        (a - b).abs() <= 1e-6,
                        "s={s} k={k}: {name} diverges ({a} vs {b})"
                    );
                }
            }
            let milp_profit = scenario_profit(&ctrl, &prices, &cfg.costs, cfg.dt_hours);
            let sim_profit = sim.breakdown.profit;
            assert!(
                rel_close(milp_profit, sim_profit, 1e-4),
                "s={s}: profit diverges ({milp_profit} vs {sim_profit})"
            );
        }
    });
}

// ---------------------------------------------------------------------------
// 2. Case rules agree with their big-M linearizations
// ---------------------------------------------------------------------------

fn tiny_solver() -> SolverConfig {
    SolverConfig { time_limit_s: 30.0, ..SolverConfig::default() }
}

fn solve_values(model: &MilpModel) -> BTreeMap<String, f64> {
    let sol = solve(model, &tiny_solver()).unwrap();
    assert!(sol.has_values(), "subproblem infeasible: {}", sol.status.as_str());
    sol.values.unwrap()
}

fn bit(values: &BTreeMap<String, f64>, name: &str) -> bool {
    let v = values[name];
    assert!(v.abs() < 1e-4 || (v - 1.0).abs() < 1e-4, "{name} = {v} not binary");
    v > 0.5
}

/// Receiver-startup trigger subproblem: the four upper arms plus the forcing
/// arm pin the mode variable to a unique value for every input combination.
fn startup_trigger_case(y: bool, z1: bool, z2p: bool, drp: bool) -> bool {
    let mut m = MilpModel::new("startup_trigger");
    let d = m.add_variable("d", VarKind::Binary, 0.0, 1.0).unwrap();
    let f = f64::from;
    m.add_row("force", RowSense::Ge, f(y) - f(z1) - f(z2p) - f(drp), &[(d, 1.0)]).unwrap();
    m.add_row("plan", RowSense::Le, f(y), &[(d, 1.0)]).unwrap();
    m.add_row("blocked", RowSense::Le, 1.0 - f(z1), &[(d, 1.0)]).unwrap();
    m.add_row("warm", RowSense::Le, 1.0 - f(z2p), &[(d, 1.0)]).unwrap();
    m.add_row("running", RowSense::Le, 1.0 - f(drp), &[(d, 1.0)]).unwrap();
    m.set_objective(&[], ObjSense::Maximize).unwrap();
    bit(&solve_values(&m), "d")
}

/// Receiver-generation gate subproblem (z2 and the carried generation flag
/// never hold together in the full model, so that corner is not sampled).
fn generation_gate_case(y: bool, z2: bool, drp: bool, z3: bool) -> bool {
    let mut m = MilpModel::new("generation_gate");
    let d = m.add_variable("d", VarKind::Binary, 0.0, 1.0).unwrap();
    let f = f64::from;
    m.add_row("force", RowSense::Ge, f(y) + f(z2) + f(drp) - f(z3) - 1.0, &[(d, 1.0)])
        .unwrap();
    m.add_row("plan", RowSense::Le, f(y), &[(d, 1.0)]).unwrap();
    m.add_row("warm", RowSense::Le, f(z2) + f(drp), &[(d, 1.0)]).unwrap();
    m.add_row("starved", RowSense::Le, 1.0 - f(z3), &[(d, 1.0)]).unwrap();
    m.set_objective(&[], ObjSense::Maximize).unwrap();
    bit(&solve_values(&m), "d")
}

/// Power-block startup trigger subproblem.
fn pb_trigger_case(y: bool, dcp: bool, z6p: bool, z7: bool) -> bool {
    let mut m = MilpModel::new("pb_trigger");
    let d = m.add_variable("d", VarKind::Binary, 0.0, 1.0).unwrap();
    let f = f64::from;
    m.add_row("force", RowSense::Ge, f(y) - f(dcp) - f(z6p) - f(z7), &[(d, 1.0)]).unwrap();
    m.add_row("plan", RowSense::Le, f(y), &[(d, 1.0)]).unwrap();
    m.add_row("running", RowSense::Le, 1.0 - f(dcp), &[(d, 1.0)]).unwrap();
    m.add_row("warm", RowSense::Le, 1.0 - f(z6p), &[(d, 1.0)]).unwrap();
    m.add_row("unfunded", RowSense::Le, 1.0 - f(z7), &[(d, 1.0)]).unwrap();
    m.set_objective(&[], ObjSense::Maximize).unwrap();
    bit(&solve_values(&m), "d")
}

/// One receiver step with the generation gate, envelope, switch definitions,
/// and charge-tracking rows; returns (generating, actual charge).
fn receiver_step_subproblem(
    z2: bool,
    drp: bool,
    q_pot: f64,
    q_hat: f64,
    q_rl: f64,
    q_rlim: f64,
    eps: f64,
) -> (bool, f64) {
    let big = 1.05 * (q_pot + q_hat + q_rlim);
    let mut m = MilpModel::new("receiver_step");
    let d = m.add_variable("d", VarKind::Binary, 0.0, 1.0).unwrap();
    let z3 = m.add_variable("z3", VarKind::Binary, 0.0, 1.0).unwrap();
    let z4 = m.add_variable("z4", VarKind::Binary, 0.0, 1.0).unwrap();
    let z5 = m.add_variable("z5", VarKind::Binary, 0.0, 1.0).unwrap();
    let qract = m.add_variable("qract", VarKind::Continuous, 0.0, q_rlim).unwrap();
    let qag = m.add_variable("qag", VarKind::Continuous, 0.0, f64::INFINITY).unwrap();
    let f = f64::from;
    // Switch on the (constant) available power.
    m.add_row("z3_lo", RowSense::Le, q_rl + big - q_pot, &[(z3, big)]).unwrap();
    m.add_row("z3_hi", RowSense::Ge, q_rl + eps - q_pot, &[(z3, big)]).unwrap();
    // Generation gate.
    m.add_row("force", RowSense::Ge, f(z2) + f(drp), &[(d, 1.0), (z3, 1.0)]).unwrap();
    m.add_row("warm", RowSense::Le, f(z2) + f(drp), &[(d, 1.0)]).unwrap();
    m.add_row("starved", RowSense::Le, 1.0, &[(d, 1.0), (z3, 1.0)]).unwrap();
    // Generation envelope.
    m.add_row("env_lo", RowSense::Ge, 0.0, &[(qract, 1.0), (d, -q_rl)]).unwrap();
    m.add_row("env_hi", RowSense::Le, 0.0, &[(qract, 1.0), (d, -q_rlim)]).unwrap();
    // Generation-available power and its switches.
    m.add_row("qag_def", RowSense::Eq, 0.0, &[(qag, 1.0), (d, -q_pot)]).unwrap();
    m.add_row("z4_lo", RowSense::Le, q_rl + big, &[(qag, 1.0), (z4, big)]).unwrap();
    m.add_row("z4_hi", RowSense::Ge, q_rl + eps, &[(qag, 1.0), (z4, big)]).unwrap();
    m.add_row("z5_lo", RowSense::Ge, -big - q_hat, &[(qag, -1.0), (z5, -big)]).unwrap();
    m.add_row("z5_hi", RowSense::Le, -eps - q_hat, &[(qag, -1.0), (z5, -big)]).unwrap();
    // Charge tracking.
    m.add_row(
        "track_avail_hi",
        RowSense::Le,
        big,
        &[(qract, 1.0), (qag, -1.0), (z4, -big), (z5, big)],
    )
    .unwrap();
    m.add_row(
        "track_avail_lo",
        RowSense::Ge,
        -big,
        &[(qract, 1.0), (qag, -1.0), (z4, big), (z5, -big)],
    )
    .unwrap();
    m.add_row("track_plan_hi", RowSense::Le, q_hat, &[(qract, 1.0), (z5, -big)]).unwrap();
    m.add_row("track_plan_lo", RowSense::Ge, q_hat, &[(qract, 1.0), (z5, big)]).unwrap();
    m.set_objective(&[], ObjSense::Maximize).unwrap();
    let values = solve_values(&m);
    (bit(&values, "d"), values["qract"])
}

#[test]
fn acceptance_02_case_rules_match_linearizations() {
    criterion(2, "case rules match their big-M subproblems", || {
        let (q_rl, q_rlim, eps) = (175.0, 700.0, 1e-3);
        let failures: usize = (0..1000u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha12Rng::seed_from_u64(0xACCE_0002 ^ i);
                let b = |rng: &mut ChaCha12Rng| rng.gen_bool(0.5);
                let ok = match i % 4 {
                    0 => {
                        let (y, z1, z2p, drp) =
                            (b(&mut rng), b(&mut rng), b(&mut rng), b(&mut rng));
                        startup_trigger_case(y, z1, z2p, drp)
                            == case_delta_rsu(y, z1, z2p, drp)
                    }
                    1 => {
                        // z2 (startup just completed) and a carried generation
                        // flag are mutually exclusive states.
                        let (z2, drp) =
                            [(false, false), (false, true), (true, false)][rng.gen_range(0..3)];
                        let (y, z3) = (b(&mut rng), b(&mut rng));
                        generation_gate_case(y, z2, drp, z3)
                            == case_delta_r(y, z2, drp, z3)
                    }
                    2 => {
                        let (y, dcp, z6p, z7) =
                            (b(&mut rng), b(&mut rng), b(&mut rng), b(&mut rng));
                        pb_trigger_case(y, dcp, z6p, z7) == case_delta_csu(y, dcp, z6p, z7)
                    }
                    _ => {
                        let (z2, drp) = [(false, true), (true, false)][rng.gen_range(0..2)];
                        // Keep clear of the epsilon bands around the minimum
                        // load and around the plan/available crossover.
                        let q_pot = loop {
                            let q: f64 = rng.gen_range(0.0..900.0);
                            if (q - q_rl).abs() > 0.01 {
                                break q;
                            }
                        };
                        let q_hat = loop {
                            let q: f64 = rng.gen_range(q_rl..=q_rlim);
                            if (q - q_pot).abs() > 0.01 {
                                break q;
                            }
                        };
                        let (d, qract) =
                            receiver_step_subproblem(z2, drp, q_pot, q_hat, q_rl, q_rlim, eps);
                        let z3 = q_pot < q_rl;
                        let d_expect = case_delta_r(true, z2, drp, z3);
                        let q_expect = if d_expect {
                            case_q_ract(q_hat, q_pot, q_rl)
                        } else {
                            0.0
                        };
                        d == d_expect && (qract - q_expect).abs() <= 1e-6
                    }
                };
                usize::from(!ok)
            })
            .sum();
        assert_eq!(failures, 0, "{failures}/1000 subproblems disagree with the case rules");
    });
}

// ---------------------------------------------------------------------------
// 3. Simulator invariants under random plans and weather
// ---------------------------------------------------------------------------

#[test]
fn acceptance_03_simulator_invariants() {
    criterion(3, "simulator invariants over random plan x weather", || {
        let mut cfg = RunConfig::default();
        cfg.horizon_k = 48;
        cfg.dt_hours = 0.5;
        cfg.validate().unwrap();
        let prices = heliodispatch::data::two_tier_price_profile(
            cfg.horizon_k,
            cfg.dt_hours,
            &cfg.prices.peak_windows,
            cfg.prices.peak_price,
            cfg.prices.offpeak_price,
        )
        .unwrap();
        let plant = cfg.plant.clone();
        let s_min = plant.soc_min * plant.e_u;
        let tol = 1e-9;
        let mut rng = ChaCha12Rng::seed_from_u64(0xACCE_0003);
        for trial in 0..500 {
            let plan = DispatchPlan::random(&plant, cfg.horizon_k, &mut rng);
            let traj = synthetic_day(rng.gen(), rng.gen_range(0.0..0.6));
            let sim = simulate(&plan, &traj, &prices, &cfg).unwrap();
            for st in &sim.steps {
                assert!(
                    st.storage >= s_min - tol && st.storage <= plant.e_u + tol,
                    "trial {trial} k={}: storage {} outside [{s_min}, {}]",
                    st.k,
                    st.storage,
                    plant.e_u
                );
                assert!(
                    st.q_ract.abs() <= tol
                        || (st.q_ract >= plant.q_rl - tol && st.q_ract <= plant.q_rlim + tol),
                    "trial {trial} k={}: q_ract {} outside 0 or [{}, {}]",
                    st.k,
                    st.q_ract,
                    plant.q_rl,
                    plant.q_rlim
                );
                assert!(
                    st.q_cact.abs() <= tol
                        || (st.q_cact >= plant.q_l - tol && st.q_cact <= plant.q_u + tol),
                    "trial {trial} k={}: q_cact {} outside 0 or [{}, {}]",
                    st.k,
                    st.q_cact,
                    plant.q_l,
                    plant.q_u
                );
            }
        }
    });
}

// ---------------------------------------------------------------------------
// 4. Perfect knowledge dominates fixed plans
// ---------------------------------------------------------------------------

#[test]
fn acceptance_04_perfect_knowledge_dominates() {
    criterion(4, "perfect knowledge dominates fixed plans", || {
        let cfg = daylight_cfg();
        let prices = daylight_prices();
        let space = daylight_space(&[(301, 0.0), (302, 0.25), (303, 0.45)]);

        let (model, map) =
            build_smilp(&cfg.plant, &cfg.costs, &space, &prices, &cfg).unwrap();
        let sol = solve(&model, &cfg.solver).unwrap();
        let smilp = extract_dispatch_plan(
            &sol,
            &map,
            &cfg.plant,
            cfg.solver.binary_integrality_tolerance,
        )
        .unwrap();
        let (h1, _) = heuristic_1(&space, &prices, &cfg).unwrap();
        let fixed = [("smilp", smilp), ("h1", h1), ("all_off", DispatchPlan::all_off(24))];

        let testing: Vec<WeatherTrajectory> = (0..10)
            .map(|i| daylight_slice(400 + i, 0.05 * i as f64))
            .collect();
        for (t, traj) in testing.iter().enumerate() {
            let pk = perfect_knowledge(traj, &prices, &cfg).unwrap();
            let pk_profit = simulate(&pk, traj, &prices, &cfg).unwrap().profit();
            for (name, plan) in &fixed {
                let profit = simulate(plan, traj, &prices, &cfg).unwrap().profit();
                let allowance = 0.01 * pk_profit.abs().max(1.0);
                assert!(
                    pk_profit >= profit - allowance,
                    "trajectory {t}: {name} ({profit}) beats perfect knowledge ({pk_profit}) \
                     beyond the combined solver gap"
                );
            }
        }
    });
}

// ---------------------------------------------------------------------------
// 5. Stochastic plan wins in-sample
// ---------------------------------------------------------------------------

#[test]
fn acceptance_05_stochastic_plan_wins_in_sample() {
    criterion(5, "stochastic plan is in-sample at least as good as heuristics", || {
        let cfg = daylight_cfg();
        let prices = daylight_prices();
        let space = daylight_space(&[(501, 0.0), (502, 0.3), (503, 0.5)]);

        let (model, map) =
            build_smilp(&cfg.plant, &cfg.costs, &space, &prices, &cfg).unwrap();
        let sol = solve(&model, &cfg.solver).unwrap();
        let smilp = extract_dispatch_plan(
            &sol,
            &map,
            &cfg.plant,
            cfg.solver.binary_integrality_tolerance,
        )
        .unwrap();
        let smilp_mean = space
            .scenarios
            .iter()
            .map(|s| simulate(&smilp, &s.trajectory, &prices, &cfg).unwrap().profit())
            .sum::<f64>()
            / space.n_s() as f64;

        let (_, table) = heuristic_1(&space, &prices, &cfg).unwrap();
        let best_heuristic =
            table.row_means().into_iter().fold(f64::NEG_INFINITY, f64::max);
        let allowance = 0.01 * smilp_mean.abs().max(1.0);
        assert!(
            smilp_mean >= best_heuristic - allowance,
            "in-sample SAA: stochastic plan {smilp_mean} < best heuristic {best_heuristic}"
        );
    });
}

// ---------------------------------------------------------------------------
// 6. Stratified sampling is balanced and reproducible
// ---------------------------------------------------------------------------

#[test]
fn acceptance_06_stratified_sampling_deterministic() {
    criterion(6, "stratified sampling is balanced and bit-reproducible", || {
        let cfg = RunConfig::default();
        // 31 January days yield 30 overlapping two-day windows.
        let db = synthetic_weather(6001, 31, &ClearSkyParams::default(), 0.25).unwrap();
        let windows = build_two_day_windows(&db, 1).unwrap();
        assert_eq!(windows.len(), 30);

        let bounds = strata_bounds(30, 5);
        assert_eq!(
            bounds.iter().map(|&(_, len)| len).collect::<Vec<_>>(),
            vec![6, 6, 6, 6, 6],
            "strata sizes must be 6,6,6,6,6"
        );

        let ecdf = build_ecdf(&windows, &cfg.plant, &cfg.loss, &cfg.efficiency).unwrap();
        let space = stratified_sample(&ecdf, &windows, 5, 77).unwrap();
        assert_eq!(space.n_s(), 5);
        // Each scenario must come from its own stratum of the energy ECDF.
        for (s, scenario) in space.scenarios.iter().enumerate() {
            let pos = ecdf
                .entries
                .iter()
                .position(|e| e.window_id == scenario.window_id)
                .expect("scenario window present in the ECDF");
            let (start, len) = bounds[s];
            assert!(
                (start..start + len).contains(&pos),
                "scenario {s} drawn from ECDF rank {pos}, outside stratum [{start}, {})",
                start + len
            );
        }

        let rerun = stratified_sample(&ecdf, &windows, 5, 77).unwrap();
        for (a, b) in space.scenarios.iter().zip(&rerun.scenarios) {
            assert_eq!(a.window_id, b.window_id);
            assert_eq!(a.e_in.to_bits(), b.e_in.to_bits(), "e_in must be bit-identical");
            let dni_bits = |t: &WeatherTrajectory| {
                t.samples.iter().map(|s| s.dni.to_bits()).collect::<Vec<_>>()
            };
            assert_eq!(dni_bits(&a.trajectory), dni_bits(&b.trajectory));
        }
    });
}

// ---------------------------------------------------------------------------
// 7. k-medoids quality
// ---------------------------------------------------------------------------

#[test]
fn acceptance_07_k_medoids_quality() {
    criterion(7, "k-medoids is near-optimal and hits the fixture", || {
        let mut rng = ChaCha12Rng::seed_from_u64(0xACCE_0007);
        for trial in 0..50 {
            let n = rng.gen_range(3..=8);
            let dim = rng.gen_range(1..=4);
            let k = rng.gen_range(1..=n - 1);
            let profiles: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..dim).map(|_| rng.gen_range(-10.0..10.0)).collect())
                .collect();
            let medoids = k_medoids(&profiles, k, 100, 0).unwrap();
            let cost = k_medoids_cost(&profiles, &medoids);
            let (_, best) = k_medoids_brute_force(&profiles, k).unwrap();
            assert!(
                cost <= 1.25 * best + 1e-12,
                "trial {trial}: cost {cost} > 1.25 x optimal {best}"
            );
        }

        let profiles: Vec<Vec<f64>> =
            [0.0, 1.0, 2.0, 10.0, 11.0, 12.0].iter().map(|&v| vec![v]).collect();
        let medoids = k_medoids(&profiles, 2, 100, 0).unwrap();
        let values: Vec<f64> = medoids.iter().map(|&i| profiles[i][0]).collect();
        assert_eq!(values, vec![1.0, 11.0], "two-cluster fixture must pick 1 and 11");
    });
}

// ---------------------------------------------------------------------------
// 8. Statistics kit fixtures
// ---------------------------------------------------------------------------

#[test]
fn acceptance_08_statistics_fixtures() {
    criterion(8, "statistics kit matches hand-computed fixtures", || {
        // Welch on identical samples: t = 0, p = 1.
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let (t, _, p) = welch_t_test(&a, &a).unwrap();
        assert!(t.abs() <= 1e-12, "t = {t}");
        assert!((p - 1.0).abs() <= 1e-12, "p = {p}");

        // Percentiles of 1..=100 with linear interpolation.
        let values: Vec<f64> = (1..=100).map(f64::from).collect();
        let s = percentile_summary(&values).unwrap();
        assert!((s.mean - 50.5).abs() <= 1e-9);
        assert!((s.p2_5 - 3.475).abs() <= 1e-9, "p2.5 = {}", s.p2_5);
        assert!((s.median - 50.5).abs() <= 1e-9, "median = {}", s.median);
        assert!((s.p97_5 - 97.525).abs() <= 1e-9, "p97.5 = {}", s.p97_5);

        // Dispatch-weighted average price: 100 MWh at 60 plus 100 MWh at 120.
        let record = |revenue: f64| ProfitRecord {
            window_id: NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(),
            revenue,
            purchase_cost: 0.0,
            receiver_cost: 0.0,
            pb_cost: 0.0,
            profit: revenue,
            dispatched_mwh: 100.0,
            n_rsup: 0,
            n_rsd_forced: 0,
            n_csup: 0,
            n_csd_forced: 0,
            runtime_s: 0.0,
        };
        let dwa = dwa_price(&[record(6000.0), record(12000.0)]).unwrap();
        assert!((dwa - 90.0).abs() <= 1e-12, "dwa = {dwa}");
        assert_eq!(dwa_price(&[]), None);
    });
}

// ---------------------------------------------------------------------------
// 9. MPS writer golden file and independent re-read
// ---------------------------------------------------------------------------

/// Deliberately separate bare-bones MPS reader (not the library parser):
/// recovers row/variable names and all nonzero coefficients.
struct NaiveMps {
    rows: Vec<String>,
    columns: Vec<String>,
    coeffs: BTreeMap<(String, String), f64>,
    rhs: BTreeMap<String, f64>,
}

fn naive_read_mps(text: &str) -> NaiveMps {
    let mut section = String::new();
    let mut out = NaiveMps {
        rows: Vec::new(),
        columns: Vec::new(),
        coeffs: BTreeMap::new(),
        rhs: BTreeMap::new(),
    };
    for line in text.lines() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if !line.starts_with(' ') || ["ROWS", "COLUMNS", "RHS", "BOUNDS", "OBJSENSE", "ENDATA"]
            .contains(&trimmed)
        {
            section = trimmed.split_whitespace().next().unwrap().to_string();
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        match section.as_str() {
            "ROWS" => {
                if fields[0] != "N" {
                    out.rows.push(fields[1].to_string());
                }
            }
            "COLUMNS" => {
                if fields.get(1).copied() == Some("'MARKER'") {
                    continue;
                }
                let (col, row, value) = (fields[0], fields[1], fields[2]);
                if !out.columns.iter().any(|c| c == col) {
                    out.columns.push(col.to_string());
                }
                if row != "OBJ" || value.parse::<f64>().unwrap() != 0.0 {
                    out.coeffs
                        .insert((row.to_string(), col.to_string()), value.parse().unwrap());
                }
            }
            "RHS" => {
                out.rhs.insert(fields[1].to_string(), fields[2].parse().unwrap());
            }
            _ => {}
        }
    }
    out
}

/// A small deterministic model over eight midday steps; both the golden file
/// and the independent reader check work off this fixture.
fn golden_fixture_model() -> MilpModel {
    let mut cfg = RunConfig::default();
    cfg.horizon_k = 8;
    cfg.dt_hours = 0.5;
    cfg.loss = LossModel::zero();
    cfg.plant.q_pipe = 0.0;
    cfg.validate().unwrap();
    let day = synthetic_day(9, 0.2);
    let traj = WeatherTrajectory::new(
        day.start_timestamp + chrono::Duration::hours(10),
        day.dt_hours,
        day.samples[20..28].to_vec(),
    )
    .unwrap();
    let prices = PriceProfile {
        prices: vec![40.0, 40.0, 120.0, 120.0, 120.0, 120.0, 40.0, 40.0],
    };
    let (model, _) =
        build_deterministic(&cfg.plant, &cfg.costs, &traj, &prices, &cfg).unwrap();
    model
}

#[test]
#[ignore = "rewrites tests/golden/acceptance_model.mps; run only after a deliberate format change"]
fn regenerate_golden_mps() {
    let text = write_mps(&golden_fixture_model()).unwrap();
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden/acceptance_model.mps");
    std::fs::write(path, text).unwrap();
}

#[test]
fn acceptance_09_mps_writer_golden() {
    criterion(9, "MPS output is stable and re-readable", || {
        let model = golden_fixture_model();
        let text = write_mps(&model).unwrap();
        assert_eq!(text, write_mps(&model).unwrap(), "writer must be deterministic");
        let golden = include_str!("golden/acceptance_model.mps");
        assert_eq!(text, golden, "MPS output drifted from the golden file");

        let naive = naive_read_mps(&text);
        let (n_vars, n_rows) = model.dimensions();
        assert_eq!(naive.columns.len(), n_vars, "variable count");
        assert_eq!(naive.rows.len(), n_rows, "row count");
        let mut seen = 0usize;
        for row in &model.rows {
            for &(h, c) in &row.coeffs {
                let key = (row.name.clone(), model.variables[h].name.clone());
                let got = naive.coeffs.get(&key).copied().unwrap_or_else(|| {
                    panic!("coefficient ({}, {}) missing", key.0, key.1)
                });
                assert!(
                    (got - c).abs() <= 1e-12 * c.abs().max(1.0),
                    "coefficient ({}, {}): {got} vs {c}",
                    key.0,
                    key.1
                );
                seen += 1;
            }
            let rhs = naive.rhs.get(&row.name).copied().unwrap_or(0.0);
            assert!(
                (rhs - row.rhs).abs() <= 1e-12 * row.rhs.abs().max(1.0),
                "rhs of {}: {rhs} vs {}",
                row.name,
                row.rhs
            );
        }
        let row_nonzeros =
            naive.coeffs.keys().filter(|(r, _)| r != "OBJ").count();
        assert_eq!(row_nonzeros, seen, "reader found extra row coefficients");
    });
}

// ---------------------------------------------------------------------------
// 10. End-to-end CLI pipeline
// ---------------------------------------------------------------------------

#[test]
fn acceptance_10_cli_pipeline() {
    criterion(10, "CLI sample -> optimize -> simulate -> bench pipeline", || {
        let started = Instant::now();
        let root = std::env::temp_dir().join(format!("hd-acceptance-{}", std::process::id()));
        std::fs::create_dir_all(&root).unwrap();
        let out_dir = root.join("runs");
        let config_path = root.join("config.json");
        std::fs::write(
            &config_path,
            serde_json::json!({
                "horizon_k": 48,
                "dt_hours": 1.0,
                "seed": 7,
                "output_dir": out_dir,
                "weather": {
                    "synthetic": { "dt_hours": 1.0 },
                    "synthetic_days": 8,
                    "synthetic_cloud_dropout": 0.2
                },
                "sampling": { "month": 1, "n_s": 3 },
                "solver": { "time_limit_s": 600.0, "mip_gap_target": 0.01 }
            })
            .to_string(),
        )
        .unwrap();

        let run = |args: &[&str]| -> String {
            let output = std::process::Command::new(env!("CARGO_BIN_EXE_heliodispatch"))
                .arg("--config")
                .arg(&config_path)
                .args(args)
                .output()
                .unwrap();
            assert!(
                output.status.success(),
                "`{}` failed with {:?}:\n{}",
                args.join(" "),
                output.status.code(),
                String::from_utf8_lossy(&output.stderr)
            );
            String::from_utf8(output.stdout).unwrap()
        };

        let scenarios = run(&["sample"]).lines().last().unwrap().trim().to_string();
        let plan = run(&["optimize", "--manifest", &scenarios])
            .lines()
            .last()
            .unwrap()
            .trim()
            .to_string();
        let profits = run(&["simulate", "--plan", &plan, "--manifest", &scenarios])
            .lines()
            .last()
            .unwrap()
            .trim()
            .to_string();
        run(&["bench", "--plans", &plan, "--category", "scenario", "--manifest", &scenarios]);

        // Per-scenario component identity in the simulation output.
        let profits: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&profits).unwrap()).unwrap();
        for entry in profits["runs"].as_array().unwrap() {
            let b = &entry["breakdown"];
            let get = |k: &str| b[k].as_f64().unwrap();
            let recomposed = get("revenue")
                - get("purchase_cost")
                - get("receiver_opex")
                - get("receiver_sd_cost")
                - get("pb_opex")
                - get("pb_sd_cost");
            assert!(
                (recomposed - get("profit")).abs() <= 1e-9,
                "profit components do not recompose: {recomposed} vs {}",
                get("profit")
            );
        }

        // Mean component identity in the benchmark report.
        let report_path = std::fs::read_dir(&out_dir)
            .unwrap()
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.file_name().unwrap().to_string_lossy().ends_with("-bench"))
            .max()
            .expect("bench run directory")
            .join("report.json");
        let report: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(report_path).unwrap()).unwrap();
        for plan in report["plans"].as_array().unwrap() {
            let mean = |k: &str| plan[k]["mean"].as_f64().unwrap();
            let recomposed = mean("revenue")
                - mean("purchase_cost")
                - mean("receiver_cost")
                - mean("pb_cost");
            assert!(
                (recomposed - mean("profit")).abs() <= 1e-9,
                "report means do not recompose for {}",
                plan["plan"]
            );
        }

        let elapsed = started.elapsed().as_secs_f64();
        assert!(elapsed < 1200.0, "pipeline took {elapsed:.0}s (budget 20 min)");
        std::fs::remove_dir_all(&root).ok();
    });
}
