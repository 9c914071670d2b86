//! Batch front end: weather generation, scenario sampling, optimization,
//! simulation, benchmarking, and the Heuristic-2 sensitivity sweep.
//!
//! Every run creates a timestamped directory under the configured output
//! root and writes a manifest echoing the fully resolved configuration, so
//! any run can be reproduced from its artifacts alone.
//!
//! Exit codes: 0 success, 1 infeasible/solver limit, 2 usage or config
//! error, 3 I/O error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Parser, Subcommand, ValueEnum};

use heliodispatch::bench::{
    evaluate_plan, sensitivity_csv, sensitivity_h2, sensitivity_svg, EvaluationReport, PlanSource,
};
use heliodispatch::config::RunConfig;
use heliodispatch::data::{
    build_two_day_windows, load_weather_csv, partition_history, synthetic_weather,
    two_tier_price_profile, HistoryDatabase, PriceProfile, SplitRule, WeatherWindow,
};
use heliodispatch::error::Error;
use heliodispatch::formulation::{
    build_deterministic, build_smilp, extract_dispatch_plan, DispatchPlan,
};
use heliodispatch::heuristics::{heuristic_1, heuristic_2, heuristic_3};
use heliodispatch::milp::{solve, solve_mps_file, write_mps, write_solution_file, SolutionStatus};
use heliodispatch::plant::WeatherTrajectory;
use heliodispatch::sampling::{build_ecdf, stratified_sample, ScenarioSpace};
use heliodispatch::simulator::simulate;

#[derive(Parser)]
#[command(name = "heliodispatch", version, about = "CST dispatch-planning toolkit")]
struct Cli {
    /// JSON run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: logical cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OptimizeMode {
    Smilp,
    Deterministic,
}

#[derive(Clone, Copy, ValueEnum)]
enum Category {
    Scenario,
    Sampling,
    Testing,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic weather CSV from the config's sky model.
    GenWeather {
        /// Output CSV path.
        #[arg(long, default_value = "weather.csv")]
        out: PathBuf,
    },
    /// Build the month's ECDF and stratified scenario space.
    Sample {
        #[arg(long)]
        month: Option<u32>,
        #[arg(long)]
        n_s: Option<usize>,
    },
    /// Build and solve the dispatch program over a sampled scenario space.
    Optimize {
        /// Manifest written by `sample`.
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, value_enum, default_value = "smilp")]
        mode: OptimizeMode,
    },
    /// Execute a plan against scenario weather and write traces.
    Simulate {
        /// Plan JSON written by `optimize`.
        #[arg(long)]
        plan: PathBuf,
        /// Manifest holding the weather scenarios.
        #[arg(long)]
        manifest: PathBuf,
        /// Scenario index; all scenarios when omitted.
        #[arg(long)]
        scenario: Option<usize>,
    },
    /// Evaluate plans (plus PK) across a weather-set category.
    Bench {
        /// Plan JSON files, labelled by file stem.
        #[arg(long, value_delimiter = ',')]
        plans: Vec<PathBuf>,
        /// Also run heuristics 1-3 as competitors.
        #[arg(long)]
        heuristics: bool,
        #[arg(long, value_enum)]
        category: Category,
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Heuristic-2 subset-size sensitivity sweep.
    Sensitivity {
        #[arg(long, value_delimiter = ',')]
        sizes: Vec<usize>,
    },
    /// Solve a bare MPS file (external-adapter entry point).
    SolveMps {
        mps: PathBuf,
        solution: PathBuf,
        #[arg(long, default_value_t = 3600.0)]
        time_limit: f64,
        #[arg(long, default_value_t = 0.005)]
        mip_gap: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: --jobs: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config(_) | Error::Parse(_) => 2,
                Error::Io(_) | Error::Csv(_) | Error::Json(_) => 3,
                Error::Model(_) | Error::Solver(_) | Error::NoSolution(_) => 1,
            })
        }
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<RunConfig, Error> {
    match path {
        Some(p) => RunConfig::load(p),
        None => {
            let cfg = RunConfig::default();
            cfg.validate()?;
            Ok(cfg)
        }
    }
}

/// Creates `<output_dir>/<utc-stamp>-<label>/` and writes the run manifest.
fn run_dir(cfg: &RunConfig, label: &str) -> Result<PathBuf, Error> {
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%S%.3f");
    let dir = cfg.output_dir.join(format!("{stamp}-{label}"));
    std::fs::create_dir_all(&dir)?;
    let manifest = serde_json::json!({
        "command": std::env::args().collect::<Vec<_>>(),
        "seed": cfg.seed,
        "resolved": cfg.annotated_echo(),
    });
    write_json(&dir.join("run_manifest.json"), &manifest)?;
    Ok(dir)
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), Error> {
    std::fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

fn resolve_history(cfg: &RunConfig) -> Result<HistoryDatabase, Error> {
    match &cfg.weather.csv_path {
        Some(p) => load_weather_csv(p, &cfg.weather.schema),
        None => synthetic_weather(
            cfg.seed,
            cfg.weather.synthetic_days,
            &cfg.weather.synthetic,
            cfg.weather.synthetic_cloud_dropout,
        ),
    }
}

/// Splits history into sampling/testing windows; with no explicit split
/// every day lands in the sampling set.
fn resolve_windows(
    cfg: &RunConfig,
    db: &HistoryDatabase,
) -> Result<(Vec<WeatherWindow>, Vec<WeatherWindow>), Error> {
    let all = build_two_day_windows(db, cfg.sampling.month)?;
    let is_default_empty = matches!(
        &cfg.weather.partition,
        SplitRule::Explicit { sampling, testing } if sampling.is_empty() && testing.is_empty()
    );
    if is_default_empty {
        return Ok((all, Vec::new()));
    }
    let partition = partition_history(&all, &cfg.weather.partition)?;
    let split = |set: &std::collections::BTreeSet<NaiveDate>| {
        all.iter().filter(|w| set.contains(&w.start_day)).cloned().collect::<Vec<_>>()
    };
    Ok((split(&partition.sampling), split(&partition.testing)))
}

fn price_profile(cfg: &RunConfig) -> Result<PriceProfile, Error> {
    two_tier_price_profile(
        cfg.horizon_k,
        cfg.dt_hours,
        &cfg.prices.peak_windows,
        cfg.prices.peak_price,
        cfg.prices.offpeak_price,
    )
}

fn load_space(path: &Path) -> Result<ScenarioSpace, Error> {
    let text = std::fs::read_to_string(path)?;
    let manifest: serde_json::Value = serde_json::from_str(&text)?;
    let space: ScenarioSpace = serde_json::from_value(manifest["scenario_space"].clone())
        .map_err(|e| Error::parse(format!("{}: no scenario_space: {e}", path.display())))?;
    space.validate()?;
    Ok(space)
}

fn load_plan(path: &Path, cfg: &RunConfig) -> Result<DispatchPlan, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|_| Error::config(format!("plan file {} not readable", path.display())))?;
    let plan: DispatchPlan = serde_json::from_str(&text)?;
    plan.validate(&cfg.plant)?;
    Ok(plan)
}

fn run(cli: &Cli) -> Result<(), Error> {
    let cfg = load_config(&cli.config)?;
    match &cli.command {
        Command::GenWeather { out } => {
            let db = resolve_history(&cfg)?;
            heliodispatch::data::write_weather_csv(&db, out, &cfg.weather.schema)?;
            println!("wrote {} days to {}", db.days.len(), out.display());
            Ok(())
        }
        Command::Sample { month, n_s } => {
            let mut cfg = cfg;
            if let Some(m) = month {
                cfg.sampling.month = *m;
            }
            if let Some(n) = n_s {
                cfg.sampling.n_s = *n;
            }
            cfg.validate()?;
            let dir = run_dir(&cfg, "sample")?;
            let db = resolve_history(&cfg)?;
            let (sampling, _) = resolve_windows(&cfg, &db)?;
            let ecdf =
                build_ecdf(&sampling, &cfg.plant, &cfg.loss, &cfg.efficiency)?;
            let space = stratified_sample(&ecdf, &sampling, cfg.sampling.n_s, cfg.seed)?;
            // ECDF data for plotting/audit.
            let mut w = csv::Writer::from_path(dir.join("ecdf.csv"))?;
            w.write_record(["window_id", "e_in_mwh", "cum_probability"])?;
            for (i, e) in ecdf.entries.iter().enumerate() {
                w.write_record([
                    e.window_id.to_string(),
                    e.e_in.to_string(),
                    ((i + 1) as f64 / ecdf.len() as f64).to_string(),
                ])?;
            }
            w.flush()?;
            let manifest = serde_json::json!({
                "month": cfg.sampling.month,
                "n_s": cfg.sampling.n_s,
                "seed": cfg.seed,
                "selected_windows": space.scenarios.iter()
                    .map(|s| s.window_id.to_string()).collect::<Vec<_>>(),
                "scenario_space": space,
            });
            write_json(&dir.join("scenarios.json"), &manifest)?;
            println!("{}", dir.join("scenarios.json").display());
            Ok(())
        }
        Command::Optimize { manifest, mode } => {
            let dir = run_dir(&cfg, "optimize")?;
            let space = load_space(manifest)?;
            let prices = price_profile(&cfg)?;
            let started = std::time::Instant::now();
            let (model, map) = match mode {
                OptimizeMode::Smilp => {
                    build_smilp(&cfg.plant, &cfg.costs, &space, &prices, &cfg)?
                }
                OptimizeMode::Deterministic => build_deterministic(
                    &cfg.plant,
                    &cfg.costs,
                    &space.scenarios[0].trajectory,
                    &prices,
                    &cfg,
                )?,
            };
            let build_s = started.elapsed().as_secs_f64();
            std::fs::write(dir.join("model.mps"), write_mps(&model)?)?;
            let solve_started = std::time::Instant::now();
            let sol = solve(&model, &cfg.solver)?;
            let solve_s = solve_started.elapsed().as_secs_f64();
            let log = serde_json::json!({
                "status": sol.status.as_str(),
                "objective": sol.objective_value,
                "mip_gap": sol.mip_gap,
                "build_seconds": build_s,
                "solve_seconds": solve_s,
                "variables": model.dimensions().0,
                "rows": model.dimensions().1,
            });
            write_json(&dir.join("solve_log.json"), &log)?;
            write_json(&dir.join("index_map.json"), &map.to_json())?;
            if !sol.has_values() {
                return Err(Error::no_solution(format!(
                    "no incumbent: status {}",
                    sol.status.as_str()
                )));
            }
            let plan = extract_dispatch_plan(
                &sol,
                &map,
                &cfg.plant,
                cfg.solver.binary_integrality_tolerance,
            )?;
            std::fs::write(dir.join("plan.json"), serde_json::to_string_pretty(&plan)?)?;
            if sol.status != SolutionStatus::Optimal {
                eprintln!("warning: incumbent is not proven optimal ({})", sol.status.as_str());
            }
            println!("{}", dir.join("plan.json").display());
            Ok(())
        }
        Command::Simulate { plan, manifest, scenario } => {
            let dir = run_dir(&cfg, "simulate")?;
            let plan = load_plan(plan, &cfg)?;
            let space = load_space(manifest)?;
            let prices = price_profile(&cfg)?;
            let picks: Vec<usize> = match scenario {
                Some(s) if *s >= space.n_s() => {
                    return Err(Error::config(format!(
                        "scenario {s} outside 0..{}",
                        space.n_s()
                    )))
                }
                Some(s) => vec![*s],
                None => (0..space.n_s()).collect(),
            };
            let mut profits = Vec::new();
            for s in picks {
                let sc = &space.scenarios[s];
                let res = simulate(&plan, &sc.trajectory, &prices, &cfg)?;
                res.write_trace_csv(&dir.join(format!("trace_s{s}.csv")))?;
                profits.push(serde_json::json!({
                    "scenario": s,
                    "window_id": sc.window_id.to_string(),
                    "breakdown": res.breakdown,
                    "storage_final": res.storage_final,
                    "dumped_energy": res.dumped_energy,
                }));
            }
            write_json(&dir.join("profits.json"), &serde_json::json!({ "runs": profits }))?;
            println!("{}", dir.join("profits.json").display());
            Ok(())
        }
        Command::Bench { plans, heuristics, category, manifest } => {
            let dir = run_dir(&cfg, "bench")?;
            let space = load_space(manifest)?;
            let prices = price_profile(&cfg)?;
            let db = resolve_history(&cfg)?;
            let (sampling, testing) = resolve_windows(&cfg, &db)?;
            let (label, weather_set): (&str, Vec<(NaiveDate, WeatherTrajectory)>) =
                match category {
                    Category::Scenario => (
                        "scenario",
                        space
                            .scenarios
                            .iter()
                            .map(|s| (s.window_id, s.trajectory.clone()))
                            .collect(),
                    ),
                    Category::Sampling => (
                        "sampling",
                        sampling.iter().map(|w| (w.start_day, w.trajectory.clone())).collect(),
                    ),
                    Category::Testing => (
                        "testing",
                        testing.iter().map(|w| (w.start_day, w.trajectory.clone())).collect(),
                    ),
                };
            if weather_set.is_empty() {
                return Err(Error::config(format!("{label} weather set is empty")));
            }
            let mut sources: Vec<PlanSource> = vec![PlanSource::PerfectKnowledge];
            for p in plans {
                let stem = p
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| p.display().to_string());
                sources.push(PlanSource::Fixed(stem, load_plan(p, &cfg)?));
            }
            if *heuristics {
                let (h1, t1) = heuristic_1(&space, &prices, &cfg)?;
                t1.write_csv(&dir.join("h1_candidates.csv"))?;
                sources.push(PlanSource::Fixed("H1".into(), h1));
                if !sampling.is_empty() {
                    let (h2, t2) = heuristic_2(&sampling, &prices, &cfg, None)?;
                    t2.write_csv(&dir.join("h2_candidates.csv"))?;
                    sources.push(PlanSource::Fixed("H2".into(), h2));
                    sources.push(PlanSource::Fixed(
                        "H3".into(),
                        heuristic_3(&sampling, &prices, &cfg)?,
                    ));
                }
            }
            let mut results = Vec::new();
            for source in &sources {
                let records = evaluate_plan(source, &weather_set, &prices, &cfg)?;
                results.push((source.name().to_string(), records));
            }
            let report = EvaluationReport::build(label, &results)?;
            write_json(&dir.join("report.json"), &serde_json::to_value(&report)?)?;
            std::fs::write(dir.join("report.txt"), report.to_text())?;
            report.write_csv(&dir.join("report.csv"))?;
            std::fs::write(dir.join("report.svg"), report.to_svg())?;
            print!("{}", report.to_text());
            Ok(())
        }
        Command::Sensitivity { sizes } => {
            if sizes.is_empty() {
                return Err(Error::config("--sizes must name at least one subset size"));
            }
            let dir = run_dir(&cfg, "sensitivity")?;
            let db = resolve_history(&cfg)?;
            let (sampling, testing) = resolve_windows(&cfg, &db)?;
            let testing = if testing.is_empty() { sampling.clone() } else { testing };
            let prices = price_profile(&cfg)?;
            let rows = sensitivity_h2(&sampling, &testing, &prices, &cfg, sizes)?;
            sensitivity_csv(&rows, &dir.join("sweep.csv"))?;
            std::fs::write(dir.join("sweep.svg"), sensitivity_svg(&rows))?;
            for r in &rows {
                println!("size {}: mean profit {:.2} ({:.1}s)", r.size, r.mean_profit, r.wall_clock_s);
            }
            Ok(())
        }
        Command::SolveMps { mps, solution, time_limit, mip_gap } => {
            let mut solver = cfg.solver.clone();
            solver.backend = "highs".into();
            solver.time_limit_s = *time_limit;
            solver.mip_gap_target = *mip_gap;
            let sol = solve_mps_file(mps, &solver)?;
            std::fs::write(solution, write_solution_file(&sol))?;
            Ok(())
        }
    }
}
