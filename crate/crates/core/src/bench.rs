//! Evaluation pipeline: score dispatch plans across weather sets, summarize
//! the profit-component distributions (mean, median, 2.5% / 97.5%
//! percentiles), the dispatch-weighted average price, pairwise Welch t-tests,
//! and the Heuristic-2 scenario-size sensitivity sweep.

use std::time::Instant;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::config::RunConfig;
use crate::data::{PriceProfile, WeatherWindow};
use crate::error::Error;
use crate::formulation::DispatchPlan;
use crate::heuristics::{heuristic_2, perfect_knowledge};
use crate::plant::WeatherTrajectory;
use crate::simulator::{simulate, Event};

/// How a plan is produced for each evaluation trajectory.
pub enum PlanSource {
    /// One plan applied verbatim to every trajectory.
    Fixed(String, DispatchPlan),
    /// Re-optimized per trajectory with the weather known in advance.
    PerfectKnowledge,
}

impl PlanSource {
    pub fn name(&self) -> &str {
        match self {
            PlanSource::Fixed(name, _) => name,
            PlanSource::PerfectKnowledge => "PK",
        }
    }
}

/// One trajectory's outcome under one plan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfitRecord {
    pub window_id: NaiveDate,
    pub revenue: f64,
    pub purchase_cost: f64,
    /// Receiver generation, startup, and shutdown costs combined.
    pub receiver_cost: f64,
    /// Power-block generation, ramping, startup, and shutdown costs combined.
    pub pb_cost: f64,
    pub profit: f64,
    /// Dispatched electrical energy (MWh_e).
    pub dispatched_mwh: f64,
    pub n_rsup: usize,
    pub n_rsd_forced: usize,
    pub n_csup: usize,
    pub n_csd_forced: usize,
    pub runtime_s: f64,
}

/// Simulates (or re-optimizes, for PK) a plan across a weather set.
pub fn evaluate_plan(
    source: &PlanSource,
    weather_set: &[(NaiveDate, WeatherTrajectory)],
    prices: &PriceProfile,
    cfg: &RunConfig,
) -> Result<Vec<ProfitRecord>, Error> {
    if weather_set.is_empty() {
        return Err(Error::config("empty weather set"));
    }
    weather_set
        .par_iter()
        .map(|(id, traj)| {
            let start = Instant::now();
            let plan = match source {
                PlanSource::Fixed(_, plan) => plan.clone(),
                PlanSource::PerfectKnowledge => perfect_knowledge(traj, prices, cfg)?,
            };
            let res = simulate(&plan, traj, prices, cfg)?;
            let b = res.breakdown;
            let dt = traj.dt_hours;
            let dispatched: f64 = res.steps.iter().map(|s| dt * s.ws).sum();
            let count = |pred: fn(&Event) -> bool| {
                res.steps.iter().flat_map(|s| &s.events).filter(|e| pred(e)).count()
            };
            Ok(ProfitRecord {
                window_id: *id,
                revenue: b.revenue,
                purchase_cost: b.purchase_cost,
                receiver_cost: b.receiver_opex + b.receiver_sd_cost,
                pb_cost: b.pb_opex + b.pb_sd_cost,
                profit: b.profit,
                dispatched_mwh: dispatched,
                n_rsup: count(|e| matches!(e, Event::Rsup)),
                n_rsd_forced: count(|e| matches!(e, Event::RsdForced)),
                n_csup: count(|e| matches!(e, Event::Csup)),
                n_csd_forced: count(|e| matches!(e, Event::CsdForced)),
                runtime_s: start.elapsed().as_secs_f64(),
            })
        })
        .collect()
}

/// Dispatch-weighted average price: total revenue over total dispatched
/// energy; absent when nothing was dispatched.
pub fn dwa_price(records: &[ProfitRecord]) -> Option<f64> {
    let revenue: f64 = records.iter().map(|r| r.revenue).sum();
    let energy: f64 = records.iter().map(|r| r.dispatched_mwh).sum();
    (energy > 0.0).then(|| revenue / energy)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PercentileSummary {
    pub mean: f64,
    pub p2_5: f64,
    pub median: f64,
    pub p97_5: f64,
}

/// Percentile by linear interpolation between closest ranks on the sorted
/// values (index = p/100 * (n-1)).
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let idx = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = idx.floor() as usize;
    let hi = idx.ceil() as usize;
    let frac = idx - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

pub fn percentile_summary(values: &[f64]) -> Result<PercentileSummary, Error> {
    if values.is_empty() {
        return Err(Error::config("percentile summary of an empty list"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(PercentileSummary {
        mean: values.iter().sum::<f64>() / values.len() as f64,
        p2_5: percentile(&sorted, 2.5),
        median: percentile(&sorted, 50.0),
        p97_5: percentile(&sorted, 97.5),
    })
}

/// Welch's unequal-variance t-test: statistic, Welch–Satterthwaite degrees of
/// freedom, and the two-sided p-value.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<(f64, f64, f64), Error> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::config("t-test needs at least two observations per sample"));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let var = |v: &[f64], m: f64| {
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
    };
    let (ma, mb) = (mean(a), mean(b));
    let (va, vb) = (var(a, ma), var(b, mb));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let se2 = va / na + vb / nb;
    if se2 <= 0.0 {
        return Err(Error::config("degenerate variance: both samples are constant"));
    }
    let t = (ma - mb) / se2.sqrt();
    let dof = se2.powi(2)
        / ((va / na).powi(2) / (na - 1.0) + (vb / nb).powi(2) / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, dof)
        .map_err(|e| Error::config(format!("t distribution: {e}")))?;
    let p = 2.0 * (1.0 - dist.cdf(t.abs()));
    Ok((t, dof, p.clamp(0.0, 1.0)))
}

/// One plan's row of the evaluation report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanReport {
    pub plan: String,
    pub revenue: PercentileSummary,
    pub purchase_cost: PercentileSummary,
    pub receiver_cost: PercentileSummary,
    pub pb_cost: PercentileSummary,
    pub profit: PercentileSummary,
    pub dwa: Option<f64>,
    pub mean_rsup: f64,
    pub mean_rsd_forced: f64,
    pub mean_csup: f64,
    pub mean_csd_forced: f64,
    pub total_runtime_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub schema_version: u32,
    pub category: String,
    pub n_trajectories: usize,
    pub plans: Vec<PlanReport>,
    /// Two-sided Welch p-values on the profit samples, keyed "A vs B".
    pub t_test_p: Vec<(String, f64)>,
}

impl EvaluationReport {
    pub fn build(
        category: &str,
        results: &[(String, Vec<ProfitRecord>)],
    ) -> Result<EvaluationReport, Error> {
        if results.is_empty() || results.iter().any(|(_, r)| r.is_empty()) {
            return Err(Error::config("report needs at least one record per plan"));
        }
        let mut plans = Vec::new();
        for (name, records) in results {
            let pull = |f: fn(&ProfitRecord) -> f64| -> Vec<f64> {
                records.iter().map(f).collect()
            };
            let mean_of = |f: fn(&ProfitRecord) -> f64| {
                records.iter().map(f).sum::<f64>() / records.len() as f64
            };
            let report = PlanReport {
                plan: name.clone(),
                revenue: percentile_summary(&pull(|r| r.revenue))?,
                purchase_cost: percentile_summary(&pull(|r| r.purchase_cost))?,
                receiver_cost: percentile_summary(&pull(|r| r.receiver_cost))?,
                pb_cost: percentile_summary(&pull(|r| r.pb_cost))?,
                profit: percentile_summary(&pull(|r| r.profit))?,
                dwa: dwa_price(records),
                mean_rsup: mean_of(|r| r.n_rsup as f64),
                mean_rsd_forced: mean_of(|r| r.n_rsd_forced as f64),
                mean_csup: mean_of(|r| r.n_csup as f64),
                mean_csd_forced: mean_of(|r| r.n_csd_forced as f64),
                total_runtime_s: records.iter().map(|r| r.runtime_s).sum(),
            };
            // Component identity must hold before the report goes out.
            let identity = report.revenue.mean
                - report.purchase_cost.mean
                - report.receiver_cost.mean
                - report.pb_cost.mean;
            if (identity - report.profit.mean).abs() > 1e-9 {
                return Err(Error::model(format!(
                    "{name}: profit components do not sum to profit \
                     ({identity} vs {})",
                    report.profit.mean
                )));
            }
            plans.push(report);
        }
        let mut t_test_p = Vec::new();
        for i in 0..results.len() {
            for j in i + 1..results.len() {
                let a: Vec<f64> = results[i].1.iter().map(|r| r.profit).collect();
                let b: Vec<f64> = results[j].1.iter().map(|r| r.profit).collect();
                let key = format!("{} vs {}", results[i].0, results[j].0);
                match welch_t_test(&a, &b) {
                    Ok((_, _, p)) => t_test_p.push((key, p)),
                    Err(_) => t_test_p.push((key, f64::NAN)),
                }
            }
        }
        Ok(EvaluationReport {
            schema_version: 1,
            category: category.to_string(),
            n_trajectories: results[0].1.len(),
            plans,
            t_test_p,
        })
    }

    /// Aligned-text rendering; costs shown in parentheses.
    pub fn to_text(&self) -> String {
        let paren = |v: f64| format!("({:.1})", v.abs());
        let mut out = String::new();
        out.push_str(&format!(
            "Evaluation: {} ({} trajectories)\n",
            self.category, self.n_trajectories
        ));
        out.push_str(&format!(
            "{:<10} {:>12} {:>12} {:>12} {:>12} {:>12} {:>9}\n",
            "plan", "revenue", "purchase", "receiver", "powerblock", "profit", "DWA"
        ));
        for p in &self.plans {
            out.push_str(&format!(
                "{:<10} {:>12.1} {:>12} {:>12} {:>12} {:>12.1} {:>9}\n",
                p.plan,
                p.revenue.mean,
                paren(p.purchase_cost.mean),
                paren(p.receiver_cost.mean),
                paren(p.pb_cost.mean),
                p.profit.mean,
                p.dwa.map_or("-".into(), |d| format!("{d:.2}")),
            ));
        }
        if !self.t_test_p.is_empty() {
            out.push_str("profit-distribution t-tests (two-sided p):\n");
            for (k, p) in &self.t_test_p {
                out.push_str(&format!("  {k}: {p:.4}\n"));
            }
        }
        out
    }

    /// Per-plan summary CSV.
    pub fn write_csv(&self, path: &std::path::Path) -> Result<(), Error> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record([
            "plan",
            "revenue_mean",
            "purchase_mean",
            "receiver_cost_mean",
            "pb_cost_mean",
            "profit_mean",
            "profit_p2_5",
            "profit_median",
            "profit_p97_5",
            "dwa",
            "mean_rsup",
            "mean_rsd_forced",
            "mean_csup",
            "mean_csd_forced",
            "runtime_s",
        ])?;
        for p in &self.plans {
            w.write_record([
                p.plan.clone(),
                p.revenue.mean.to_string(),
                p.purchase_cost.mean.to_string(),
                p.receiver_cost.mean.to_string(),
                p.pb_cost.mean.to_string(),
                p.profit.mean.to_string(),
                p.profit.p2_5.to_string(),
                p.profit.median.to_string(),
                p.profit.p97_5.to_string(),
                p.dwa.map_or(String::new(), |d| d.to_string()),
                p.mean_rsup.to_string(),
                p.mean_rsd_forced.to_string(),
                p.mean_csup.to_string(),
                p.mean_csd_forced.to_string(),
                p.total_runtime_s.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Simple bar chart of mean profit per plan, no plotting dependency.
    pub fn to_svg(&self) -> String {
        svg_bars(
            &self
                .plans
                .iter()
                .map(|p| (p.plan.clone(), p.profit.mean))
                .collect::<Vec<_>>(),
            "mean profit",
        )
    }
}

/// One row of the Heuristic-2 size sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SensitivityRow {
    pub size: usize,
    pub mean_profit: f64,
    pub wall_clock_s: f64,
}

/// Sweeps the Heuristic-2 subset size over `sizes`, scoring each plan on the
/// testing set; oversized entries are skipped with a warning.
pub fn sensitivity_h2(
    sampling_windows: &[WeatherWindow],
    testing_windows: &[WeatherWindow],
    prices: &PriceProfile,
    cfg: &RunConfig,
    sizes: &[usize],
) -> Result<Vec<SensitivityRow>, Error> {
    if testing_windows.is_empty() {
        return Err(Error::config("empty testing set"));
    }
    let testing: Vec<(NaiveDate, WeatherTrajectory)> = testing_windows
        .iter()
        .map(|w| (w.start_day, w.trajectory.clone()))
        .collect();
    let mut rows = Vec::new();
    for &size in sizes {
        if size == 0 || size > sampling_windows.len() {
            eprintln!(
                "warning: skipping H2 size {size} (sampling set holds {})",
                sampling_windows.len()
            );
            continue;
        }
        let start = Instant::now();
        let (plan, _) = heuristic_2(sampling_windows, prices, cfg, Some(size))?;
        let records = evaluate_plan(
            &PlanSource::Fixed(format!("H2[{size}]"), plan),
            &testing,
            prices,
            cfg,
        )?;
        let mean_profit =
            records.iter().map(|r| r.profit).sum::<f64>() / records.len() as f64;
        rows.push(SensitivityRow {
            size,
            mean_profit,
            wall_clock_s: start.elapsed().as_secs_f64(),
        });
    }
    Ok(rows)
}

pub fn sensitivity_csv(rows: &[SensitivityRow], path: &std::path::Path) -> Result<(), Error> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["size", "mean_profit", "wall_clock_s"])?;
    for r in rows {
        w.write_record([
            r.size.to_string(),
            r.mean_profit.to_string(),
            r.wall_clock_s.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn sensitivity_svg(rows: &[SensitivityRow]) -> String {
    svg_bars(
        &rows
            .iter()
            .map(|r| (r.size.to_string(), r.mean_profit))
            .collect::<Vec<_>>(),
        "H2 mean profit vs subset size",
    )
}

fn svg_bars(data: &[(String, f64)], title: &str) -> String {
    let w = 640.0;
    let h = 360.0;
    let margin = 50.0;
    let lo = data.iter().map(|(_, v)| *v).fold(0.0f64, f64::min);
    let hi = data.iter().map(|(_, v)| *v).fold(0.0f64, f64::max);
    let span = (hi - lo).max(1e-9);
    let n = data.len().max(1) as f64;
    let bar_w = (w - 2.0 * margin) / n * 0.7;
    let y_of = |v: f64| h - margin - (v - lo) / span * (h - 2.0 * margin);
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" \
         viewBox=\"0 0 {w} {h}\">\n<text x=\"{}\" y=\"20\" text-anchor=\"middle\" \
         font-size=\"14\">{title}</text>\n",
        w / 2.0
    );
    s.push_str(&format!(
        "<line x1=\"{margin}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        y_of(0.0f64.clamp(lo, hi)),
        w - margin,
        y_of(0.0f64.clamp(lo, hi))
    ));
    for (i, (label, v)) in data.iter().enumerate() {
        let x = margin + (i as f64 + 0.15) * (w - 2.0 * margin) / n;
        let y_top = y_of(v.max(0.0));
        let y_bot = y_of(v.min(0.0).clamp(lo, hi));
        s.push_str(&format!(
            "<rect x=\"{x:.1}\" y=\"{y_top:.1}\" width=\"{bar_w:.1}\" \
             height=\"{:.1}\" fill=\"#4a7fb0\"/>\n",
            (y_bot - y_top).abs().max(0.5)
        ));
        s.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"11\">{label}</text>\n",
            x + bar_w / 2.0,
            h - margin / 2.0
        ));
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(profit: f64, revenue: f64, dispatched: f64) -> ProfitRecord {
        ProfitRecord {
            window_id: NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(),
            revenue,
            purchase_cost: 0.0,
            receiver_cost: 0.0,
            pb_cost: revenue - profit,
            profit,
            dispatched_mwh: dispatched,
            n_rsup: 0,
            n_rsd_forced: 0,
            n_csup: 0,
            n_csd_forced: 0,
            runtime_s: 0.0,
        }
    }

    #[test]
    fn dwa_weighted_mean_fixture() {
        // 100 MWh at 60 plus 100 MWh at 120 -> 90.
        let records = vec![record(0.0, 6000.0, 100.0), record(0.0, 12000.0, 100.0)];
        assert_eq!(dwa_price(&records), Some(90.0));
        assert_eq!(dwa_price(&[record(0.0, 0.0, 0.0)]), None);
    }

    #[test]
    fn percentiles_on_one_to_hundred() {
        let values: Vec<f64> = (1..=100).map(f64::from).collect();
        let s = percentile_summary(&values).unwrap();
        assert!((s.p2_5 - 3.475).abs() < 1e-9);
        assert!((s.median - 50.5).abs() < 1e-9);
        assert!((s.p97_5 - 97.525).abs() < 1e-9);
        assert!((s.mean - 50.5).abs() < 1e-9);
    }

    #[test]
    fn percentiles_degenerate_inputs() {
        let s = percentile_summary(&[7.0]).unwrap();
        assert_eq!((s.p2_5, s.median, s.p97_5), (7.0, 7.0, 7.0));
        let s = percentile_summary(&[3.0, 3.0, 3.0]).unwrap();
        assert_eq!((s.p2_5, s.median, s.p97_5), (3.0, 3.0, 3.0));
        assert!(percentile_summary(&[]).is_err());
        // Permutation-invariant.
        let a = percentile_summary(&[5.0, 1.0, 9.0, 3.0]).unwrap();
        let b = percentile_summary(&[9.0, 3.0, 5.0, 1.0]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn welch_identical_samples() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let (t, _, p) = welch_t_test(&a, &a).unwrap();
        assert_eq!(t, 0.0);
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn welch_degenerate_variance_errors() {
        let z = [0.0, 0.0, 0.0, 0.0];
        assert!(welch_t_test(&z, &z).is_err());
    }

    #[test]
    fn welch_separated_samples() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(5);
        let mut gauss = |mu: f64| -> Vec<f64> {
            (0..200)
                .map(|_| {
                    // Box-Muller from two uniforms.
                    let u1: f64 = rng.gen_range(1e-12..1.0);
                    let u2: f64 = rng.gen_range(0.0..1.0);
                    mu + (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
                })
                .collect()
        };
        let a = gauss(0.0);
        let b = gauss(3.0);
        let (_, _, p) = welch_t_test(&a, &b).unwrap();
        assert!(p < 1e-6, "p = {p}");
    }

    #[test]
    fn report_component_identity_and_ordering() {
        let recs_a = vec![record(10.0, 30.0, 1.0), record(20.0, 50.0, 2.0)];
        let recs_b = vec![record(5.0, 10.0, 1.0), record(7.0, 14.0, 1.5)];
        let report = EvaluationReport::build(
            "testing",
            &[("A".into(), recs_a), ("B".into(), recs_b)],
        )
        .unwrap();
        for p in &report.plans {
            assert!(p.profit.p2_5 <= p.profit.median && p.profit.median <= p.profit.p97_5);
        }
        assert_eq!(report.t_test_p.len(), 1);
        let text = report.to_text();
        assert!(text.contains("A") && text.contains("(")); // costs parenthesized
        let svg = report.to_svg();
        assert!(svg.starts_with("<svg") && svg.contains("</svg>"));
    }

    #[test]
    fn report_rejects_broken_identity() {
        let mut bad = record(10.0, 30.0, 1.0);
        bad.pb_cost = 0.0; // components no longer sum to profit
        let err = EvaluationReport::build("x", &[("A".into(), vec![bad, record(1.0, 2.0, 1.0)])]);
        assert!(err.is_err());
    }
}
