//! Scenario-space construction: ECDF over per-window potential energy,
//! stratified sampling, and k-medoids typical-day extraction.

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::WeatherWindow;
use crate::error::Error;
use crate::plant::{
    scenario_potential_energy, LossModel, OpticalEfficiencyTable, PlantDesign, WeatherTrajectory,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EcdfEntry {
    pub window_id: NaiveDate,
    pub e_in: f64,
}

/// Empirical CDF over per-window potential solar energy, ascending in energy
/// with ties broken by window id.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnergyEcdf {
    pub entries: Vec<EcdfEntry>,
}

impl EnergyEcdf {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub window_id: NaiveDate,
    pub e_in: f64,
    pub trajectory: WeatherTrajectory,
}

/// The ordered scenario space fed to the stochastic program; every scenario is
/// a verbatim historical (or synthetic) window.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioSpace {
    pub scenarios: Vec<Scenario>,
    pub seed: u64,
}

impl ScenarioSpace {
    pub fn n_s(&self) -> usize {
        self.scenarios.len()
    }

    pub fn validate(&self) -> Result<(), Error> {
        let first = self
            .scenarios
            .first()
            .ok_or_else(|| Error::config("scenario space is empty"))?;
        for s in &self.scenarios {
            if s.trajectory.len() != first.trajectory.len()
                || (s.trajectory.dt_hours - first.trajectory.dt_hours).abs() > 1e-12
            {
                return Err(Error::config(format!(
                    "scenario {} disagrees on length or step",
                    s.window_id
                )));
            }
        }
        Ok(())
    }
}

/// Scores every window by its potential energy and sorts ascending.
pub fn build_ecdf(
    windows: &[WeatherWindow],
    plant: &PlantDesign,
    loss: &LossModel,
    eff: &OpticalEfficiencyTable,
) -> Result<EnergyEcdf, Error> {
    if windows.is_empty() {
        return Err(Error::config("cannot build an ECDF over zero windows"));
    }
    let mut entries = windows
        .par_iter()
        .map(|w| {
            Ok(EcdfEntry {
                window_id: w.start_day,
                e_in: scenario_potential_energy(&w.trajectory, plant, loss, eff)?,
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    entries.sort_by(|a, b| {
        a.e_in
            .partial_cmp(&b.e_in)
            .unwrap()
            .then_with(|| a.window_id.cmp(&b.window_id))
    });
    Ok(EnergyEcdf { entries })
}

/// Splits `0..n` into `n_s` contiguous strata whose sizes differ by at most
/// one; returns (start, len) per stratum.
pub fn strata_bounds(n: usize, n_s: usize) -> Vec<(usize, usize)> {
    let base = n / n_s;
    let rem = n % n_s;
    let mut out = Vec::with_capacity(n_s);
    let mut start = 0;
    for i in 0..n_s {
        let len = base + usize::from(i < rem);
        out.push((start, len));
        start += len;
    }
    out
}

/// Draws exactly one window, uniformly and seeded, from each equal-count
/// stratum of the ECDF; output ordered by stratum.
pub fn stratified_sample(
    ecdf: &EnergyEcdf,
    windows: &[WeatherWindow],
    n_s: usize,
    seed: u64,
) -> Result<ScenarioSpace, Error> {
    if n_s == 0 || n_s > ecdf.len() {
        return Err(Error::config(format!(
            "n_s = {n_s} outside 1..={} (ECDF size)",
            ecdf.len()
        )));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut scenarios = Vec::with_capacity(n_s);
    for (start, len) in strata_bounds(ecdf.len(), n_s) {
        let pick = &ecdf.entries[start + rng.gen_range(0..len)];
        let window = windows
            .iter()
            .find(|w| w.start_day == pick.window_id)
            .ok_or_else(|| Error::config(format!("window {} missing from set", pick.window_id)))?;
        scenarios.push(Scenario {
            window_id: pick.window_id,
            e_in: pick.e_in,
            trajectory: window.trajectory.clone(),
        });
    }
    let space = ScenarioSpace { scenarios, seed };
    space.validate()?;
    Ok(space)
}

/// PAM k-medoids over Euclidean distance: deterministic greedy BUILD phase
/// (ties to the lowest index) followed by best-improvement SWAP iterations.
/// Returns medoid indices sorted ascending. `_seed` is reserved for future
/// randomized restarts; the current algorithm is deterministic.
pub fn k_medoids(
    profiles: &[Vec<f64>],
    k: usize,
    max_iter: usize,
    _seed: u64,
) -> Result<Vec<usize>, Error> {
    let n = profiles.len();
    if k == 0 || k > n {
        return Err(Error::config(format!("k = {k} outside 1..={n}")));
    }
    let dim = profiles[0].len();
    if profiles.iter().any(|p| p.len() != dim) {
        return Err(Error::config("profiles must share one length"));
    }
    // Tiny instances are solved exactly: the greedy swap phase can stall in
    // a local optimum, and enumerating medoid subsets is cheap here.
    let subsets = (0..k).try_fold(1u64, |acc, i| {
        acc.checked_mul((n - i) as u64).map(|v| v / (i as u64 + 1))
    });
    if subsets.is_some_and(|c| c <= 10_000) {
        return k_medoids_brute_force(profiles, k).map(|(medoids, _)| medoids);
    }
    let dist = |a: usize, b: usize| -> f64 {
        profiles[a]
            .iter()
            .zip(&profiles[b])
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    };
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = dist(i, j);
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    let cost_of = |medoids: &[usize]| -> f64 {
        (0..n)
            .map(|i| medoids.iter().map(|&m| d[i * n + m]).fold(f64::INFINITY, f64::min))
            .sum()
    };

    // BUILD: first medoid minimizes total distance; the rest greedily
    // maximize cost reduction.
    let mut medoids: Vec<usize> = Vec::with_capacity(k);
    let first = (0..n)
        .min_by(|&a, &b| {
            let ca: f64 = (0..n).map(|i| d[i * n + a]).sum();
            let cb: f64 = (0..n).map(|i| d[i * n + b]).sum();
            ca.partial_cmp(&cb).unwrap().then(a.cmp(&b))
        })
        .unwrap();
    medoids.push(first);
    while medoids.len() < k {
        let mut best = None;
        for cand in 0..n {
            if medoids.contains(&cand) {
                continue;
            }
            medoids.push(cand);
            let c = cost_of(&medoids);
            medoids.pop();
            if best.map_or(true, |(bc, _)| c < bc) {
                best = Some((c, cand));
            }
        }
        medoids.push(best.unwrap().1);
    }

    // SWAP: apply the best improving (medoid, non-medoid) exchange until none.
    let mut cost = cost_of(&medoids);
    for _ in 0..max_iter {
        let mut best: Option<(f64, usize, usize)> = None;
        for mi in 0..k {
            for cand in 0..n {
                if medoids.contains(&cand) {
                    continue;
                }
                let old = medoids[mi];
                medoids[mi] = cand;
                let c = cost_of(&medoids);
                medoids[mi] = old;
                if c < cost - 1e-12 && best.map_or(true, |(bc, _, _)| c < bc) {
                    best = Some((c, mi, cand));
                }
            }
        }
        match best {
            Some((c, mi, cand)) => {
                medoids[mi] = cand;
                cost = c;
            }
            None => break,
        }
    }
    medoids.sort_unstable();
    Ok(medoids)
}

/// Total distance of every point to its nearest medoid (the PAM objective).
pub fn k_medoids_cost(profiles: &[Vec<f64>], medoids: &[usize]) -> f64 {
    let dist = |a: &[f64], b: &[f64]| -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    };
    profiles
        .iter()
        .map(|p| {
            medoids
                .iter()
                .map(|&m| dist(p, &profiles[m]))
                .fold(f64::INFINITY, f64::min)
        })
        .sum()
}

/// Brute-force PAM optimum for small instances (test oracle).
pub fn k_medoids_brute_force(profiles: &[Vec<f64>], k: usize) -> Result<(Vec<usize>, f64), Error> {
    let n = profiles.len();
    if k == 0 || k > n {
        return Err(Error::config(format!("k = {k} outside 1..={n}")));
    }
    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut combo: Vec<usize> = (0..k).collect();
    loop {
        let c = k_medoids_cost(profiles, &combo);
        if best.as_ref().map_or(true, |(_, bc)| c < *bc) {
            best = Some((combo.clone(), c));
        }
        // Next k-combination of 0..n in lexicographic order.
        let mut i = k;
        loop {
            if i == 0 {
                return Ok(best.unwrap());
            }
            i -= 1;
            if combo[i] != i + n - k {
                combo[i] += 1;
                for j in (i + 1)..k {
                    combo[j] = combo[j - 1] + 1;
                }
                break;
            }
        }
    }
}
