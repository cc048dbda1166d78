use anyhow::{ensure, Result};
use serde::{Deserialize, Serialize};

use super::mean;
use crate::par::Executor;
use crate::sim::{simulate, ScenarioConfig, SimulationSummary};

/// Retrieval-time anchors and the scenario shape used to hit them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationTarget {
    pub n_legit: u32,
    pub n_malicious_high: u32,
    /// Mean retrieval time with no attackers, seconds.
    pub low_time: f64,
    /// Mean retrieval time with `n_malicious_high` attackers, seconds.
    pub high_time: f64,
    pub seeds: Vec<u64>,
    pub travel_sd_fraction: f64,
    pub conj_sd_fraction: f64,
    pub travel_bounds: (f64, f64),
    pub conj_bounds: (f64, f64),
    pub iterations: usize,
}

impl Default for CalibrationTarget {
    fn default() -> Self {
        Self {
            n_legit: 150,
            n_malicious_high: 1900,
            low_time: 40.0 * 60.0,
            high_time: 95.0 * 60.0,
            seeds: (0..20).collect(),
            travel_sd_fraction: 0.15,
            conj_sd_fraction: 0.2,
            travel_bounds: (100.0, 3000.0),
            conj_bounds: (5.0, 500.0),
            iterations: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorStats {
    pub mean_time: f64,
    pub min_time: f64,
    pub max_time: f64,
    pub mean_fraction: f64,
}

impl AnchorStats {
    fn of(summaries: &[SimulationSummary]) -> Self {
        let times: Vec<f64> = summaries.iter().map(|s| s.retrieval_time).collect();
        let fractions: Vec<f64> = summaries.iter().map(|s| s.retrieved_fraction).collect();
        Self {
            mean_time: mean(&times),
            min_time: times.iter().copied().fold(f64::INFINITY, f64::min),
            max_time: times.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            mean_fraction: mean(&fractions),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub travel_mean: f64,
    pub travel_sd: f64,
    pub conj_duration_mean: f64,
    pub conj_duration_sd: f64,
    pub low: AnchorStats,
    pub high: AnchorStats,
}

impl Calibration {
    pub fn apply(&self, config: &mut ScenarioConfig) {
        config.travel_mean = self.travel_mean;
        config.travel_sd = self.travel_sd;
        config.conj_duration_mean = self.conj_duration_mean;
        config.conj_duration_sd = self.conj_duration_sd;
    }
}

fn config_for(target: &CalibrationTarget, travel: f64, conj: f64, n_malicious: u32, seed: u64) -> ScenarioConfig {
    ScenarioConfig {
        travel_mean: travel,
        travel_sd: travel * target.travel_sd_fraction,
        conj_duration_mean: conj,
        conj_duration_sd: conj * target.conj_sd_fraction,
        ..ScenarioConfig::new(target.n_legit, n_malicious, seed)
    }
}

/// Retrieval statistics of the anchor scenario over the target seeds.
pub fn anchor_stats(
    target: &CalibrationTarget,
    travel: f64,
    conj: f64,
    n_malicious: u32,
    exec: &Executor,
) -> Result<AnchorStats> {
    let configs: Vec<ScenarioConfig> = target
        .seeds
        .iter()
        .map(|&s| config_for(target, travel, conj, n_malicious, s))
        .collect();
    let summaries = exec
        .map(&configs, |c| simulate(c).map(|(_, s)| s))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    Ok(AnchorStats::of(&summaries))
}

/// Bisection for `f(x) = goal` with `f` non-decreasing on `[lo, hi]`.
fn bisect(mut lo: f64, mut hi: f64, iterations: usize, goal: f64, mut f: impl FnMut(f64) -> Result<f64>) -> Result<f64> {
    for _ in 0..iterations {
        let mid = 0.5 * (lo + hi);
        if f(mid)? < goal {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Nested bisection: the outer search on the conjugation mean targets the
/// attacked anchor, the inner search on the travel mean the unattacked one.
pub fn calibrate(target: &CalibrationTarget, exec: &Executor) -> Result<Calibration> {
    ensure!(!target.seeds.is_empty(), "calibration needs at least one seed");
    let inner = |conj: f64| -> Result<f64> {
        let (lo, hi) = target.travel_bounds;
        bisect(lo, hi, target.iterations, target.low_time, |travel| {
            Ok(anchor_stats(target, travel, conj, 0, exec)?.mean_time)
        })
    };
    let (lo, hi) = target.conj_bounds;
    let conj = bisect(lo, hi, target.iterations, target.high_time, |conj| {
        let travel = inner(conj)?;
        Ok(anchor_stats(target, travel, conj, target.n_malicious_high, exec)?.mean_time)
    })?;
    // Round to what gets frozen as constants, then re-fit travel and report.
    let conj = (conj * 10.0).round() / 10.0;
    let travel = (inner(conj)? * 10.0).round() / 10.0;
    Ok(Calibration {
        travel_mean: travel,
        travel_sd: travel * target.travel_sd_fraction,
        conj_duration_mean: conj,
        conj_duration_sd: conj * target.conj_sd_fraction,
        low: anchor_stats(target, travel, conj, 0, exec)?,
        high: anchor_stats(target, travel, conj, target.n_malicious_high, exec)?,
    })
}
