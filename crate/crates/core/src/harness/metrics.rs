use std::collections::BTreeMap;

use anyhow::Result;
use serde::{Deserialize, Serialize};

use super::plan::baseline_seed;
use super::{mean, ArtifactWriter, ExperimentPlan};
use crate::info::{
    detect, generalized_entropy, info_distance, make_continuous, to_probability_sample, BaselineProfile,
    MetricError, MetricOrder, Verdict,
};
use crate::par::Executor;
use crate::sim::{simulate_run, ArrivalTrace, ScenarioConfig, SimulationRun, SweepResult};

pub const SURFACE_HEADER: [&str; 6] = [
    "n_legit",
    "n_malicious",
    "alpha",
    "sampling_period",
    "entropy",
    "distance",
];
pub const DETAIL_HEADER: [&str; 9] = [
    "n_legit",
    "n_malicious",
    "seed",
    "baseline_seed",
    "alpha",
    "sampling_period",
    "entropy",
    "distance",
    "no_overlap",
];
pub const DETECTION_HEADER: [&str; 6] = [
    "n_legit",
    "n_malicious",
    "alpha",
    "sampling_period",
    "threshold",
    "detection_rate",
];

/// Metrics of one run at one (order, period).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub n_legit: u32,
    pub n_malicious: u32,
    pub seed: u64,
    /// Seed of the trace the distance was measured against.
    pub baseline_seed: u64,
    pub alpha: f64,
    pub sampling_period: u32,
    pub entropy: f64,
    /// `None` when the two samples share no support.
    pub distance: Option<f64>,
}

/// Seed-averaged metrics. `distance` averages the pairs with common support
/// and is infinite when there are none.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricCell {
    pub n_legit: u32,
    pub n_malicious: u32,
    pub alpha: f64,
    pub sampling_period: u32,
    pub entropy: f64,
    pub distance: f64,
    pub no_overlap_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionCell {
    pub n_legit: u32,
    pub n_malicious: u32,
    pub alpha: f64,
    pub sampling_period: u32,
    pub threshold: f64,
    /// Fraction of seeds flagged as attack.
    pub detection_rate: f64,
}

#[derive(Debug, Clone)]
pub struct MetricSweep {
    pub rows: Vec<MetricRow>,
    pub surface: Vec<MetricCell>,
    pub detection: Vec<DetectionCell>,
}

/// Zero-attacker runs with disjoint seeds, keyed by `(n_legit, seed)`.
fn baselines(plan: &ExperimentPlan, exec: &Executor) -> Result<BTreeMap<(u32, u64), SimulationRun>> {
    let configs: Vec<ScenarioConfig> = plan
        .legit
        .values()
        .into_iter()
        .flat_map(|l| {
            plan.seeds.iter().map(move |&s| ScenarioConfig {
                n_legit: l,
                n_malicious: 0,
                rng_seed: baseline_seed(s),
                ..plan.scenario.clone()
            })
        })
        .collect();
    let runs = exec.map(&configs, simulate_run);
    let mut out = BTreeMap::new();
    for (cfg, run) in configs.iter().zip(runs) {
        out.insert((cfg.n_legit, cfg.rng_seed), run?);
    }
    Ok(out)
}

fn distance_or_none(
    reference: &[f64],
    observed: &[f64],
    order: MetricOrder,
) -> Result<Option<f64>, MetricError> {
    match make_continuous(reference, observed) {
        Ok(pair) => info_distance(&pair.p, &pair.q, order).map(Some),
        Err(MetricError::NoOverlap) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Entropy of every run and its distance to the matched baseline, for every
/// (order, period). Zero-attacker runs are their own baseline.
pub fn run_metric_sweep(plan: &ExperimentPlan, runs: &SweepResult, exec: &Executor) -> Result<MetricSweep> {
    let base = baselines(plan, exec)?;
    let per_run = exec.map(runs, |run| -> Result<Vec<MetricRow>, MetricError> {
        let cfg = &run.config;
        let reference_run = if cfg.n_malicious == 0 {
            run
        } else {
            &base[&(cfg.n_legit, baseline_seed(cfg.rng_seed))]
        };
        let mut rows = Vec::with_capacity(plan.orders.len() * plan.sampling_periods.len());
        for &order in &plan.orders {
            for &period in &plan.sampling_periods {
                let observed = to_probability_sample(&run.trace_with_period(period))?;
                let reference = to_probability_sample(&reference_run.trace_with_period(period))?;
                rows.push(MetricRow {
                    n_legit: cfg.n_legit,
                    n_malicious: cfg.n_malicious,
                    seed: cfg.rng_seed,
                    baseline_seed: reference_run.config.rng_seed,
                    alpha: order.alpha(),
                    sampling_period: period,
                    entropy: generalized_entropy(&observed, order),
                    distance: distance_or_none(reference.probs(), observed.probs(), order)?,
                });
            }
        }
        Ok(rows)
    });
    let mut rows = Vec::with_capacity(runs.len() * plan.orders.len() * plan.sampling_periods.len());
    for r in per_run {
        rows.extend(r?);
    }
    rows.sort_by(|a, b| {
        a.alpha
            .total_cmp(&b.alpha)
            .then(a.sampling_period.cmp(&b.sampling_period))
            .then(a.n_legit.cmp(&b.n_legit))
            .then(a.n_malicious.cmp(&b.n_malicious))
            .then(a.seed.cmp(&b.seed))
    });

    let surface = rows
        .chunk_by(|a, b| {
            a.alpha == b.alpha
                && a.sampling_period == b.sampling_period
                && a.n_legit == b.n_legit
                && a.n_malicious == b.n_malicious
        })
        .map(|g| {
            let entropies: Vec<f64> = g.iter().map(|r| r.entropy).collect();
            let distances: Vec<f64> = g.iter().filter_map(|r| r.distance).collect();
            MetricCell {
                n_legit: g[0].n_legit,
                n_malicious: g[0].n_malicious,
                alpha: g[0].alpha,
                sampling_period: g[0].sampling_period,
                entropy: mean(&entropies),
                distance: if distances.is_empty() {
                    f64::INFINITY
                } else {
                    mean(&distances)
                },
                no_overlap_count: g.len() - distances.len(),
            }
        })
        .collect();

    let detection = detection_rates(plan, runs, &base)?;
    Ok(MetricSweep {
        rows,
        surface,
        detection,
    })
}

/// Calibrates a profile per (n_legit, period) from the zero-attacker runs
/// against the first baseline seed, then scores every run with it.
fn detection_rates(
    plan: &ExperimentPlan,
    runs: &SweepResult,
    base: &BTreeMap<(u32, u64), SimulationRun>,
) -> Result<Vec<DetectionCell>> {
    let mut out = Vec::new();
    let reference_seed = baseline_seed(plan.seeds[0]);
    for &period in &plan.sampling_periods {
        for l in plan.legit.values() {
            let reference = base[&(l, reference_seed)].trace_with_period(period);
            let of_legit: Vec<&SimulationRun> = runs.iter().filter(|r| r.config.n_legit == l).collect();
            let normal: Vec<ArrivalTrace> = of_legit
                .iter()
                .filter(|r| r.config.n_malicious == 0)
                .map(|r| r.trace_with_period(period))
                .collect();
            let profile = BaselineProfile::calibrate(&reference, &normal, &plan.orders)?;
            for &order in &plan.orders {
                let threshold = profile.threshold(order).expect("calibrated for every order").distance;
                for group in of_legit.chunk_by(|a, b| a.config.n_malicious == b.config.n_malicious) {
                    let mut flagged = 0usize;
                    for r in group {
                        let d = detect(&profile, &r.trace_with_period(period), order)?;
                        if d.verdict == Verdict::Attack {
                            flagged += 1;
                        }
                    }
                    out.push(DetectionCell {
                        n_legit: l,
                        n_malicious: group[0].config.n_malicious,
                        alpha: order.alpha(),
                        sampling_period: period,
                        threshold,
                        detection_rate: flagged as f64 / group.len() as f64,
                    });
                }
            }
        }
    }
    out.sort_by(|a, b| {
        a.alpha
            .total_cmp(&b.alpha)
            .then(a.sampling_period.cmp(&b.sampling_period))
            .then(a.n_legit.cmp(&b.n_legit))
            .then(a.n_malicious.cmp(&b.n_malicious))
    });
    Ok(out)
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "inf".to_string(), |v| v.to_string())
}

pub fn write_metric_sweep(m: &MetricSweep, out: &mut ArtifactWriter) -> Result<()> {
    out.write_csv(
        "metrics/surface.csv",
        &SURFACE_HEADER,
        m.surface.iter().map(|c| {
            [
                c.n_legit.to_string(),
                c.n_malicious.to_string(),
                c.alpha.to_string(),
                c.sampling_period.to_string(),
                c.entropy.to_string(),
                c.distance.to_string(),
            ]
        }),
    )?;
    out.write_csv(
        "metrics/detail.csv",
        &DETAIL_HEADER,
        m.rows.iter().map(|r| {
            [
                r.n_legit.to_string(),
                r.n_malicious.to_string(),
                r.seed.to_string(),
                r.baseline_seed.to_string(),
                r.alpha.to_string(),
                r.sampling_period.to_string(),
                r.entropy.to_string(),
                opt(r.distance),
                u8::from(r.distance.is_none()).to_string(),
            ]
        }),
    )?;
    out.write_csv(
        "metrics/detection.csv",
        &DETECTION_HEADER,
        m.detection.iter().map(|c| {
            [
                c.n_legit.to_string(),
                c.n_malicious.to_string(),
                c.alpha.to_string(),
                c.sampling_period.to_string(),
                c.threshold.to_string(),
                c.detection_rate.to_string(),
            ]
        }),
    )?;
    Ok(())
}
