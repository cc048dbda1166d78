use anyhow::Result;
use serde::{Deserialize, Serialize};

use super::{mean, sample_sd, ArtifactWriter, ExperimentPlan};
use crate::par::Executor;
use crate::sim::{sweep, ArrivalTrace, ScenarioConfig, SimulationSummary, SweepResult};

pub const SURFACE_HEADER: [&str; 7] = [
    "n_legit",
    "n_malicious",
    "n_seeds",
    "retrieved_fraction",
    "retrieval_time_s",
    "retrieval_time_min",
    "retrieval_time_sd_s",
];
pub const RUNS_HEADER: [&str; 7] = [
    "n_legit",
    "n_malicious",
    "seed",
    "retrieved_fraction",
    "retrieval_time_s",
    "delivered_total",
    "malicious_conjugations",
];
pub const TRACE_HEADER: [&str; 3] = ["bin_index", "time_s", "arrivals"];

/// Seed-averaged outcome of one `(n_legit, n_malicious)` grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceCell {
    pub n_legit: u32,
    pub n_malicious: u32,
    pub n_seeds: usize,
    pub mean_retrieved_fraction: f64,
    /// Seconds.
    pub mean_retrieval_time: f64,
    pub sd_retrieval_time: f64,
}

#[derive(Debug, Clone)]
pub struct AttackSweep {
    pub runs: SweepResult,
    pub surface: Vec<SurfaceCell>,
}

#[derive(Serialize)]
struct ScenarioRecord<'a> {
    config: &'a ScenarioConfig,
    summary: &'a SimulationSummary,
}

pub fn run_attack_sweep(plan: &ExperimentPlan, exec: &Executor) -> Result<AttackSweep> {
    let runs = sweep(&plan.grid(), &plan.seeds, exec)?;
    let surface = surface(&runs);
    Ok(AttackSweep { runs, surface })
}

/// Groups consecutive runs of one grid point; relies on the sweep's sort order.
fn surface(runs: &SweepResult) -> Vec<SurfaceCell> {
    runs.chunk_by(|a, b| {
        a.config.n_legit == b.config.n_legit && a.config.n_malicious == b.config.n_malicious
    })
    .map(|group| {
        let fractions: Vec<f64> = group.iter().map(|r| r.summary.retrieved_fraction).collect();
        let times: Vec<f64> = group.iter().map(|r| r.summary.retrieval_time).collect();
        SurfaceCell {
            n_legit: group[0].config.n_legit,
            n_malicious: group[0].config.n_malicious,
            n_seeds: group.len(),
            mean_retrieved_fraction: mean(&fractions),
            mean_retrieval_time: mean(&times),
            sd_retrieval_time: sample_sd(&times),
        }
    })
    .collect()
}

pub fn write_attack_sweep(sweep: &AttackSweep, out: &mut ArtifactWriter) -> Result<()> {
    out.write_csv(
        "sweep/surface.csv",
        &SURFACE_HEADER,
        sweep.surface.iter().map(|c| {
            [
                c.n_legit.to_string(),
                c.n_malicious.to_string(),
                c.n_seeds.to_string(),
                c.mean_retrieved_fraction.to_string(),
                c.mean_retrieval_time.to_string(),
                (c.mean_retrieval_time / 60.0).to_string(),
                c.sd_retrieval_time.to_string(),
            ]
        }),
    )?;
    out.write_csv(
        "sweep/runs.csv",
        &RUNS_HEADER,
        sweep.runs.iter().map(|r| {
            [
                r.config.n_legit.to_string(),
                r.config.n_malicious.to_string(),
                r.config.rng_seed.to_string(),
                r.summary.retrieved_fraction.to_string(),
                r.summary.retrieval_time.to_string(),
                r.summary.delivered_total.to_string(),
                r.summary.malicious_conjugations.to_string(),
            ]
        }),
    )?;
    let records: Vec<ScenarioRecord> = sweep
        .runs
        .iter()
        .map(|r| ScenarioRecord {
            config: &r.config,
            summary: &r.summary,
        })
        .collect();
    out.write_json("sweep/scenarios.json", &records)?;
    Ok(())
}

/// One trace CSV plus a JSON sidecar with the config and summary.
pub fn write_trace(
    out: &mut ArtifactWriter,
    stem: &str,
    config: &ScenarioConfig,
    trace: &ArrivalTrace,
    summary: &SimulationSummary,
) -> Result<()> {
    let period = trace.sampling_period as u64;
    out.write_csv(
        &format!("{stem}.csv"),
        &TRACE_HEADER,
        trace
            .bins
            .iter()
            .enumerate()
            .map(|(i, &b)| [i as u64, i as u64 * period, b as u64]),
    )?;
    out.write_json(&format!("{stem}.json"), &ScenarioRecord { config, summary })?;
    Ok(())
}
