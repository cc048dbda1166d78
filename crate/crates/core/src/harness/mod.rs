//! End-to-end experiment orchestration: attack sweep, metric surfaces and ML
//! evaluation, with every artifact hashed into a manifest.

mod artifacts;
mod attack;
mod calibrate;
mod metrics;
mod mleval;
mod plan;

pub use artifacts::{sha256_file, ArtifactWriter, Manifest, ManifestEntry, MANIFEST_FILE};
pub use attack::{run_attack_sweep, write_attack_sweep, write_trace, AttackSweep, SurfaceCell};
pub use calibrate::{anchor_stats, calibrate, AnchorStats, Calibration, CalibrationTarget};
pub use metrics::{run_metric_sweep, write_metric_sweep, DetectionCell, MetricCell, MetricRow, MetricSweep};
pub use mleval::{
    build_dataset, is_sub_saturation, prepare, read_dataset, run_ml_eval, write_dataset, write_ml_eval, MlCell,
    MlEval, RankRow, SummaryRow,
};
pub use plan::{baseline_seed, ExperimentPlan, BASELINE_SEED_OFFSET, STANDARD_ORDERS, STANDARD_PERIODS};

/// Exact CSV headers, by artifact.
pub mod headers {
    pub use super::attack::{RUNS_HEADER as SWEEP_RUNS, SURFACE_HEADER as SWEEP_SURFACE, TRACE_HEADER as TRACE};
    pub use super::metrics::{
        DETAIL_HEADER as METRIC_DETAIL, DETECTION_HEADER as METRIC_DETECTION, SURFACE_HEADER as METRIC_SURFACE,
    };
    pub use super::mleval::{
        CELLS_HEADER as ML_CELLS, FEATURE_RANKING_HEADER as ML_FEATURE_RANKING, RANKING_HEADER as ML_RANKING,
        SUMMARY_HEADER as ML_SUMMARY,
    };
}

use std::path::Path;

use anyhow::Result;

use crate::par::Executor;

/// Output of [`run_pipeline`].
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub attack: AttackSweep,
    pub metrics: MetricSweep,
    pub ml: MlEval,
    pub manifest: Manifest,
}

/// Runs sweep, metrics and ML evaluation and writes everything under `out`.
pub fn run_pipeline(plan: &ExperimentPlan, exec: &Executor, out: &Path) -> Result<PipelineOutput> {
    plan.validate()?;
    let mut writer = ArtifactWriter::new(out)?;
    writer.write_json("plan.json", plan)?;
    let attack = run_attack_sweep(plan, exec)?;
    write_attack_sweep(&attack, &mut writer)?;
    let metrics = run_metric_sweep(plan, &attack.runs, exec)?;
    write_metric_sweep(&metrics, &mut writer)?;
    let ml = run_ml_eval(plan, &attack.runs, exec)?;
    write_ml_eval(plan, &attack.runs, &ml, &mut writer)?;
    let manifest = writer.finish("report", &plan.seeds, Some(serde_json::to_value(plan)?))?;
    Ok(PipelineOutput {
        attack,
        metrics,
        ml,
        manifest,
    })
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Standard deviation with the `n - 1` denominator; 0 for fewer than two values.
pub(crate) fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)).sqrt()
}
