use std::collections::BTreeMap;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use super::{mean, sample_sd, ArtifactWriter, ExperimentPlan};
use crate::ml::{
    evaluate, extract_features, grid_search_cv, models, split, Algorithm, ClassifierSpec, CvScore, Dataset,
    EvalReport, FeatureKind, Preprocessor, RowTag, ATTACK, NORMAL,
};
use crate::par::Executor;
use crate::sim::SweepResult;

pub const CELLS_HEADER: [&str; 10] = [
    "classifier",
    "feature",
    "sampling_period",
    "auroc",
    "auprc",
    "accuracy",
    "f1",
    "cv_auroc",
    "skipped_folds",
    "best_spec",
];
pub const SUMMARY_HEADER: [&str; 7] = [
    "classifier",
    "feature",
    "n_periods",
    "auroc_mean",
    "auroc_sd",
    "auprc_mean",
    "auprc_sd",
];
pub const RANKING_HEADER: [&str; 4] = ["rank", "classifier", "auroc_mean", "auprc_mean"];
pub const FEATURE_RANKING_HEADER: [&str; 5] = ["classifier", "best_feature", "count", "sum", "sample"];

/// Attack rows whose total bacteria cannot fill the cluster.
pub fn is_sub_saturation(n_legit: u32, n_malicious: u32, cluster_size: u32) -> bool {
    n_malicious > 0 && n_legit + n_malicious < cluster_size
}

/// Unprocessed feature rows of every run, labeled attack iff attackers are present.
pub fn build_dataset(
    runs: &SweepResult,
    kind: FeatureKind,
    period: u32,
    exclude_sub_saturation: bool,
) -> Result<Dataset> {
    let mut rows = Vec::with_capacity(runs.len());
    let mut labels = Vec::with_capacity(runs.len());
    let mut tags = Vec::with_capacity(runs.len());
    for run in runs {
        let c = &run.config;
        if exclude_sub_saturation && is_sub_saturation(c.n_legit, c.n_malicious, c.cluster_size) {
            continue;
        }
        rows.push(extract_features(&run.trace_with_period(period), kind)?);
        labels.push(if c.n_malicious > 0 { ATTACK } else { NORMAL });
        tags.push(RowTag {
            n_legit: c.n_legit,
            n_malicious: c.n_malicious,
            seed: c.rng_seed,
        });
    }
    let rows = crate::ml::pad_rows(&rows);
    Ok(Dataset::with_tags(rows, labels, tags)?.with_meta(kind, period))
}

/// Split, fit preprocessing on the training part, and transform both parts.
pub fn prepare(raw: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset, Preprocessor)> {
    let (train_raw, test_raw) = split(raw, train_fraction, seed)?;
    let pre = Preprocessor::fit(train_raw.rows())?;
    Ok((pre.transform(&train_raw), pre.transform(&test_raw), pre))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlCell {
    pub classifier: Algorithm,
    pub feature: FeatureKind,
    pub sampling_period: u32,
    pub best_spec: ClassifierSpec,
    pub cv: Vec<CvScore>,
    pub report: EvalReport,
}

impl MlCell {
    pub fn auroc(&self) -> f64 {
        self.report.auroc.unwrap_or(f64::NAN)
    }

    pub fn auprc(&self) -> f64 {
        self.report.auprc.unwrap_or(f64::NAN)
    }

    fn best_cv(&self) -> &CvScore {
        self.cv.iter().find(|s| s.spec == self.best_spec).expect("best spec is in the grid")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub classifier: Algorithm,
    pub feature: FeatureKind,
    pub n_periods: usize,
    pub auroc_mean: f64,
    pub auroc_sd: f64,
    pub auprc_mean: f64,
    pub auprc_sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankRow {
    pub rank: usize,
    pub classifier: Algorithm,
    pub auroc_mean: f64,
    pub auprc_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlEval {
    pub cells: Vec<MlCell>,
    pub summary: Vec<SummaryRow>,
    pub ranking: Vec<RankRow>,
    /// Cells whose CV skipped folds with a single class.
    pub warnings: Vec<String>,
}

impl MlEval {
    pub fn summary_for(&self, classifier: Algorithm, feature: FeatureKind) -> Option<&SummaryRow> {
        self.summary
            .iter()
            .find(|s| s.classifier == classifier && s.feature == feature)
    }

    /// Feature with the highest mean AUROC for `classifier`; ties go to the
    /// earlier feature in plan order.
    pub fn best_feature(&self, classifier: Algorithm) -> Option<FeatureKind> {
        let mut best: Option<&SummaryRow> = None;
        for s in self.summary.iter().filter(|s| s.classifier == classifier) {
            if best.is_none_or(|b| s.auroc_mean > b.auroc_mean) {
                best = Some(s);
            }
        }
        best.map(|s| s.feature)
    }
}

/// Grid-search CV on the training split and held-out evaluation for every
/// period x feature x classifier.
pub fn run_ml_eval(plan: &ExperimentPlan, runs: &SweepResult, exec: &Executor) -> Result<MlEval> {
    let mut cells = Vec::new();
    let mut warnings = Vec::new();
    for &period in &plan.sampling_periods {
        for &feature in &plan.features {
            let raw = build_dataset(runs, feature, period, plan.exclude_sub_saturation)?;
            let (train, test, _) = prepare(&raw, plan.train_fraction, plan.ml_seed)
                .with_context(|| format!("preparing {feature} features at {period} s"))?;
            for &classifier in &plan.classifiers {
                let grid = classifier.default_grid();
                let cv = grid_search_cv(&train, &grid, plan.folds, plan.ml_seed, exec)
                    .with_context(|| format!("cross-validating {classifier} on {feature} at {period} s"))?;
                let best_spec = cv.best_spec().clone();
                let model = models::train(&best_spec, &train, plan.ml_seed)?;
                let scores = models::predict_scores(&model, &test)?;
                let report = evaluate(&scores, test.labels())?;
                let skipped: usize = cv.scores.iter().map(CvScore::skipped_folds).sum();
                if skipped > 0 {
                    warnings.push(format!(
                        "{classifier}/{feature}/{period}s: {skipped} single-class folds skipped"
                    ));
                }
                cells.push(MlCell {
                    classifier,
                    feature,
                    sampling_period: period,
                    best_spec,
                    cv: cv.scores,
                    report,
                });
            }
        }
    }
    let summary = summarize(plan, &cells);
    let ranking = rank(plan, &cells);
    Ok(MlEval {
        cells,
        summary,
        ranking,
        warnings,
    })
}

fn summarize(plan: &ExperimentPlan, cells: &[MlCell]) -> Vec<SummaryRow> {
    let mut out = Vec::new();
    for &classifier in &plan.classifiers {
        for &feature in &plan.features {
            let group: Vec<&MlCell> = cells
                .iter()
                .filter(|c| c.classifier == classifier && c.feature == feature)
                .collect();
            let auroc: Vec<f64> = group.iter().map(|c| c.auroc()).collect();
            let auprc: Vec<f64> = group.iter().map(|c| c.auprc()).collect();
            out.push(SummaryRow {
                classifier,
                feature,
                n_periods: group.len(),
                auroc_mean: mean(&auroc),
                auroc_sd: sample_sd(&auroc),
                auprc_mean: mean(&auprc),
                auprc_sd: sample_sd(&auprc),
            });
        }
    }
    out
}

fn rank(plan: &ExperimentPlan, cells: &[MlCell]) -> Vec<RankRow> {
    let mut rows: Vec<RankRow> = plan
        .classifiers
        .iter()
        .map(|&classifier| {
            let group: Vec<&MlCell> = cells.iter().filter(|c| c.classifier == classifier).collect();
            let auroc: Vec<f64> = group.iter().map(|c| c.auroc()).collect();
            let auprc: Vec<f64> = group.iter().map(|c| c.auprc()).collect();
            RankRow {
                rank: 0,
                classifier,
                auroc_mean: mean(&auroc),
                auprc_mean: mean(&auprc),
            }
        })
        .collect();
    rows.sort_by(|a, b| b.auroc_mean.total_cmp(&a.auroc_mean).then(a.classifier.cmp(&b.classifier)));
    for (i, r) in rows.iter_mut().enumerate() {
        r.rank = i + 1;
    }
    rows
}

fn curve_period(plan: &ExperimentPlan) -> u32 {
    if plan.sampling_periods.contains(&10) {
        10
    } else {
        *plan.sampling_periods.iter().min().expect("validated non-empty")
    }
}

pub fn write_dataset(out: &mut ArtifactWriter, stem: &str, ds: &Dataset, pre: Option<&Preprocessor>) -> Result<()> {
    let width = ds.n_features();
    let mut header: Vec<String> = ["n_legit", "n_malicious", "seed", "label"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((0..width).map(|i| format!("f{i}")));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    out.write_csv(
        &format!("{stem}.csv"),
        &header_refs,
        ds.rows().iter().zip(ds.labels()).zip(ds.tags()).map(|((row, label), tag)| {
            let mut rec = vec![
                tag.n_legit.to_string(),
                tag.n_malicious.to_string(),
                tag.seed.to_string(),
                label.to_string(),
            ];
            rec.extend(row.iter().map(f64::to_string));
            rec
        }),
    )?;
    out.write_json(
        &format!("{stem}.json"),
        &serde_json::json!({
            "feature_kind": ds.kind,
            "sampling_period": ds.sampling_period,
            "n_rows": ds.len(),
            "n_features": width,
            "class_counts": { "attack": ds.class_counts()[0], "normal": ds.class_counts()[1] },
            "preprocessing": pre,
        }),
    )?;
    Ok(())
}

/// Reads a dataset written by [`write_dataset`].
pub fn read_dataset(path: &std::path::Path) -> Result<Dataset> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut tags = Vec::new();
    for rec in reader.records() {
        let rec = rec.with_context(|| format!("parsing {}", path.display()))?;
        let field = |i: usize| rec.get(i).with_context(|| format!("missing column {i}"));
        tags.push(RowTag {
            n_legit: field(0)?.parse()?,
            n_malicious: field(1)?.parse()?,
            seed: field(2)?.parse()?,
        });
        labels.push(field(3)?.parse()?);
        rows.push(rec.iter().skip(4).map(str::parse).collect::<Result<Vec<f64>, _>>()?);
    }
    let mut ds = Dataset::with_tags(rows, labels, tags)?;
    let meta_path = path.with_extension("json");
    if let Ok(text) = std::fs::read_to_string(&meta_path) {
        let meta: serde_json::Value = serde_json::from_str(&text)?;
        if let (Some(kind), Some(period)) = (
            meta.get("feature_kind").and_then(|k| serde_json::from_value(k.clone()).ok()),
            meta.get("sampling_period").and_then(|p| p.as_u64()),
        ) {
            ds = ds.with_meta(kind, period as u32);
        }
    }
    Ok(ds)
}

pub fn write_ml_eval(plan: &ExperimentPlan, runs: &SweepResult, eval: &MlEval, out: &mut ArtifactWriter) -> Result<()> {
    for &period in &plan.sampling_periods {
        for &feature in &plan.features {
            let raw = build_dataset(runs, feature, period, plan.exclude_sub_saturation)?;
            let (_, _, pre) = prepare(&raw, plan.train_fraction, plan.ml_seed)?;
            write_dataset(out, &format!("ml/datasets/{feature}_{period}"), &raw, Some(&pre))?;
        }
    }
    out.write_csv(
        "ml/cells.csv",
        &CELLS_HEADER,
        eval.cells.iter().map(|c| {
            [
                c.classifier.to_string(),
                c.feature.to_string(),
                c.sampling_period.to_string(),
                c.auroc().to_string(),
                c.auprc().to_string(),
                c.report.accuracy.to_string(),
                c.report.f1.to_string(),
                c.best_cv().mean_auroc.to_string(),
                c.cv.iter().map(CvScore::skipped_folds).sum::<usize>().to_string(),
                c.best_spec.to_string(),
            ]
        }),
    )?;
    out.write_csv(
        "ml/summary.csv",
        &SUMMARY_HEADER,
        eval.summary.iter().map(|s| {
            [
                s.classifier.to_string(),
                s.feature.to_string(),
                s.n_periods.to_string(),
                s.auroc_mean.to_string(),
                s.auroc_sd.to_string(),
                s.auprc_mean.to_string(),
                s.auprc_sd.to_string(),
            ]
        }),
    )?;
    out.write_csv(
        "ml/ranking.csv",
        &RANKING_HEADER,
        eval.ranking.iter().map(|r| {
            [
                r.rank.to_string(),
                r.classifier.to_string(),
                r.auroc_mean.to_string(),
                r.auprc_mean.to_string(),
            ]
        }),
    )?;
    let by_feature = |classifier: Algorithm, feature: FeatureKind| {
        eval.summary_for(classifier, feature)
            .map_or_else(String::new, |s| s.auroc_mean.to_string())
    };
    out.write_csv(
        "ml/feature_ranking.csv",
        &FEATURE_RANKING_HEADER,
        plan.classifiers.iter().map(|&c| {
            [
                c.to_string(),
                eval.best_feature(c).map_or_else(String::new, |f| f.to_string()),
                by_feature(c, FeatureKind::Count),
                by_feature(c, FeatureKind::Sum),
                by_feature(c, FeatureKind::Sample),
            ]
        }),
    )?;

    let mut reports: BTreeMap<String, &MlCell> = BTreeMap::new();
    for c in &eval.cells {
        reports.insert(format!("{}_{}_{}", c.classifier, c.feature, c.sampling_period), c);
    }
    for (key, cell) in &reports {
        out.write_json(&format!("ml/reports/{key}.json"), cell)?;
    }
    let period = curve_period(plan);
    for c in eval.cells.iter().filter(|c| c.sampling_period == period) {
        let stem = format!("ml/curves/{}_{}_{}", c.classifier, c.feature, period);
        out.write_csv(
            &format!("{stem}_roc.csv"),
            &["fpr", "tpr"],
            c.report.roc.iter().map(|p| [p.fpr, p.tpr]),
        )?;
        out.write_csv(
            &format!("{stem}_pr.csv"),
            &["recall", "precision"],
            c.report.pr.iter().map(|p| [p.recall, p.precision]),
        )?;
    }
    out.write_json("ml/warnings.json", &eval.warnings)?;
    Ok(())
}
