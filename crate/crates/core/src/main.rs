use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use nanoguard::harness::{
    self, build_dataset, prepare, read_dataset, run_attack_sweep, run_metric_sweep, write_attack_sweep,
    write_dataset, write_metric_sweep, write_trace, ArtifactWriter, ExperimentPlan,
};
use nanoguard::ml::{evaluate, grid_search_cv, models, Algorithm, CvScore, FeatureKind, Preprocessor, TrainedModel};
use nanoguard::par::Executor;
use nanoguard::sim::{simulate, ScenarioConfig};

/// Simulate DoS attacks on a bacterial-nanonetwork archive and evaluate detectors.
#[derive(Debug, Parser)]
#[command(name = "nanoguard", version)]
struct Cli {
    /// JSON experiment plan; defaults to the desk-scale plan.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// First seed; the plan's seed list becomes consecutive seeds from here.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; defaults to the plan's output_dir.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads, 0 for one per core.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one scenario and write its trace and summary.
    Simulate {
        #[arg(long)]
        legit: u32,
        #[arg(long)]
        malicious: u32,
        /// Trace bin width in seconds.
        #[arg(long)]
        period: Option<u32>,
    },
    /// Attack sweep over the plan grid.
    Sweep,
    /// Attack sweep plus entropy and distance surfaces.
    Metrics,
    /// Attack sweep and one feature dataset.
    Dataset {
        #[arg(long)]
        feature: FeatureKind,
        #[arg(long)]
        period: u32,
    },
    /// Grid-search and fit one classifier on a dataset's training split.
    Train {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        classifier: Algorithm,
    },
    /// Score a trained model on its dataset's test split.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Full pipeline: sweep, metrics and ML evaluation.
    Report,
}

/// A failure caused by the invocation rather than the run.
#[derive(Debug, thiserror::Error)]
#[error("{0:#}")]
struct UsageError(anyhow::Error);

#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    model: TrainedModel,
    preprocessor: Preprocessor,
    train_fraction: f64,
    ml_seed: u64,
    cv: Vec<CvScore>,
}

fn load_plan(cli: &Cli) -> Result<ExperimentPlan, UsageError> {
    let mut plan = match &cli.config {
        Some(path) => ExperimentPlan::load(path).map_err(UsageError)?,
        None => ExperimentPlan::desk(),
    };
    if let Some(seed) = cli.seed {
        plan.reseed(seed);
        plan.validate().map_err(UsageError)?;
    }
    if let Some(out) = &cli.out {
        plan.output_dir = out.clone();
    }
    Ok(plan)
}

fn plan_json(plan: &ExperimentPlan) -> Result<Option<serde_json::Value>> {
    Ok(Some(serde_json::to_value(plan)?))
}

fn run(cli: Cli) -> Result<()> {
    let plan = load_plan(&cli)?;
    let exec = Executor::new(cli.jobs);
    let mut out = ArtifactWriter::new(&plan.output_dir)?;
    match cli.command {
        Command::Simulate {
            legit,
            malicious,
            period,
        } => {
            let seed = cli.seed.unwrap_or(0);
            let config = ScenarioConfig {
                n_legit: legit,
                n_malicious: malicious,
                rng_seed: seed,
                sampling_period: period.unwrap_or(plan.scenario.sampling_period),
                ..plan.scenario.clone()
            };
            config.validate().map_err(|e| UsageError(e.into()))?;
            let (trace, summary) = simulate(&config)?;
            write_trace(&mut out, "trace", &config, &trace, &summary)?;
            out.finish("simulate", &[seed], None)?;
            println!("{}", serde_json::to_string(&summary)?);
        }
        Command::Sweep => {
            let sweep = run_attack_sweep(&plan, &exec)?;
            write_attack_sweep(&sweep, &mut out)?;
            out.write_json("plan.json", &plan)?;
            out.finish("sweep", &plan.seeds, plan_json(&plan)?)?;
        }
        Command::Metrics => {
            let sweep = run_attack_sweep(&plan, &exec)?;
            write_attack_sweep(&sweep, &mut out)?;
            let metrics = run_metric_sweep(&plan, &sweep.runs, &exec)?;
            write_metric_sweep(&metrics, &mut out)?;
            out.write_json("plan.json", &plan)?;
            out.finish("metrics", &plan.seeds, plan_json(&plan)?)?;
        }
        Command::Dataset { feature, period } => {
            let sweep = run_attack_sweep(&plan, &exec)?;
            let raw = build_dataset(&sweep.runs, feature, period, plan.exclude_sub_saturation)?;
            let (_, _, pre) = prepare(&raw, plan.train_fraction, plan.ml_seed)?;
            let stem = format!("{feature}_{period}");
            write_dataset(&mut out, &stem, &raw, Some(&pre))?;
            out.write_json("plan.json", &plan)?;
            out.finish("dataset", &plan.seeds, plan_json(&plan)?)?;
            println!("{}", out_path(&plan.output_dir, &format!("{stem}.csv")));
        }
        Command::Train { dataset, classifier } => {
            let raw = read_dataset(&dataset)?;
            let (train, _, preprocessor) = prepare(&raw, plan.train_fraction, plan.ml_seed)?;
            let cv = grid_search_cv(&train, &classifier.default_grid(), plan.folds, plan.ml_seed, &exec)?;
            let model = models::train(cv.best_spec(), &train, plan.ml_seed)?;
            let file = ModelFile {
                model,
                preprocessor,
                train_fraction: plan.train_fraction,
                ml_seed: plan.ml_seed,
                cv: cv.scores,
            };
            out.write_json("model.json", &file)?;
            out.finish("train", &[plan.ml_seed], None)?;
            println!("{}", out_path(&plan.output_dir, "model.json"));
        }
        Command::Evaluate { model, dataset } => {
            let text = std::fs::read_to_string(&model).with_context(|| format!("reading {}", model.display()))?;
            let file: ModelFile =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", model.display()))?;
            let raw = read_dataset(&dataset)?;
            let (_, test_raw) = nanoguard::ml::split(&raw, file.train_fraction, file.ml_seed)?;
            let test = file.preprocessor.transform(&test_raw);
            let scores = models::predict_scores(&file.model, &test)?;
            let report = evaluate(&scores, test.labels())?;
            out.write_json("report.json", &report)?;
            out.write_csv("roc.csv", &["fpr", "tpr"], report.roc.iter().map(|p| [p.fpr, p.tpr]))?;
            out.write_csv(
                "pr.csv",
                &["recall", "precision"],
                report.pr.iter().map(|p| [p.recall, p.precision]),
            )?;
            out.finish("evaluate", &[file.ml_seed], None)?;
            println!(
                "auroc={} auprc={}",
                report.auroc.map_or("undefined".into(), |a| a.to_string()),
                report.auprc.map_or("undefined".into(), |a| a.to_string())
            );
        }
        Command::Report => {
            drop(out);
            let output = harness::run_pipeline(&plan, &exec, &plan.output_dir)?;
            for r in &output.ml.ranking {
                println!("{} {} auroc={:.4} auprc={:.4}", r.rank, r.classifier, r.auroc_mean, r.auprc_mean);
            }
        }
    }
    Ok(())
}

fn out_path(dir: &Path, file: &str) -> String {
    dir.join(file).display().to_string()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let (kind, code) = if err.is::<UsageError>() {
                ("usage", 2)
            } else {
                ("runtime", 1)
            };
            let msg = serde_json::json!({ "error": kind, "message": format!("{err:#}") });
            eprintln!("{msg}");
            ExitCode::from(code)
        }
    }
}
