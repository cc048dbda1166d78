use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use crate::info::MetricOrder;
use crate::ml::{Algorithm, FeatureKind};
use crate::sim::{GridRange, ScenarioConfig, ScenarioGrid};

pub const STANDARD_PERIODS: [u32; 6] = [10, 20, 30, 60, 120, 240];
pub const STANDARD_ORDERS: [f64; 4] = [0.5, 2.0, 5.0, 10.0];

/// Added to a scenario seed to get the seed of its zero-attacker baseline.
pub const BASELINE_SEED_OFFSET: u64 = 1 << 32;

/// Everything needed to reproduce a full run of the pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub legit: GridRange,
    pub malicious: GridRange,
    pub seeds: Vec<u64>,
    pub sampling_periods: Vec<u32>,
    pub orders: Vec<MetricOrder>,
    pub features: Vec<FeatureKind>,
    /// Each algorithm is searched over its default grid.
    pub classifiers: Vec<Algorithm>,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    /// Seed for the train/test split, CV folds and model training.
    #[serde(default)]
    pub ml_seed: u64,
    /// Drop attack rows with fewer bacteria than cluster slots.
    #[serde(default)]
    pub exclude_sub_saturation: bool,
    /// Template for every scenario; counts and seed are overwritten.
    #[serde(default)]
    pub scenario: ScenarioConfig,
    /// Read from config files but never written, so artifacts do not depend
    /// on where they are stored.
    #[serde(default = "default_output_dir", skip_serializing)]
    pub output_dir: PathBuf,
}

fn default_folds() -> usize {
    5
}

fn default_train_fraction() -> f64 {
    0.7
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentPlan {
    /// 8 x 10 grid, 10 seeds.
    pub fn desk() -> Self {
        Self {
            legit: GridRange::new(10, 150, 20).expect("static range"),
            malicious: GridRange::new(0, 1900, 200).expect("static range"),
            seeds: (0..10).collect(),
            sampling_periods: STANDARD_PERIODS.to_vec(),
            orders: STANDARD_ORDERS
                .iter()
                .map(|&a| MetricOrder::new(a).expect("static order"))
                .collect(),
            features: FeatureKind::ALL.to_vec(),
            classifiers: Algorithm::ALL.to_vec(),
            folds: default_folds(),
            train_fraction: default_train_fraction(),
            ml_seed: 0,
            exclude_sub_saturation: false,
            scenario: ScenarioConfig::default(),
            output_dir: default_output_dir(),
        }
    }

    /// 15 x 20 grid, 20 seeds.
    pub fn full() -> Self {
        Self {
            legit: GridRange::new(10, 150, 10).expect("static range"),
            malicious: GridRange::new(0, 1900, 100).expect("static range"),
            seeds: (0..20).collect(),
            ..Self::desk()
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let plan: Self =
            serde_json::from_str(&text).with_context(|| format!("parsing plan {}", path.display()))?;
        plan.validate()
            .with_context(|| format!("validating plan {}", path.display()))?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            bail!("seeds must not be empty");
        }
        let unique: BTreeSet<u64> = self.seeds.iter().copied().collect();
        if unique.len() != self.seeds.len() {
            bail!("seeds must be distinct");
        }
        if self
            .seeds
            .iter()
            .any(|s| unique.contains(&s.wrapping_add(BASELINE_SEED_OFFSET)))
        {
            bail!("a seed collides with a baseline seed (seed + 2^32)");
        }
        if self.sampling_periods.is_empty() {
            bail!("sampling_periods must not be empty");
        }
        for &p in &self.sampling_periods {
            if p == 0 || !self.scenario.sim_limit.is_multiple_of(p) {
                bail!("sampling period {p} must be > 0 and divide sim_limit {}", self.scenario.sim_limit);
            }
        }
        if self.orders.is_empty() {
            bail!("orders must not be empty");
        }
        if self.features.is_empty() {
            bail!("features must not be empty");
        }
        if self.classifiers.is_empty() {
            bail!("classifiers must not be empty");
        }
        if self.folds < 2 {
            bail!("folds must be >= 2");
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            bail!("train_fraction must lie in (0, 1)");
        }
        self.scenario.validate()?;
        Ok(())
    }

    pub fn grid(&self) -> ScenarioGrid {
        let mut grid = ScenarioGrid::new(self.legit, self.malicious);
        grid.template = self.scenario.clone();
        grid
    }

    /// Replaces the seed list with `count` consecutive seeds from `first`,
    /// and uses `first` for the ML split as well.
    pub fn reseed(&mut self, first: u64) {
        let count = self.seeds.len() as u64;
        self.seeds = (first..first + count).collect();
        self.ml_seed = first;
    }
}

pub fn baseline_seed(seed: u64) -> u64 {
    seed.wrapping_add(BASELINE_SEED_OFFSET)
}
