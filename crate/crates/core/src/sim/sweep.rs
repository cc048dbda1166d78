use serde::{Deserialize, Serialize};

use super::{simulate_run, ScenarioConfig, SimError, SimulationRun};
use crate::par::Executor;

/// Inclusive `[lower, upper, step]` range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "[u32; 3]", into = "[u32; 3]")]
pub struct GridRange {
    pub lower: u32,
    pub upper: u32,
    pub step: u32,
}

impl GridRange {
    pub fn new(lower: u32, upper: u32, step: u32) -> Result<Self, SimError> {
        if upper < lower {
            return Err(SimError::InvalidGrid(format!(
                "empty range [{lower}, {upper}, {step}]: upper < lower"
            )));
        }
        if step == 0 {
            return Err(SimError::InvalidGrid(format!(
                "range [{lower}, {upper}, {step}] has zero step"
            )));
        }
        Ok(Self { lower, upper, step })
    }

    pub fn values(&self) -> Vec<u32> {
        (self.lower..=self.upper).step_by(self.step as usize).collect()
    }

    pub fn len(&self) -> usize {
        ((self.upper - self.lower) / self.step + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl TryFrom<[u32; 3]> for GridRange {
    type Error = SimError;

    fn try_from([l, u, s]: [u32; 3]) -> Result<Self, Self::Error> {
        GridRange::new(l, u, s)
    }
}

impl From<GridRange> for [u32; 3] {
    fn from(r: GridRange) -> Self {
        [r.lower, r.upper, r.step]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioGrid {
    pub legit: GridRange,
    pub malicious: GridRange,
    /// Timing and cluster parameters shared by every scenario.
    pub template: ScenarioConfig,
}

impl ScenarioGrid {
    pub fn new(legit: GridRange, malicious: GridRange) -> Self {
        Self {
            legit,
            malicious,
            template: ScenarioConfig::default(),
        }
    }

    /// Cartesian product with seeds, sorted by (n_legit, n_malicious, seed).
    pub fn configs(&self, seeds: &[u64]) -> Vec<ScenarioConfig> {
        let mut seeds = seeds.to_vec();
        seeds.sort_unstable();
        let mut out = Vec::with_capacity(self.legit.len() * self.malicious.len() * seeds.len());
        for l in self.legit.values() {
            for m in self.malicious.values() {
                for &s in &seeds {
                    out.push(ScenarioConfig {
                        n_legit: l,
                        n_malicious: m,
                        rng_seed: s,
                        ..self.template.clone()
                    });
                }
            }
        }
        out
    }
}

pub type SweepResult = Vec<SimulationRun>;

/// Simulates every scenario of `grid × seeds`; output order is stable.
/// Event logs are dropped to keep large sweeps small.
pub fn sweep(grid: &ScenarioGrid, seeds: &[u64], exec: &Executor) -> Result<SweepResult, SimError> {
    if seeds.is_empty() {
        return Err(SimError::InvalidGrid("seed list is empty".into()));
    }
    grid.template.validate()?;
    let configs = grid.configs(seeds);
    exec.map(&configs, |c| {
        simulate_run(c).map(|mut run| {
            run.log = Vec::new();
            run
        })
    })
    .into_iter()
    .collect()
}
