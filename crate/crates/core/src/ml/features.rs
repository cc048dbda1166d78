use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::MlError;
use crate::info::to_probability_sample;
use crate::sim::ArrivalTrace;

/// How an arrival trace is turned into a feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    /// Deliveries per bin.
    Count,
    /// Cumulative deliveries up to each bin.
    Sum,
    /// Probability sample of per-bin delivery counts.
    Sample,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 3] = [FeatureKind::Count, FeatureKind::Sum, FeatureKind::Sample];

    pub fn name(self) -> &'static str {
        match self {
            FeatureKind::Count => "count",
            FeatureKind::Sum => "sum",
            FeatureKind::Sample => "sample",
        }
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureKind {
    type Err = MlError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "count" => Ok(FeatureKind::Count),
            "sum" => Ok(FeatureKind::Sum),
            "sample" => Ok(FeatureKind::Sample),
            other => Err(MlError::Invalid(format!("unknown feature kind '{other}'"))),
        }
    }
}

pub fn extract_features(trace: &ArrivalTrace, kind: FeatureKind) -> Result<Vec<f64>, MlError> {
    Ok(match kind {
        FeatureKind::Count => trace.bins.iter().map(|&b| b as f64).collect(),
        FeatureKind::Sum => trace
            .bins
            .iter()
            .scan(0u64, |acc, &b| {
                *acc += b as u64;
                Some(*acc as f64)
            })
            .collect(),
        FeatureKind::Sample => to_probability_sample(trace)?.into_inner(),
    })
}
