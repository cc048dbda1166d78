//! Information metrics over arrival traces.
//!
//! A trace is first turned into a probability sample over "number of
//! deliveries per bin" values, then compared with generalized (Rényi) entropy
//! and information distance. All logarithms are base 2.

mod detect;

pub use detect::{detect, BaselineProfile, Detection, OrderThreshold, Verdict};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::ArrivalTrace;

const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("empty input")]
    Empty,
    #[error("bin value {value} exceeds n_legit {n_legit}")]
    ValueOutOfRange { value: u32, n_legit: u32 },
    #[error("invalid probability sample: {0}")]
    InvalidSample(String),
    #[error("metric order must be a finite value > 0, got {0}")]
    InvalidOrder(f64),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("distributions share no support after truncation")]
    NoOverlap,
    #[error("zero probability at index {0}; make the pair continuous first")]
    ContinuityViolation(usize),
    #[error("no threshold stored for order {0}")]
    MissingThreshold(f64),
}

/// Discrete probability vector; `probs[v]` is P(x = v).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilitySample {
    probs: Vec<f64>,
}

impl ProbabilitySample {
    pub fn new(probs: Vec<f64>) -> Result<Self, MetricError> {
        if probs.is_empty() {
            return Err(MetricError::Empty);
        }
        if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(MetricError::InvalidSample(format!("element {p} outside [0, 1]")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(MetricError::InvalidSample(format!("elements sum to {sum}")));
        }
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.probs
    }
}

/// Order α of entropy and divergence. α = 1 selects the Shannon/KL limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct MetricOrder(f64);

impl MetricOrder {
    pub fn new(alpha: f64) -> Result<Self, MetricError> {
        if alpha > 0.0 && alpha.is_finite() {
            Ok(Self(alpha))
        } else {
            Err(MetricError::InvalidOrder(alpha))
        }
    }

    pub fn alpha(self) -> f64 {
        self.0
    }

    pub fn is_shannon(self) -> bool {
        self.0 == 1.0
    }
}

impl TryFrom<f64> for MetricOrder {
    type Error = MetricError;
    fn try_from(v: f64) -> Result<Self, Self::Error> {
        MetricOrder::new(v)
    }
}

impl From<MetricOrder> for f64 {
    fn from(o: MetricOrder) -> Self {
        o.0
    }
}

/// Histogram of bin values `0..=n_legit`, divided by the number of bins.
pub fn to_probability_sample(trace: &ArrivalTrace) -> Result<ProbabilitySample, MetricError> {
    if trace.bins.is_empty() {
        return Err(MetricError::Empty);
    }
    let mut counts = vec![0u64; trace.n_legit as usize + 1];
    for &value in &trace.bins {
        if value > trace.n_legit {
            return Err(MetricError::ValueOutOfRange {
                value,
                n_legit: trace.n_legit,
            });
        }
        counts[value as usize] += 1;
    }
    let len = trace.bins.len() as f64;
    Ok(ProbabilitySample {
        probs: counts.into_iter().map(|c| c as f64 / len).collect(),
    })
}

/// Pair of strictly positive vectors sharing an index set. Entries generally
/// do not sum to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuousPair {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

/// Keeps index `i < min(len p, len q)` iff both `p[i]` and `q[i]` are non-zero.
pub fn make_continuous(p: &[f64], q: &[f64]) -> Result<ContinuousPair, MetricError> {
    if p.is_empty() || q.is_empty() {
        return Err(MetricError::Empty);
    }
    let (pc, qc): (Vec<f64>, Vec<f64>) = p
        .iter()
        .zip(q)
        .filter(|(a, b)| **a != 0.0 && **b != 0.0)
        .map(|(a, b)| (*a, *b))
        .unzip();
    if pc.is_empty() {
        return Err(MetricError::NoOverlap);
    }
    Ok(ContinuousPair { p: pc, q: qc })
}

/// Rényi entropy of order α in bits. Zero entries contribute nothing.
pub fn generalized_entropy(p: &ProbabilitySample, order: MetricOrder) -> f64 {
    if order.is_shannon() {
        return shannon_entropy(p);
    }
    let alpha = order.alpha();
    let sum: f64 = p.probs.iter().filter(|&&x| x > 0.0).map(|&x| x.powf(alpha)).sum();
    sum.log2() / (1.0 - alpha)
}

pub fn shannon_entropy(p: &ProbabilitySample) -> f64 {
    -p.probs
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x * x.log2())
        .sum::<f64>()
}

fn check_pair(p: &[f64], q: &[f64]) -> Result<(), MetricError> {
    if p.len() != q.len() {
        return Err(MetricError::LengthMismatch(p.len(), q.len()));
    }
    if p.is_empty() {
        return Err(MetricError::Empty);
    }
    if let Some(i) = q.iter().position(|&x| x <= 0.0) {
        return Err(MetricError::ContinuityViolation(i));
    }
    if p.iter().any(|x| *x < 0.0 || !x.is_finite()) {
        return Err(MetricError::InvalidSample("negative or non-finite entry".into()));
    }
    Ok(())
}

/// Order-α divergence D(P||Q) in bits. `q` must be strictly positive.
pub fn info_divergence(p: &[f64], q: &[f64], order: MetricOrder) -> Result<f64, MetricError> {
    if order.is_shannon() {
        return kl_divergence(p, q);
    }
    check_pair(p, q)?;
    if p == q {
        return Ok(0.0);
    }
    let alpha = order.alpha();
    let sum: f64 = p
        .iter()
        .zip(q)
        .filter(|(pi, _)| **pi > 0.0)
        .map(|(pi, qi)| pi.powf(alpha) * qi.powf(1.0 - alpha))
        .sum();
    if sum <= 0.0 {
        return Err(MetricError::NoOverlap);
    }
    Ok(sum.log2() / (alpha - 1.0))
}

/// Kullback-Leibler divergence in bits. `q` must be strictly positive.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64, MetricError> {
    check_pair(p, q)?;
    if p == q {
        return Ok(0.0);
    }
    Ok(p.iter()
        .zip(q)
        .filter(|(pi, _)| **pi > 0.0)
        .map(|(pi, qi)| pi * (pi / qi).log2())
        .sum())
}

/// Symmetric distance D(P||Q) + D(Q||P). Both inputs must be strictly positive.
pub fn info_distance(p: &[f64], q: &[f64], order: MetricOrder) -> Result<f64, MetricError> {
    if p.len() == q.len() {
        if let Some(i) = p.iter().position(|&x| x <= 0.0) {
            return Err(MetricError::ContinuityViolation(i));
        }
    }
    let forward = info_divergence(p, q, order)?;
    let backward = info_divergence(q, p, order)?;
    Ok(forward + backward)
}
