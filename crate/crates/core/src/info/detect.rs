use serde::{Deserialize, Serialize};

use super::{
    generalized_entropy, info_distance, make_continuous, to_probability_sample, MetricError,
    MetricOrder, ProbabilitySample,
};
use crate::sim::ArrivalTrace;

/// Detection thresholds for one metric order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderThreshold {
    pub alpha: MetricOrder,
    /// Attack iff the information distance exceeds this.
    pub distance: f64,
    /// Reported alongside the verdict; not used to decide it.
    pub entropy: f64,
}

/// Normal-traffic reference sample plus per-order thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineProfile {
    pub reference: ProbabilitySample,
    pub thresholds: Vec<OrderThreshold>,
}

impl BaselineProfile {
    pub fn new(reference: ProbabilitySample, thresholds: Vec<OrderThreshold>) -> Result<Self, MetricError> {
        if thresholds.iter().any(|t| t.distance.is_nan() || t.distance < 0.0 || t.entropy.is_nan() || t.entropy < 0.0) {
            return Err(MetricError::InvalidSample("thresholds must be >= 0".into()));
        }
        Ok(Self { reference, thresholds })
    }

    /// Thresholds are mean + 3 standard deviations of the distance (and of the
    /// absolute entropy change) between each normal trace and the reference.
    /// Pairs without common support are skipped.
    pub fn calibrate(
        reference: &ArrivalTrace,
        normal: &[ArrivalTrace],
        orders: &[MetricOrder],
    ) -> Result<Self, MetricError> {
        let reference = to_probability_sample(reference)?;
        let samples = normal
            .iter()
            .map(to_probability_sample)
            .collect::<Result<Vec<_>, _>>()?;
        let mut thresholds = Vec::with_capacity(orders.len());
        for &order in orders {
            let h_ref = generalized_entropy(&reference, order);
            let mut distances = Vec::new();
            let mut deltas = Vec::new();
            for s in &samples {
                deltas.push((generalized_entropy(s, order) - h_ref).abs());
                match make_continuous(reference.probs(), s.probs()) {
                    Ok(pair) => distances.push(info_distance(&pair.p, &pair.q, order)?),
                    Err(MetricError::NoOverlap) => {}
                    Err(e) => return Err(e),
                }
            }
            thresholds.push(OrderThreshold {
                alpha: order,
                distance: mean_plus_three_sd(&distances),
                entropy: mean_plus_three_sd(&deltas),
            });
        }
        Self::new(reference, thresholds)
    }

    pub fn threshold(&self, order: MetricOrder) -> Option<&OrderThreshold> {
        self.thresholds.iter().find(|t| t.alpha == order)
    }

    pub fn with_threshold(mut self, t: OrderThreshold) -> Self {
        self.thresholds.retain(|x| x.alpha != t.alpha);
        self.thresholds.push(t);
        self
    }
}

fn mean_plus_three_sd(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean + 3.0 * var.sqrt()).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Normal,
    Attack,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub verdict: Verdict,
    /// Information distance to the reference; infinite when `no_overlap`.
    pub score: f64,
    /// |H(observed) - H(reference)| at the same order.
    pub entropy_delta: f64,
    pub no_overlap: bool,
}

pub fn detect(
    baseline: &BaselineProfile,
    observed: &ArrivalTrace,
    order: MetricOrder,
) -> Result<Detection, MetricError> {
    let threshold = baseline
        .threshold(order)
        .ok_or(MetricError::MissingThreshold(order.alpha()))?;
    let sample = to_probability_sample(observed)?;
    let entropy_delta =
        (generalized_entropy(&sample, order) - generalized_entropy(&baseline.reference, order)).abs();
    match make_continuous(baseline.reference.probs(), sample.probs()) {
        Ok(pair) => {
            let score = info_distance(&pair.p, &pair.q, order)?;
            let verdict = if score > threshold.distance {
                Verdict::Attack
            } else {
                Verdict::Normal
            };
            Ok(Detection {
                verdict,
                score,
                entropy_delta,
                no_overlap: false,
            })
        }
        Err(MetricError::NoOverlap) => Ok(Detection {
            verdict: Verdict::Attack,
            score: f64::INFINITY,
            entropy_delta,
            no_overlap: true,
        }),
        Err(e) => Err(e),
    }
}
