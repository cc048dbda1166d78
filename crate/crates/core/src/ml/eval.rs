use serde::{Deserialize, Serialize};

use super::MlError;

/// Default decision threshold on classifier scores.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl ConfusionCounts {
    /// Positive prediction iff `score >= threshold`; label 1 is positive.
    pub fn from_scores(scores: &[f64], labels: &[u8], threshold: f64) -> Self {
        let mut c = Self::default();
        for (&s, &y) in scores.iter().zip(labels) {
            match (s >= threshold, y == 1) {
                (true, true) => c.tp += 1,
                (false, false) => c.tn += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        c
    }

    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.total())
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    /// Harmonic mean of precision and recall, computed from counts.
    pub fn f1(&self) -> f64 {
        ratio(2 * self.tp, 2 * self.tp + self.fp + self.fn_)
    }

    pub fn specificity(&self) -> f64 {
        ratio(self.tn, self.tn + self.fp)
    }

    /// Equals `1 - specificity` up to rounding.
    pub fn false_positive_rate(&self) -> f64 {
        ratio(self.fp, self.tn + self.fp)
    }

    /// Counts with the roles of the two classes exchanged.
    pub fn flipped(&self) -> Self {
        Self {
            tp: self.tn,
            tn: self.tp,
            fp: self.fn_,
            fn_: self.fp,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    /// `None` for the (0, 0) origin that precedes every threshold.
    pub threshold: Option<f64>,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub threshold: Option<f64>,
    pub recall: f64,
    pub precision: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub confusion: ConfusionCounts,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub specificity: f64,
    pub false_positive_rate: f64,
    pub roc: Vec<RocPoint>,
    pub pr: Vec<PrPoint>,
    /// `None` when the labels contain a single class.
    pub auroc: Option<f64>,
    pub auprc: Option<f64>,
}

impl EvalReport {
    pub fn auroc(&self) -> Result<f64, MlError> {
        self.auroc.ok_or(MlError::UndefinedAuc)
    }

    pub fn auprc(&self) -> Result<f64, MlError> {
        self.auprc.ok_or(MlError::UndefinedAuc)
    }
}

fn check_inputs(scores: &[f64], labels: &[u8]) -> Result<(), MlError> {
    if scores.len() != labels.len() {
        return Err(MlError::DimensionMismatch {
            expected: labels.len(),
            got: scores.len(),
        });
    }
    if labels.iter().any(|&l| l > 1) {
        return Err(MlError::Invalid("labels must be 0 or 1".into()));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(MlError::Invalid("scores must be finite".into()));
    }
    Ok(())
}

/// Cumulative (threshold, tp, fp) at every distinct score, highest first.
fn cumulative_counts(scores: &[f64], labels: &[u8]) -> Vec<(f64, u64, u64)> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut out = Vec::new();
    let (mut tp, mut fp) = (0u64, 0u64);
    for (pos, &i) in order.iter().enumerate() {
        if labels[i] == 1 {
            tp += 1;
        } else {
            fp += 1;
        }
        let last_of_group = order
            .get(pos + 1)
            .is_none_or(|&j| scores[j] != scores[i]);
        if last_of_group {
            out.push((scores[i], tp, fp));
        }
    }
    out
}

pub fn roc_curve(scores: &[f64], labels: &[u8]) -> Result<Vec<RocPoint>, MlError> {
    check_inputs(scores, labels)?;
    let pos = labels.iter().filter(|&&l| l == 1).count() as u64;
    let neg = labels.len() as u64 - pos;
    if pos == 0 || neg == 0 {
        return Err(MlError::UndefinedAuc);
    }
    let mut points = vec![RocPoint {
        threshold: None,
        fpr: 0.0,
        tpr: 0.0,
    }];
    for (t, tp, fp) in cumulative_counts(scores, labels) {
        points.push(RocPoint {
            threshold: Some(t),
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
        });
    }
    Ok(points)
}

/// Precision-recall curve; the recall-0 endpoint repeats the first attainable
/// precision.
pub fn pr_curve(scores: &[f64], labels: &[u8]) -> Result<Vec<PrPoint>, MlError> {
    check_inputs(scores, labels)?;
    let pos = labels.iter().filter(|&&l| l == 1).count() as u64;
    if pos == 0 || pos == labels.len() as u64 {
        return Err(MlError::UndefinedAuc);
    }
    let mut points: Vec<PrPoint> = cumulative_counts(scores, labels)
        .into_iter()
        .map(|(t, tp, fp)| PrPoint {
            threshold: Some(t),
            recall: tp as f64 / pos as f64,
            precision: tp as f64 / (tp + fp) as f64,
        })
        .collect();
    let first = points[0].precision;
    points.insert(
        0,
        PrPoint {
            threshold: None,
            recall: 0.0,
            precision: first,
        },
    );
    Ok(points)
}

/// Trapezoidal area under `(x, y)` points ordered by non-decreasing `x`.
pub fn trapezoid(points: impl IntoIterator<Item = (f64, f64)>) -> f64 {
    let mut area = 0.0;
    let mut prev: Option<(f64, f64)> = None;
    for (x, y) in points {
        if let Some((px, py)) = prev {
            area += (x - px) * (y + py) / 2.0;
        }
        prev = Some((x, y));
    }
    area
}

pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<f64, MlError> {
    let roc = roc_curve(scores, labels)?;
    Ok(trapezoid(roc.iter().map(|p| (p.fpr, p.tpr))))
}

pub fn pr_auc(scores: &[f64], labels: &[u8]) -> Result<f64, MlError> {
    let pr = pr_curve(scores, labels)?;
    Ok(trapezoid(pr.iter().map(|p| (p.recall, p.precision))))
}

pub fn evaluate(scores: &[f64], labels: &[u8]) -> Result<EvalReport, MlError> {
    check_inputs(scores, labels)?;
    let confusion = ConfusionCounts::from_scores(scores, labels, DEFAULT_THRESHOLD);
    let (roc, pr) = match (roc_curve(scores, labels), pr_curve(scores, labels)) {
        (Ok(roc), Ok(pr)) => (roc, pr),
        (Err(MlError::UndefinedAuc), _) | (_, Err(MlError::UndefinedAuc)) => (Vec::new(), Vec::new()),
        (Err(e), _) | (_, Err(e)) => return Err(e),
    };
    let auroc = (!roc.is_empty()).then(|| trapezoid(roc.iter().map(|p| (p.fpr, p.tpr))));
    let auprc = (!pr.is_empty()).then(|| trapezoid(pr.iter().map(|p| (p.recall, p.precision))));
    Ok(EvalReport {
        confusion,
        accuracy: confusion.accuracy(),
        precision: confusion.precision(),
        recall: confusion.recall(),
        f1: confusion.f1(),
        specificity: confusion.specificity(),
        false_positive_rate: confusion.false_positive_rate(),
        roc,
        pr,
        auroc,
        auprc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Fraction of positive/negative pairs ranked correctly, ties counted half.
    fn pairwise_auc(scores: &[f64], labels: &[u8]) -> f64 {
        let (mut good, mut total) = (0.0, 0.0);
        for i in 0..scores.len() {
            for j in 0..scores.len() {
                if labels[i] == 1 && labels[j] == 0 {
                    total += 1.0;
                    if scores[i] > scores[j] {
                        good += 1.0;
                    } else if scores[i] == scores[j] {
                        good += 0.5;
                    }
                }
            }
        }
        good / total
    }

    #[test]
    fn worked_confusion_example() {
        let c = ConfusionCounts { tp: 3, tn: 4, fp: 1, fn_: 2 };
        assert_eq!(c.accuracy(), 0.7);
        assert_eq!(c.precision(), 0.75);
        assert_eq!(c.recall(), 0.6);
        assert_eq!(c.f1(), 2.0 / 3.0);
        assert_eq!(c.specificity(), 0.8);
        assert_eq!(c.false_positive_rate(), 0.2);
    }

    #[test]
    fn perfect_ranking_has_unit_auc() {
        let scores = [0.1, 0.2, 0.3, 0.8, 0.9];
        let labels = [0, 0, 0, 1, 1];
        assert_eq!(roc_auc(&scores, &labels).unwrap(), 1.0);
        assert_eq!(pr_auc(&scores, &labels).unwrap(), 1.0);
    }

    #[test]
    fn single_class_auc_is_undefined_but_counts_reported() {
        let r = evaluate(&[0.2, 0.7], &[1, 1]).unwrap();
        assert_eq!(r.auroc(), Err(MlError::UndefinedAuc));
        assert_eq!(r.confusion.tp, 1);
        assert_eq!(r.recall, 0.5);
        assert_eq!(roc_auc(&[0.2, 0.7], &[0, 0]), Err(MlError::UndefinedAuc));
    }

    #[test]
    fn random_scores_give_chance_auc() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = 10_000;
        let scores: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let labels: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        let auc = roc_auc(&scores, &labels).unwrap();
        assert!((auc - 0.5).abs() <= 0.02, "{auc}");
    }

    #[test]
    fn roc_endpoints_and_pr_start() {
        let scores = [0.9, 0.8, 0.8, 0.3, 0.1];
        let labels = [1, 0, 1, 0, 1];
        let roc = roc_curve(&scores, &labels).unwrap();
        assert_eq!((roc[0].fpr, roc[0].tpr), (0.0, 0.0));
        let last = roc.last().unwrap();
        assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
        let pr = pr_curve(&scores, &labels).unwrap();
        assert_eq!(pr[0].recall, 0.0);
        assert_eq!(pr[0].precision, pr[1].precision);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        assert!(evaluate(&[0.1], &[0, 1]).is_err());
    }

    proptest! {
        #[test]
        fn trapezoid_matches_pairwise_ranking(
            data in prop::collection::vec((0u8..20, any::<bool>()), 2..60)
        ) {
            let scores: Vec<f64> = data.iter().map(|(s, _)| *s as f64 / 19.0).collect();
            let labels: Vec<u8> = data.iter().map(|(_, l)| u8::from(*l)).collect();
            prop_assume!(labels.contains(&0) && labels.contains(&1));
            let auc = roc_auc(&scores, &labels).unwrap();
            prop_assert!((auc - pairwise_auc(&scores, &labels)).abs() <= 1e-9);
        }

        #[test]
        fn roc_is_monotone(
            data in prop::collection::vec((0.0f64..1.0, any::<bool>()), 2..60)
        ) {
            let scores: Vec<f64> = data.iter().map(|(s, _)| *s).collect();
            let labels: Vec<u8> = data.iter().map(|(_, l)| u8::from(*l)).collect();
            prop_assume!(labels.contains(&0) && labels.contains(&1));
            let roc = roc_curve(&scores, &labels).unwrap();
            for w in roc.windows(2) {
                prop_assert!(w[1].fpr >= w[0].fpr && w[1].tpr >= w[0].tpr);
            }
            let r = evaluate(&scores, &labels).unwrap();
            for m in [r.accuracy, r.precision, r.recall, r.f1, r.specificity, r.false_positive_rate,
                      r.auroc.unwrap(), r.auprc.unwrap()] {
                prop_assert!((0.0..=1.0).contains(&m));
            }
        }

        #[test]
        fn f1_is_between_precision_and_recall(tp in 0u64..50, tn in 0u64..50, fp in 0u64..50, fn_ in 0u64..50) {
            let c = ConfusionCounts { tp, tn, fp, fn_ };
            let (p, r) = (c.precision(), c.recall());
            if tn + fp > 0 {
                prop_assert!((c.false_positive_rate() - (1.0 - c.specificity())).abs() <= 1e-15);
            }
            if p + r > 0.0 {
                prop_assert!(c.f1() >= p.min(r) - 1e-12 && c.f1() <= p.max(r) + 1e-12);
                prop_assert!((c.f1() - 2.0 * p * r / (p + r)).abs() <= 1e-12);
            }
        }

        #[test]
        fn label_flip_symmetry(
            data in prop::collection::vec((0.0f64..1.0, any::<bool>()), 1..60)
        ) {
            // Exclude scores exactly at the threshold so s -> 1 - s flips the decision.
            let scores: Vec<f64> = data.iter().map(|(s, _)| *s).filter(|s| *s != 0.5).collect();
            let labels: Vec<u8> = data.iter().filter(|(s, _)| *s != 0.5).map(|(_, l)| u8::from(*l)).collect();
            let c = ConfusionCounts::from_scores(&scores, &labels, 0.5);
            let flipped_scores: Vec<f64> = scores.iter().map(|s| 1.0 - s).collect();
            let flipped_labels: Vec<u8> = labels.iter().map(|l| 1 - l).collect();
            let f = ConfusionCounts::from_scores(&flipped_scores, &flipped_labels, 0.5);
            prop_assert_eq!(f, c.flipped());
            prop_assert_eq!(f.accuracy(), c.accuracy());
            // precision of the flipped problem is the negative predictive value
            prop_assert_eq!(f.precision(), ratio(c.tn, c.tn + c.fn_));
            prop_assert_eq!(f.recall(), c.specificity());
        }
    }
}
