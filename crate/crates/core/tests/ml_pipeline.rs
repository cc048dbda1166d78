use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nanoguard::harness::prepare;
use nanoguard::ml::models::{KnnAlgorithm, KnnWeights};
use nanoguard::ml::{
    evaluate, predict_scores, roc_auc, split, train, Algorithm, ClassifierSpec, ConfusionCounts, Dataset, MlError,
    ATTACK, NORMAL,
};

/// Two Gaussian blobs, `n` rows each, separated along every axis by `gap`.
fn blobs(n: usize, dim: usize, gap: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for label in [ATTACK, NORMAL] {
        for _ in 0..n {
            let shift = if label == NORMAL { gap } else { 0.0 };
            rows.push((0..dim).map(|_| rng.random::<f64>() + shift).collect());
            labels.push(label);
        }
    }
    Dataset::new(rows, labels).unwrap()
}

/// Probability that a random positive outranks a random negative, ties half.
fn pairwise_auc(scores: &[f64], labels: &[u8]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        for (j, &sj) in scores.iter().enumerate() {
            if labels[i] == NORMAL && labels[j] == ATTACK {
                pairs += 1.0;
                wins += if si > sj {
                    1.0
                } else if si == sj {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    wins / pairs
}

#[test]
fn preprocessing_is_fitted_on_the_training_split_only() {
    let mut raw = blobs(40, 3, 2.0, 1);
    let (train_raw, test_raw) = split(&raw, 0.7, 9).unwrap();
    let (train, test, pre) = prepare(&raw, 0.7, 9).unwrap();
    assert_eq!(train.len(), train_raw.len());
    assert_eq!(test.len(), test_raw.len());
    for c in 0..3 {
        let col: Vec<f64> = train_raw.rows().iter().map(|r| r[c]).collect();
        let mean = col.iter().sum::<f64>() / col.len() as f64;
        let sd = (col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / col.len() as f64).sqrt();
        assert!((pre.means[c] - mean).abs() < 1e-12);
        assert!((pre.scales[c] - sd).abs() < 1e-12);
        let z: Vec<f64> = train.rows().iter().map(|r| r[c]).collect();
        assert!(z.iter().sum::<f64>().abs() < 1e-9);
    }
    // shifting test rows does not move the fitted statistics
    let shifted: Vec<Vec<f64>> = raw
        .rows()
        .iter()
        .map(|r| {
            if test_raw.rows().contains(r) {
                r.iter().map(|x| x + 100.0).collect()
            } else {
                r.clone()
            }
        })
        .collect();
    raw = Dataset::new(shifted, raw.labels().to_vec()).unwrap();
    let (_, _, pre2) = prepare(&raw, 0.7, 9).unwrap();
    assert_eq!(pre, pre2);
}

#[test]
fn uniform_knn_scores_are_multiples_of_one_over_k() {
    let data = blobs(30, 2, 0.3, 2);
    let spec = ClassifierSpec::KNearestNeighbors {
        n_neighbors: 5,
        weights: KnnWeights::Uniform,
        algorithm: KnnAlgorithm::Brute,
    };
    let model = train(&spec, &data, 0).unwrap();
    let probe = blobs(20, 2, 0.3, 3);
    for s in predict_scores(&model, &probe).unwrap() {
        let k = s * 5.0;
        assert!((k - k.round()).abs() < 1e-12, "{s}");
    }
}

#[test]
fn random_scores_give_chance_auroc() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 10_000;
    let scores: Vec<f64> = (0..n).map(|_| rng.random()).collect();
    let labels: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
    let auc = roc_auc(&scores, &labels).unwrap();
    assert!((auc - 0.5).abs() <= 0.02, "{auc}");
}

#[test]
fn every_classifier_separates_clear_blobs() {
    let data = blobs(40, 4, 1.5, 4);
    let (train_set, test_set) = split(&data, 0.7, 0).unwrap();
    for algo in Algorithm::ALL {
        let spec = &algo.default_grid()[0];
        let model = train(spec, &train_set, 0).unwrap();
        let scores = predict_scores(&model, &test_set).unwrap();
        assert!(scores.iter().all(|s| (0.0..=1.0).contains(s)), "{algo}");
        let report = evaluate(&scores, test_set.labels()).unwrap();
        assert!(report.auroc.unwrap() > 0.9, "{algo}: {:?}", report.auroc);
    }
}

#[test]
fn width_mismatch_is_rejected() {
    let data = blobs(10, 3, 1.0, 5);
    let model = train(&Algorithm::LogisticRegression.default_grid()[0], &data, 0).unwrap();
    let narrow = blobs(5, 2, 1.0, 6);
    assert_eq!(
        predict_scores(&model, &narrow).unwrap_err(),
        MlError::DimensionMismatch { expected: 3, got: 2 }
    );
}

#[test]
fn empty_or_single_class_inputs_are_handled() {
    let data = blobs(10, 3, 1.0, 5);
    let model = train(&Algorithm::LogisticRegression.default_grid()[0], &data, 0).unwrap();
    let empty = Dataset::new(Vec::new(), Vec::new()).unwrap();
    assert!(predict_scores(&model, &empty).unwrap().is_empty());
    assert!(evaluate(&[], &[]).unwrap().auroc.is_none());
    let report = evaluate(&[0.2, 0.9], &[NORMAL, NORMAL]).unwrap();
    assert!(report.auroc.is_none());
    let one_class = Dataset::new(vec![vec![0.0], vec![1.0]], vec![ATTACK, ATTACK]).unwrap();
    assert_eq!(
        train(&Algorithm::LogisticRegression.default_grid()[0], &one_class, 0).unwrap_err(),
        MlError::SingleClass
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn auroc_equals_pairwise_statistic(
        data in prop::collection::vec((0u8..8, 0u8..2), 2..80)
    ) {
        let scores: Vec<f64> = data.iter().map(|&(s, _)| s as f64 / 7.0).collect();
        let labels: Vec<u8> = data.iter().map(|&(_, l)| l).collect();
        let both = labels.contains(&ATTACK) && labels.contains(&NORMAL);
        match roc_auc(&scores, &labels) {
            Ok(auc) => {
                prop_assert!(both);
                prop_assert!((auc - pairwise_auc(&scores, &labels)).abs() <= 1e-12);
            }
            Err(_) => prop_assert!(!both),
        }
    }

    #[test]
    fn confusion_counts_partition_the_rows(
        data in prop::collection::vec((0.0f64..1.0, 0u8..2), 1..60),
        threshold in 0.0f64..1.0,
    ) {
        let scores: Vec<f64> = data.iter().map(|d| d.0).collect();
        let labels: Vec<u8> = data.iter().map(|d| d.1).collect();
        let c = ConfusionCounts::from_scores(&scores, &labels, threshold);
        prop_assert_eq!(c.total(), data.len() as u64);
        let positives = labels.iter().filter(|&&l| l == NORMAL).count() as u64;
        prop_assert_eq!(c.tp + c.fn_, positives);
        let predicted = scores.iter().filter(|&&s| s >= threshold).count() as u64;
        prop_assert_eq!(c.tp + c.fp, predicted);
    }
}
