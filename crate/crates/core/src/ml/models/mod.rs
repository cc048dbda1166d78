//! From-scratch binary classifiers. Every model emits a score in `[0, 1]`
//! that estimates P(label = 1).

mod forest;
mod knn;
mod logistic;
mod mlp;
mod svm;

pub use forest::{ForestModel, MaxFeatures, Tree, TreeNode};
pub use knn::{KnnAlgorithm, KnnModel, KnnWeights};
pub use logistic::LogisticModel;
pub use mlp::{LearningRate, Mlp, MlpModel, MlpSolver};
pub use svm::{Gamma, SvmKernel, SvmModel};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Dataset, MlError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    LogisticRegression,
    KNearestNeighbors,
    LinearSvm,
    RandomForest,
    MultilayerPerceptron,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::LogisticRegression,
        Algorithm::KNearestNeighbors,
        Algorithm::LinearSvm,
        Algorithm::RandomForest,
        Algorithm::MultilayerPerceptron,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::LogisticRegression => "logistic-regression",
            Algorithm::KNearestNeighbors => "k-nearest-neighbors",
            Algorithm::LinearSvm => "linear-svm",
            Algorithm::RandomForest => "random-forest",
            Algorithm::MultilayerPerceptron => "multilayer-perceptron",
        }
    }

    /// Hyperparameter grid searched by default.
    pub fn default_grid(self) -> Vec<ClassifierSpec> {
        match self {
            Algorithm::LogisticRegression => [true, false]
                .into_iter()
                .map(|fit_intercept| ClassifierSpec::LogisticRegression { fit_intercept })
                .collect(),
            Algorithm::KNearestNeighbors => {
                let mut grid = Vec::new();
                for n_neighbors in [1, 3, 5, 11] {
                    for weights in [KnnWeights::Uniform, KnnWeights::Distance] {
                        grid.push(ClassifierSpec::KNearestNeighbors {
                            n_neighbors,
                            weights,
                            algorithm: KnnAlgorithm::Brute,
                        });
                    }
                }
                grid
            }
            Algorithm::LinearSvm => {
                let mut grid = Vec::new();
                for c in [0.1, 1.0, 10.0] {
                    for kernel in [SvmKernel::Linear, SvmKernel::Rbf] {
                        for max_iter in [1000, 10000] {
                            grid.push(ClassifierSpec::LinearSvm {
                                c,
                                gamma: Gamma::Scale,
                                kernel,
                                max_iter,
                            });
                        }
                    }
                }
                grid
            }
            Algorithm::RandomForest => {
                let mut grid = Vec::new();
                for n_estimators in [50, 200] {
                    for max_features in [MaxFeatures::Sqrt, MaxFeatures::All] {
                        grid.push(ClassifierSpec::RandomForest {
                            n_estimators,
                            max_features,
                        });
                    }
                }
                grid
            }
            Algorithm::MultilayerPerceptron => {
                let mut grid = Vec::new();
                for hidden in [vec![10], vec![50], vec![50, 25]] {
                    for learning_rate_init in [1e-3, 1e-2] {
                        grid.push(ClassifierSpec::MultilayerPerceptron {
                            hidden_layer_sizes: hidden.clone(),
                            solver: MlpSolver::Sgd,
                            learning_rate: LearningRate::Constant,
                            learning_rate_init,
                        });
                    }
                }
                grid
            }
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = MlError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| MlError::Invalid(format!("unknown classifier '{s}'")))
    }
}

/// An algorithm together with one hyperparameter assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "classifier", rename_all = "kebab-case")]
pub enum ClassifierSpec {
    LogisticRegression {
        fit_intercept: bool,
    },
    KNearestNeighbors {
        n_neighbors: usize,
        weights: KnnWeights,
        algorithm: KnnAlgorithm,
    },
    LinearSvm {
        c: f64,
        gamma: Gamma,
        kernel: SvmKernel,
        max_iter: usize,
    },
    RandomForest {
        n_estimators: usize,
        max_features: MaxFeatures,
    },
    MultilayerPerceptron {
        hidden_layer_sizes: Vec<usize>,
        solver: MlpSolver,
        learning_rate: LearningRate,
        learning_rate_init: f64,
    },
}

impl ClassifierSpec {
    pub fn algorithm(&self) -> Algorithm {
        match self {
            ClassifierSpec::LogisticRegression { .. } => Algorithm::LogisticRegression,
            ClassifierSpec::KNearestNeighbors { .. } => Algorithm::KNearestNeighbors,
            ClassifierSpec::LinearSvm { .. } => Algorithm::LinearSvm,
            ClassifierSpec::RandomForest { .. } => Algorithm::RandomForest,
            ClassifierSpec::MultilayerPerceptron { .. } => Algorithm::MultilayerPerceptron,
        }
    }

    /// Size used to break cross-validation ties: neighbors, trees or hidden
    /// units. Zero for models without a size axis.
    pub fn model_size(&self) -> usize {
        match self {
            ClassifierSpec::KNearestNeighbors { n_neighbors, .. } => *n_neighbors,
            ClassifierSpec::RandomForest { n_estimators, .. } => *n_estimators,
            ClassifierSpec::MultilayerPerceptron {
                hidden_layer_sizes, ..
            } => hidden_layer_sizes.iter().sum(),
            _ => 0,
        }
    }

    pub fn validate(&self) -> Result<(), MlError> {
        let bad = |m: &str| Err(MlError::Invalid(m.to_string()));
        match self {
            ClassifierSpec::LogisticRegression { .. } => Ok(()),
            ClassifierSpec::KNearestNeighbors { n_neighbors, .. } if *n_neighbors == 0 => {
                bad("n_neighbors must be >= 1")
            }
            ClassifierSpec::LinearSvm { c, .. } if !(*c > 0.0 && c.is_finite()) => bad("C must be > 0"),
            ClassifierSpec::LinearSvm { max_iter: 0, .. } => bad("max_iter must be >= 1"),
            ClassifierSpec::LinearSvm {
                gamma: Gamma::Value(g),
                ..
            } if !(*g > 0.0 && g.is_finite()) => bad("gamma must be > 0"),
            ClassifierSpec::RandomForest { n_estimators: 0, .. } => bad("n_estimators must be >= 1"),
            ClassifierSpec::RandomForest {
                max_features: MaxFeatures::Count(0),
                ..
            } => bad("max_features must be >= 1"),
            ClassifierSpec::MultilayerPerceptron {
                hidden_layer_sizes,
                learning_rate_init,
                ..
            } => {
                if hidden_layer_sizes.is_empty() || hidden_layer_sizes.len() > 2 {
                    return bad("hidden_layer_sizes must have one or two layers");
                }
                if hidden_layer_sizes.contains(&0) {
                    return bad("hidden layers must be non-empty");
                }
                if !(*learning_rate_init > 0.0 && learning_rate_init.is_finite()) {
                    return bad("learning_rate_init must be > 0");
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for ClassifierSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassifierSpec::LogisticRegression { fit_intercept } => {
                write!(f, "lr(fit_intercept={fit_intercept})")
            }
            ClassifierSpec::KNearestNeighbors {
                n_neighbors,
                weights,
                ..
            } => write!(f, "knn(k={n_neighbors}, weights={weights:?})"),
            ClassifierSpec::LinearSvm {
                c, kernel, max_iter, ..
            } => write!(f, "svm(C={c}, kernel={kernel:?}, max_iter={max_iter})"),
            ClassifierSpec::RandomForest {
                n_estimators,
                max_features,
            } => write!(f, "rf(trees={n_estimators}, max_features={max_features:?})"),
            ClassifierSpec::MultilayerPerceptron {
                hidden_layer_sizes,
                learning_rate,
                learning_rate_init,
                ..
            } => write!(
                f,
                "mlp(hidden={hidden_layer_sizes:?}, lr={learning_rate_init}, schedule={learning_rate:?})"
            ),
        }
    }
}

/// A fitted classifier; immutable and shareable across threads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub spec: ClassifierSpec,
    pub n_features: usize,
    pub params: ModelParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelParams {
    Logistic(LogisticModel),
    Knn(KnnModel),
    Svm(SvmModel),
    Forest(ForestModel),
    Mlp(MlpModel),
}

pub fn train(spec: &ClassifierSpec, data: &Dataset, seed: u64) -> Result<TrainedModel, MlError> {
    spec.validate()?;
    if data.is_empty() {
        return Err(MlError::EmptyDataset("training set is empty".into()));
    }
    if !data.has_both_classes() {
        return Err(MlError::SingleClass);
    }
    let rows = data.rows();
    let labels = data.labels();
    let params = match spec {
        ClassifierSpec::LogisticRegression { fit_intercept } => {
            ModelParams::Logistic(LogisticModel::fit(rows, labels, *fit_intercept))
        }
        ClassifierSpec::KNearestNeighbors {
            n_neighbors,
            weights,
            ..
        } => ModelParams::Knn(KnnModel::fit(rows, labels, *n_neighbors, *weights)),
        ClassifierSpec::LinearSvm {
            c,
            gamma,
            kernel,
            max_iter,
        } => ModelParams::Svm(SvmModel::fit(rows, labels, *c, *kernel, *gamma, *max_iter, seed)),
        ClassifierSpec::RandomForest {
            n_estimators,
            max_features,
        } => ModelParams::Forest(ForestModel::fit(rows, labels, *n_estimators, *max_features, seed)),
        ClassifierSpec::MultilayerPerceptron {
            hidden_layer_sizes,
            solver,
            learning_rate,
            learning_rate_init,
        } => ModelParams::Mlp(MlpModel::fit(
            rows,
            labels,
            hidden_layer_sizes,
            *solver,
            *learning_rate,
            *learning_rate_init,
            seed,
        )),
    };
    Ok(TrainedModel {
        spec: spec.clone(),
        n_features: data.n_features(),
        params,
    })
}

impl TrainedModel {
    pub fn score_row(&self, x: &[f64]) -> Result<f64, MlError> {
        if x.len() != self.n_features {
            return Err(MlError::DimensionMismatch {
                expected: self.n_features,
                got: x.len(),
            });
        }
        Ok(match &self.params {
            ModelParams::Logistic(m) => m.score(x),
            ModelParams::Knn(m) => m.score(x),
            ModelParams::Svm(m) => m.score(x),
            ModelParams::Forest(m) => m.score(x),
            ModelParams::Mlp(m) => m.score(x),
        })
    }

    pub fn predict_scores(&self, data: &Dataset) -> Result<Vec<f64>, MlError> {
        if !data.is_empty() && data.n_features() != self.n_features {
            return Err(MlError::DimensionMismatch {
                expected: self.n_features,
                got: data.n_features(),
            });
        }
        data.rows().iter().map(|r| self.score_row(r)).collect()
    }
}

pub fn predict_scores(model: &TrainedModel, data: &Dataset) -> Result<Vec<f64>, MlError> {
    model.predict_scores(data)
}

/// Hard labels at the default 0.5 threshold.
pub fn predict_labels(scores: &[f64]) -> Vec<u8> {
    scores
        .iter()
        .map(|&s| u8::from(s >= super::eval::DEFAULT_THRESHOLD))
        .collect()
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn separable() -> Dataset {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..20 {
            let t = i as f64 / 20.0;
            rows.push(vec![1.0 + t, 0.5 + 0.3 * t]);
            labels.push(1);
            rows.push(vec![-1.0 - t, -0.2 - 0.4 * t]);
            labels.push(0);
        }
        Dataset::new(rows, labels).unwrap()
    }

    fn all_specs() -> Vec<ClassifierSpec> {
        Algorithm::ALL.iter().flat_map(|a| a.default_grid()).collect()
    }

    #[test]
    fn every_grid_spec_is_valid_and_serializable() {
        for spec in all_specs() {
            spec.validate().unwrap();
            let json = serde_json::to_string(&spec).unwrap();
            assert_eq!(serde_json::from_str::<ClassifierSpec>(&json).unwrap(), spec);
        }
        assert_eq!(Algorithm::ALL.iter().map(|a| a.default_grid().len()).sum::<usize>(), 2 + 8 + 12 + 4 + 6);
    }

    #[test]
    fn every_model_scores_in_unit_interval_and_separates_toy_data() {
        let ds = separable();
        for spec in all_specs() {
            let m = train(&spec, &ds, 7).unwrap();
            let scores = m.predict_scores(&ds).unwrap();
            assert!(scores.iter().all(|s| (0.0..=1.0).contains(s)), "{spec}");
            let auc = crate::ml::eval::roc_auc(&scores, ds.labels()).unwrap();
            assert!(auc > 0.95, "{spec}: auc {auc}");
        }
    }

    #[test]
    fn single_class_training_fails() {
        let ds = Dataset::new(vec![vec![1.0], vec![2.0]], vec![1, 1]).unwrap();
        let spec = ClassifierSpec::LogisticRegression { fit_intercept: true };
        assert_eq!(train(&spec, &ds, 0).unwrap_err(), MlError::SingleClass);
    }

    #[test]
    fn dimension_mismatch_is_detected() {
        let m = train(&ClassifierSpec::LogisticRegression { fit_intercept: true }, &separable(), 0).unwrap();
        let wrong = Dataset::new(vec![vec![1.0, 2.0, 3.0]], vec![1]).unwrap();
        assert!(matches!(
            m.predict_scores(&wrong),
            Err(MlError::DimensionMismatch { expected: 2, got: 3 })
        ));
        let empty = Dataset::new(vec![], vec![]).unwrap();
        assert!(m.predict_scores(&empty).unwrap().is_empty());
    }

    #[test]
    fn json_reload_gives_identical_predictions() {
        let ds = separable();
        for spec in all_specs() {
            let m = train(&spec, &ds, 3).unwrap();
            let json = serde_json::to_string(&m).unwrap();
            let back: TrainedModel = serde_json::from_str(&json).unwrap();
            assert_eq!(back, m, "{spec}");
            assert_eq!(back.predict_scores(&ds).unwrap(), m.predict_scores(&ds).unwrap());
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let bad = [
            ClassifierSpec::KNearestNeighbors {
                n_neighbors: 0,
                weights: KnnWeights::Uniform,
                algorithm: KnnAlgorithm::Brute,
            },
            ClassifierSpec::LinearSvm {
                c: -1.0,
                gamma: Gamma::Scale,
                kernel: SvmKernel::Linear,
                max_iter: 10,
            },
            ClassifierSpec::RandomForest {
                n_estimators: 0,
                max_features: MaxFeatures::Sqrt,
            },
            ClassifierSpec::MultilayerPerceptron {
                hidden_layer_sizes: vec![3, 3, 3],
                solver: MlpSolver::Sgd,
                learning_rate: LearningRate::Constant,
                learning_rate_init: 0.01,
            },
        ];
        for spec in bad {
            assert!(spec.validate().is_err(), "{spec}");
        }
    }
}
