use serde::{Deserialize, Serialize};

use super::{dot, sigmoid};

const ITERATIONS: usize = 300;
/// Inverse regularization strength, as in the usual `C = 1` default.
const C: f64 = 1.0;

/// L2-regularized logistic regression fitted by accelerated gradient descent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
}

impl LogisticModel {
    pub fn fit(rows: &[Vec<f64>], labels: &[u8], fit_intercept: bool) -> Self {
        let n = rows.len() as f64;
        let d = rows[0].len();
        let lambda = 1.0 / (C * n);
        let step = 1.0 / lipschitz(rows, fit_intercept, lambda);

        // theta = [w..., b]
        let mut theta = vec![0.0; d + 1];
        let mut prev = theta.clone();
        let mut look = theta.clone();
        let mut grad = vec![0.0; d + 1];
        for k in 0..ITERATIONS {
            gradient(rows, labels, &look, fit_intercept, lambda, &mut grad);
            prev.copy_from_slice(&theta);
            for ((t, l), g) in theta.iter_mut().zip(&look).zip(&grad) {
                *t = l - step * g;
            }
            let momentum = k as f64 / (k as f64 + 3.0);
            for ((l, t), p) in look.iter_mut().zip(&theta).zip(&prev) {
                *l = t + momentum * (t - p);
            }
        }
        let intercept = if fit_intercept { theta[d] } else { 0.0 };
        theta.truncate(d);
        Self {
            weights: theta,
            intercept,
        }
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.intercept
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        sigmoid(self.decision(x))
    }
}

fn gradient(
    rows: &[Vec<f64>],
    labels: &[u8],
    theta: &[f64],
    fit_intercept: bool,
    lambda: f64,
    grad: &mut [f64],
) {
    let d = rows[0].len();
    let n = rows.len() as f64;
    grad.iter_mut().for_each(|g| *g = 0.0);
    let b = if fit_intercept { theta[d] } else { 0.0 };
    for (x, &y) in rows.iter().zip(labels) {
        let err = sigmoid(dot(&theta[..d], x) + b) - y as f64;
        for (g, xi) in grad[..d].iter_mut().zip(x) {
            *g += err * xi;
        }
        grad[d] += err;
    }
    for (g, t) in grad[..d].iter_mut().zip(&theta[..d]) {
        *g = *g / n + lambda * t;
    }
    grad[d] = if fit_intercept { grad[d] / n } else { 0.0 };
}

/// Upper bound on the gradient's Lipschitz constant from a power iteration
/// on the (augmented) Gram matrix.
fn lipschitz(rows: &[Vec<f64>], fit_intercept: bool, lambda: f64) -> f64 {
    let d = rows[0].len();
    let n = rows.len() as f64;
    let width = d + usize::from(fit_intercept);
    let mut v = vec![1.0 / (width as f64).sqrt(); width];
    let mut eig = 0.0;
    for _ in 0..30 {
        let mut out = vec![0.0; width];
        for x in rows {
            let mut s = dot(&v[..d], x);
            if fit_intercept {
                s += v[d];
            }
            for (o, xi) in out[..d].iter_mut().zip(x) {
                *o += s * xi;
            }
            if fit_intercept {
                out[d] += s;
            }
        }
        let norm = out.iter().map(|o| o * o).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        eig = norm / n;
        v = out.into_iter().map(|o| o / norm).collect();
    }
    // power iteration underestimates; pad by 10%
    0.25 * eig * 1.1 + lambda + 1e-12
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_data_is_fit_exactly() {
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| {
                let t = i as f64 / 10.0 - 2.0;
                vec![t, 0.5 * t + if i % 2 == 0 { 1.0 } else { -1.0 }]
            })
            .collect();
        let labels: Vec<u8> = (0..40).map(|i| (i % 2 == 0) as u8).collect();
        let m = LogisticModel::fit(&rows, &labels, true);
        let correct = rows
            .iter()
            .zip(&labels)
            .filter(|(x, &y)| u8::from(m.score(x) >= 0.5) == y)
            .count();
        assert_eq!(correct, 40);
    }

    #[test]
    fn no_intercept_means_zero_intercept() {
        let rows = vec![vec![1.0], vec![2.0], vec![-1.0], vec![-2.0]];
        let m = LogisticModel::fit(&rows, &[1, 1, 0, 0], false);
        assert_eq!(m.intercept, 0.0);
        assert!(m.weights[0] > 0.0);
    }
}
