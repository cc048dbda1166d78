use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{dot, sigmoid, squared_distance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SvmKernel {
    Linear,
    Rbf,
}

/// RBF width. `Scale` resolves to `1 / (n_features * var(X))` at fit time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gamma {
    Scale,
    Value(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kernel", rename_all = "lowercase")]
pub enum SvmDecision {
    Linear {
        weights: Vec<f64>,
        bias: f64,
    },
    /// `f(x) = sum_i coef_i * (exp(-gamma |x - sv_i|^2) + 1)`
    Rbf {
        gamma: f64,
        support: Vec<Vec<f64>>,
        coef: Vec<f64>,
    },
}

impl SvmDecision {
    fn value(&self, x: &[f64]) -> f64 {
        match self {
            SvmDecision::Linear { weights, bias } => dot(weights, x) + bias,
            SvmDecision::Rbf { gamma, support, coef } => support
                .iter()
                .zip(coef)
                .map(|(sv, c)| c * rbf(*gamma, sv, x))
                .sum(),
        }
    }
}

/// The constant term acts as a regularized bias.
fn rbf(gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    (-gamma * squared_distance(a, b)).exp() + 1.0
}

/// Hinge-loss SVM trained by stochastic sub-gradient descent (Pegasos), with
/// the margin mapped to `[0, 1]` by a fitted logistic link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub decision: SvmDecision,
    /// Link `sigmoid(link_a * f(x) + link_b)`.
    pub link_a: f64,
    pub link_b: f64,
}

impl SvmModel {
    pub fn fit(
        rows: &[Vec<f64>],
        labels: &[u8],
        c: f64,
        kernel: SvmKernel,
        gamma: Gamma,
        max_iter: usize,
        seed: u64,
    ) -> Self {
        let n = rows.len();
        let lambda = 1.0 / (c * n as f64);
        let y: Vec<f64> = labels.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        let decision = match kernel {
            SvmKernel::Linear => {
                let d = rows[0].len();
                let mut w = vec![0.0; d];
                let mut b = 0.0;
                for t in 1..=max_iter {
                    let i = rng.random_range(0..n);
                    let eta = 1.0 / (lambda * t as f64);
                    let margin = y[i] * (dot(&w, &rows[i]) + b);
                    let shrink = 1.0 - eta * lambda;
                    w.iter_mut().for_each(|wi| *wi *= shrink);
                    b *= shrink;
                    if margin < 1.0 {
                        for (wi, xi) in w.iter_mut().zip(&rows[i]) {
                            *wi += eta * y[i] * xi;
                        }
                        b += eta * y[i];
                    }
                }
                SvmDecision::Linear { weights: w, bias: b }
            }
            SvmKernel::Rbf => {
                let gamma = match gamma {
                    Gamma::Value(g) => g,
                    Gamma::Scale => scale_gamma(rows),
                };
                let gram = gram_matrix(rows, gamma);
                let mut counts = vec![0u32; n];
                // g[j] = sum_i counts[i] y[i] K(i, j)
                let mut g = vec![0.0; n];
                for t in 1..=max_iter {
                    let i = rng.random_range(0..n);
                    let f = g[i] / (lambda * t as f64);
                    if y[i] * f < 1.0 {
                        counts[i] += 1;
                        let row = &gram[i * n..(i + 1) * n];
                        for (gj, k) in g.iter_mut().zip(row) {
                            *gj += y[i] * k;
                        }
                    }
                }
                let scale = 1.0 / (lambda * max_iter as f64);
                let (support, coef) = (0..n)
                    .filter(|&i| counts[i] > 0)
                    .map(|i| (rows[i].clone(), counts[i] as f64 * y[i] * scale))
                    .unzip();
                SvmDecision::Rbf {
                    gamma,
                    support,
                    coef,
                }
            }
        };
        let margins: Vec<f64> = rows.iter().map(|x| decision.value(x)).collect();
        let (link_a, link_b) = fit_link(&margins, labels);
        Self {
            decision,
            link_a,
            link_b,
        }
    }

    pub fn margin(&self, x: &[f64]) -> f64 {
        self.decision.value(x)
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        sigmoid(self.link_a * self.margin(x) + self.link_b)
    }
}

fn scale_gamma(rows: &[Vec<f64>]) -> f64 {
    let d = rows[0].len() as f64;
    let count = rows.len() as f64 * d;
    let mean = rows.iter().flatten().sum::<f64>() / count;
    let var = rows.iter().flatten().map(|x| (x - mean).powi(2)).sum::<f64>() / count;
    if var > 0.0 {
        1.0 / (d * var)
    } else {
        1.0 / d
    }
}

fn gram_matrix(rows: &[Vec<f64>], gamma: f64) -> Vec<f64> {
    let n = rows.len();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        k[i * n + i] = 2.0;
        for j in 0..i {
            let v = rbf(gamma, &rows[i], &rows[j]);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    k
}

/// Fits `P(y = 1 | f) = sigmoid(a f + b)` by Newton's method on smoothed
/// targets, keeping `a >= 0` so the link never reverses the ranking.
fn fit_link(margins: &[f64], labels: &[u8]) -> (f64, f64) {
    let pos = labels.iter().filter(|&&l| l == 1).count() as f64;
    let neg = labels.len() as f64 - pos;
    let hi = (pos + 1.0) / (pos + 2.0);
    let lo = 1.0 / (neg + 2.0);
    let targets: Vec<f64> = labels.iter().map(|&l| if l == 1 { hi } else { lo }).collect();

    let loss = |a: f64, b: f64| -> f64 {
        margins
            .iter()
            .zip(&targets)
            .map(|(f, t)| {
                let z = a * f + b;
                // log(1 + e^z) - t z, computed stably
                let softplus = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
                softplus - t * z
            })
            .sum()
    };

    let (mut a, mut b) = (1.0, ((pos + 1.0) / (neg + 1.0)).ln());
    let mut current = loss(a, b);
    for _ in 0..100 {
        let (mut ga, mut gb, mut haa, mut hab, mut hbb) = (0.0, 0.0, 1e-12, 0.0, 1e-12);
        for (f, t) in margins.iter().zip(&targets) {
            let p = sigmoid(a * f + b);
            let r = p - t;
            let w = p * (1.0 - p);
            ga += r * f;
            gb += r;
            haa += w * f * f;
            hab += w * f;
            hbb += w;
        }
        let det = haa * hbb - hab * hab;
        if det.abs() < 1e-300 {
            break;
        }
        let da = (hbb * ga - hab * gb) / det;
        let db = (haa * gb - hab * ga) / det;
        let mut step = 1.0;
        let mut improved = false;
        while step > 1e-10 {
            let (na, nb) = (a - step * da, b - step * db);
            let l = loss(na, nb);
            if l < current - 1e-12 {
                a = na;
                b = nb;
                current = l;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved || (ga.abs() + gb.abs()) < 1e-10 {
            break;
        }
    }
    if a.is_nan() || a <= 0.0 || !a.is_finite() || !b.is_finite() {
        return (1.0, 0.0);
    }
    (a, b)
}
