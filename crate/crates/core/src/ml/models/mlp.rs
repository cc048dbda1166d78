use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{dot, sigmoid};

const L2_ALPHA: f64 = 1e-4;
const BATCH_SIZE: usize = 32;
const MAX_EPOCHS: usize = 100;
const MOMENTUM: f64 = 0.9;
const TOL: f64 = 1e-4;
const PATIENCE: usize = 10;
const POWER_T: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MlpSolver {
    /// Mini-batch gradient descent with Nesterov momentum.
    Sgd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LearningRate {
    Constant,
    /// `lr_init / epoch^0.5`
    InvScaling,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub n_in: usize,
    pub n_out: usize,
    /// Row-major `n_out x n_in`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    fn row(&self, j: usize) -> &[f64] {
        &self.weights[j * self.n_in..(j + 1) * self.n_in]
    }
}

/// Fully connected network: ReLU hidden layers, one logistic output unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Layer>,
}

impl Mlp {
    /// Glorot-uniform initialization.
    pub fn new(n_inputs: usize, hidden: &[usize], rng: &mut impl Rng) -> Self {
        let mut sizes = vec![n_inputs];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(k, w)| {
                let (n_in, n_out) = (w[0], w[1]);
                let factor = if k + 2 == sizes.len() { 2.0 } else { 6.0 };
                let bound = (factor / (n_in + n_out) as f64).sqrt();
                Layer {
                    n_in,
                    n_out,
                    weights: (0..n_in * n_out).map(|_| rng.random_range(-bound..bound)).collect(),
                    bias: (0..n_out).map(|_| rng.random_range(-bound..bound)).collect(),
                }
            })
            .collect();
        Self { layers }
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn set_flat_params(&mut self, params: &[f64]) {
        let mut at = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&params[at..at + nw]);
            at += nw;
            let nb = l.bias.len();
            l.bias.copy_from_slice(&params[at..at + nb]);
            at += nb;
        }
    }

    /// Activations of every layer; the last holds the output probability.
    fn forward(&self, x: &[f64], acts: &mut Vec<Vec<f64>>) {
        acts.resize(self.layers.len() + 1, Vec::new());
        acts[0].clear();
        acts[0].extend_from_slice(x);
        let last = self.layers.len() - 1;
        for (k, layer) in self.layers.iter().enumerate() {
            let (before, after) = acts.split_at_mut(k + 1);
            let input = &before[k];
            let out = &mut after[0];
            out.clear();
            out.extend((0..layer.n_out).map(|j| {
                let z = dot(layer.row(j), input) + layer.bias[j];
                if k == last {
                    sigmoid(z)
                } else {
                    z.max(0.0)
                }
            }));
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut acts = Vec::new();
        self.forward(x, &mut acts);
        acts[self.layers.len()][0]
    }

    /// Mean log-loss plus `alpha / (2 n) * sum(W^2)` and its gradient in
    /// [`Mlp::flat_params`] order.
    pub fn loss_and_gradient(&self, rows: &[&[f64]], labels: &[u8], alpha: f64) -> (f64, Vec<f64>) {
        let n = rows.len() as f64;
        let mut grads: Vec<Layer> = self
            .layers
            .iter()
            .map(|l| Layer {
                n_in: l.n_in,
                n_out: l.n_out,
                weights: vec![0.0; l.weights.len()],
                bias: vec![0.0; l.bias.len()],
            })
            .collect();
        let mut acts = Vec::new();
        let mut delta: Vec<f64> = Vec::new();
        let mut prev_delta: Vec<f64> = Vec::new();
        let mut loss = 0.0;
        let n_layers = self.layers.len();
        for (x, &y) in rows.iter().zip(labels) {
            self.forward(x, &mut acts);
            let p = acts[n_layers][0];
            let eps = 1e-15;
            let pc = p.clamp(eps, 1.0 - eps);
            loss -= if y == 1 { pc.ln() } else { (1.0 - pc).ln() };
            delta.clear();
            delta.push(p - y as f64);
            for k in (0..n_layers).rev() {
                let layer = &self.layers[k];
                let g = &mut grads[k];
                let input = &acts[k];
                for (j, &dj) in delta.iter().enumerate() {
                    if dj == 0.0 {
                        continue;
                    }
                    let grow = &mut g.weights[j * layer.n_in..(j + 1) * layer.n_in];
                    for (gw, a) in grow.iter_mut().zip(input) {
                        *gw += dj * a;
                    }
                    g.bias[j] += dj;
                }
                if k > 0 {
                    prev_delta.clear();
                    prev_delta.resize(layer.n_in, 0.0);
                    for (j, &dj) in delta.iter().enumerate() {
                        if dj == 0.0 {
                            continue;
                        }
                        for (pd, w) in prev_delta.iter_mut().zip(layer.row(j)) {
                            *pd += dj * w;
                        }
                    }
                    // ReLU derivative
                    for (pd, a) in prev_delta.iter_mut().zip(input) {
                        if *a <= 0.0 {
                            *pd = 0.0;
                        }
                    }
                    std::mem::swap(&mut delta, &mut prev_delta);
                }
            }
        }
        let mut penalty = 0.0;
        for (g, l) in grads.iter_mut().zip(&self.layers) {
            for (gw, w) in g.weights.iter_mut().zip(&l.weights) {
                *gw = *gw / n + alpha * w / n;
                penalty += w * w;
            }
            g.bias.iter_mut().for_each(|b| *b /= n);
        }
        let loss = loss / n + 0.5 * alpha * penalty / n;
        let mut flat = Vec::with_capacity(self.n_params());
        for g in grads {
            flat.extend(g.weights);
            flat.extend(g.bias);
        }
        (loss, flat)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub network: Mlp,
    pub epochs: usize,
}

impl MlpModel {
    pub fn fit(
        rows: &[Vec<f64>],
        labels: &[u8],
        hidden: &[usize],
        _solver: MlpSolver,
        schedule: LearningRate,
        lr_init: f64,
        seed: u64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = Mlp::new(rows[0].len(), hidden, &mut rng);
        let mut params = net.flat_params();
        let mut velocity = vec![0.0; params.len()];
        let mut order: Vec<usize> = (0..rows.len()).collect();
        let mut best_loss = f64::INFINITY;
        let mut stale = 0;
        let mut epochs = 0;
        let mut batch_rows: Vec<&[f64]> = Vec::with_capacity(BATCH_SIZE);
        let mut batch_labels: Vec<u8> = Vec::with_capacity(BATCH_SIZE);

        for epoch in 1..=MAX_EPOCHS {
            epochs = epoch;
            let lr = match schedule {
                LearningRate::Constant => lr_init,
                LearningRate::InvScaling => lr_init / (epoch as f64).powf(POWER_T),
            };
            order.shuffle(&mut rng);
            let mut epoch_loss = 0.0;
            for chunk in order.chunks(BATCH_SIZE) {
                batch_rows.clear();
                batch_labels.clear();
                batch_rows.extend(chunk.iter().map(|&i| rows[i].as_slice()));
                batch_labels.extend(chunk.iter().map(|&i| labels[i]));
                let (loss, grad) = net.loss_and_gradient(&batch_rows, &batch_labels, L2_ALPHA);
                epoch_loss += loss * chunk.len() as f64;
                // Nesterov momentum
                for ((p, v), g) in params.iter_mut().zip(velocity.iter_mut()).zip(&grad) {
                    *v = MOMENTUM * *v - lr * g;
                    *p += MOMENTUM * *v - lr * g;
                }
                net.set_flat_params(&params);
            }
            epoch_loss /= rows.len() as f64;
            if !epoch_loss.is_finite() {
                break;
            }
            if epoch_loss > best_loss - TOL {
                stale += 1;
                if stale >= PATIENCE {
                    break;
                }
            } else {
                stale = 0;
            }
            best_loss = best_loss.min(epoch_loss);
        }
        Self { network: net, epochs }
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        let s = self.network.predict(x);
        if s.is_finite() {
            s
        } else {
            0.5
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_data() -> (Vec<Vec<f64>>, Vec<u8>) {
        let rows = vec![
            vec![0.3, -1.2, 0.8],
            vec![-0.7, 0.4, 1.5],
            vec![1.1, 0.9, -0.3],
            vec![-1.4, -0.2, 0.1],
            vec![0.5, 1.7, -1.1],
        ];
        (rows, vec![1, 0, 1, 0, 1])
    }

    #[test]
    fn gradient_matches_central_differences() {
        let (rows, labels) = tiny_data();
        let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        let mut net = Mlp::new(3, &[3], &mut ChaCha8Rng::seed_from_u64(4));
        let (_, analytic) = net.loss_and_gradient(&refs, &labels, 0.1);
        let base = net.flat_params();
        let h = 1e-6;
        for i in 0..base.len() {
            let mut p = base.clone();
            p[i] += h;
            net.set_flat_params(&p);
            let up = net.loss_and_gradient(&refs, &labels, 0.1).0;
            p[i] -= 2.0 * h;
            net.set_flat_params(&p);
            let down = net.loss_and_gradient(&refs, &labels, 0.1).0;
            let numeric = (up - down) / (2.0 * h);
            let rel = (numeric - analytic[i]).abs() / numeric.abs().max(analytic[i].abs()).max(1e-8);
            assert!(rel <= 1e-4 || (numeric - analytic[i]).abs() < 1e-9, "param {i}: {numeric} vs {}", analytic[i]);
        }
        net.set_flat_params(&base);
    }

    #[test]
    fn flat_params_round_trip() {
        let mut net = Mlp::new(4, &[5, 2], &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(net.n_params(), 4 * 5 + 5 + 5 * 2 + 2 + 2 + 1);
        let p: Vec<f64> = (0..net.n_params()).map(|i| i as f64).collect();
        net.set_flat_params(&p);
        assert_eq!(net.flat_params(), p);
    }

    #[test]
    fn learns_a_linear_boundary() {
        let rows: Vec<Vec<f64>> = (0..100)
            .map(|i| vec![(i as f64 * 0.13).sin() * 2.0, (i as f64 * 0.29).cos() * 2.0])
            .collect();
        let labels: Vec<u8> = rows.iter().map(|r| u8::from(r[0] + r[1] > 0.0)).collect();
        for schedule in [LearningRate::Constant, LearningRate::InvScaling] {
            let m = MlpModel::fit(&rows, &labels, &[10], MlpSolver::Sgd, schedule, 0.05, 3);
            let correct = rows
                .iter()
                .zip(&labels)
                .filter(|(x, &y)| u8::from(m.score(x) >= 0.5) == y)
                .count();
            assert!(correct >= 90, "{schedule:?}: {correct}");
        }
    }
}
