use serde::{Deserialize, Serialize};

use super::squared_distance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KnnWeights {
    Uniform,
    Distance,
}

/// Neighbor-search strategy. All variants use exhaustive search; the datasets
/// are small enough that tree indexes buy nothing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KnnAlgorithm {
    Auto,
    BallTree,
    KdTree,
    Brute,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub weights: KnnWeights,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
}

impl KnnModel {
    pub fn fit(rows: &[Vec<f64>], labels: &[u8], k: usize, weights: KnnWeights) -> Self {
        Self {
            k: k.min(rows.len()),
            weights,
            rows: rows.to_vec(),
            labels: labels.to_vec(),
        }
    }

    /// Weighted fraction of positive labels among the `k` nearest rows.
    pub fn score(&self, x: &[f64]) -> f64 {
        let mut dist: Vec<(f64, usize)> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| (squared_distance(r, x), i))
            .collect();
        let by_distance = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < dist.len() {
            dist.select_nth_unstable_by(self.k - 1, by_distance);
            dist.truncate(self.k);
        }
        let neighbors = &dist[..];
        match self.weights {
            KnnWeights::Uniform => {
                let pos = neighbors.iter().filter(|(_, i)| self.labels[*i] == 1).count();
                pos as f64 / neighbors.len() as f64
            }
            KnnWeights::Distance => {
                let exact: Vec<_> = neighbors.iter().filter(|(d, _)| *d == 0.0).collect();
                if !exact.is_empty() {
                    let pos = exact.iter().filter(|(_, i)| self.labels[*i] == 1).count();
                    return pos as f64 / exact.len() as f64;
                }
                let (mut pos, mut total) = (0.0, 0.0);
                for (d, i) in neighbors {
                    let w = 1.0 / d.sqrt();
                    total += w;
                    if self.labels[*i] == 1 {
                        pos += w;
                    }
                }
                pos / total
            }
        }
    }
}
