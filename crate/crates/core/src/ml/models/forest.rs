use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Features examined per split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaxFeatures {
    Sqrt,
    All,
    Count(usize),
}

impl MaxFeatures {
    fn resolve(self, n_features: usize) -> usize {
        match self {
            MaxFeatures::Sqrt => ((n_features as f64).sqrt() as usize).max(1),
            MaxFeatures::All => n_features,
            MaxFeatures::Count(k) => k.clamp(1, n_features),
        }
    }
}

const LEAF: u32 = u32::MAX;
const MAX_BINS: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    /// `u32::MAX` marks a leaf.
    pub feature: u32,
    pub threshold: f64,
    pub left: u32,
    pub right: u32,
    /// Fraction of positive (bootstrap-weighted) samples reaching the node.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn score(&self, x: &[f64]) -> f64 {
        let mut idx = 0usize;
        loop {
            let node = &self.nodes[idx];
            if node.feature == LEAF {
                return node.value;
            }
            idx = if x[node.feature as usize] <= node.threshold {
                node.left as usize
            } else {
                node.right as usize
            };
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], i: usize) -> usize {
            let n = &nodes[i];
            if n.feature == LEAF {
                0
            } else {
                1 + walk(nodes, n.left as usize).max(walk(nodes, n.right as usize))
            }
        }
        walk(&self.nodes, 0)
    }
}

/// Bagged Gini trees with per-split feature subsampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
}

impl ForestModel {
    pub fn fit(rows: &[Vec<f64>], labels: &[u8], n_trees: usize, max_features: MaxFeatures, seed: u64) -> Self {
        let binned = Binned::new(rows);
        let max_f = max_features.resolve(binned.n_features);
        let trees = (0..n_trees)
            .map(|t| {
                let tree_seed = seed.wrapping_add((t as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
                grow_tree(&binned, labels, max_f, &mut ChaCha8Rng::seed_from_u64(tree_seed))
            })
            .collect();
        Self { trees }
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.score(x)).sum::<f64>() / self.trees.len() as f64
    }
}

/// Training matrix quantized per feature into at most `MAX_BINS` ordered bins.
/// With few distinct values every value gets its own bin, so splits are exact.
struct Binned {
    n_rows: usize,
    n_features: usize,
    /// Column-major bin codes.
    codes: Vec<u16>,
    bin_min: Vec<Vec<f64>>,
    bin_max: Vec<Vec<f64>>,
}

impl Binned {
    fn new(rows: &[Vec<f64>]) -> Self {
        let n_rows = rows.len();
        let n_features = rows[0].len();
        let mut codes = vec![0u16; n_rows * n_features];
        let mut bin_min = Vec::with_capacity(n_features);
        let mut bin_max = Vec::with_capacity(n_features);
        let mut column = Vec::with_capacity(n_rows);
        for f in 0..n_features {
            column.clear();
            column.extend(rows.iter().map(|r| r[f]));
            let mut distinct = column.clone();
            distinct.sort_by(f64::total_cmp);
            distinct.dedup();
            let (mins, maxs): (Vec<f64>, Vec<f64>) = if distinct.len() <= MAX_BINS {
                (distinct.clone(), distinct)
            } else {
                let per = distinct.len().div_ceil(MAX_BINS);
                distinct
                    .chunks(per)
                    .map(|c| (c[0], c[c.len() - 1]))
                    .unzip()
            };
            for (i, v) in column.iter().enumerate() {
                let b = maxs.partition_point(|m| m < v);
                codes[f * n_rows + i] = b as u16;
            }
            bin_min.push(mins);
            bin_max.push(maxs);
        }
        Self {
            n_rows,
            n_features,
            codes,
            bin_min,
            bin_max,
        }
    }

    fn code(&self, f: usize, i: usize) -> usize {
        self.codes[f * self.n_rows + i] as usize
    }
}

struct Split {
    feature: usize,
    bin: usize,
    next_bin: usize,
    impurity: f64,
}

fn weighted_gini(w: f64, pos: f64) -> f64 {
    if w <= 0.0 {
        0.0
    } else {
        2.0 * pos * (w - pos) / w
    }
}

fn grow_tree(data: &Binned, labels: &[u8], max_f: usize, rng: &mut ChaCha8Rng) -> Tree {
    let n = data.n_rows;
    let mut weight = vec![0u32; n];
    for _ in 0..n {
        weight[rng.random_range(0..n)] += 1;
    }
    let root: Vec<usize> = (0..n).filter(|&i| weight[i] > 0).collect();

    let mut nodes: Vec<TreeNode> = Vec::new();
    let mut features: Vec<usize> = (0..data.n_features).collect();
    let mut hist_w = vec![0.0f64; MAX_BINS];
    let mut hist_pos = vec![0.0f64; MAX_BINS];
    // (node index, sample indices)
    let mut stack: Vec<(usize, Vec<usize>)> = Vec::new();
    nodes.push(leaf(&root, &weight, labels));
    stack.push((0, root));

    while let Some((node_idx, samples)) = stack.pop() {
        let (w_total, w_pos) = totals(&samples, &weight, labels);
        if w_pos == 0.0 || w_pos == w_total || samples.len() < 2 {
            continue;
        }
        let mut best: Option<Split> = None;
        let mut examined = 0usize;
        for k in 0..features.len() {
            if examined >= max_f {
                break;
            }
            let j = rng.random_range(k..features.len());
            features.swap(k, j);
            let f = features[k];
            let n_bins = data.bin_max[f].len();
            let (mut lo, mut hi) = (usize::MAX, 0usize);
            for &i in &samples {
                let b = data.code(f, i);
                hist_w[b] += weight[i] as f64;
                if labels[i] == 1 {
                    hist_pos[b] += weight[i] as f64;
                }
                lo = lo.min(b);
                hi = hi.max(b);
            }
            if lo < hi {
                examined += 1;
                let (mut left_w, mut left_pos) = (0.0, 0.0);
                let mut prev: Option<usize> = None;
                for b in lo..=hi {
                    if hist_w[b] == 0.0 {
                        continue;
                    }
                    if let Some(p) = prev {
                        let impurity = weighted_gini(left_w, left_pos)
                            + weighted_gini(w_total - left_w, w_pos - left_pos);
                        if best.as_ref().is_none_or(|s| impurity < s.impurity) {
                            best = Some(Split {
                                feature: f,
                                bin: p,
                                next_bin: b,
                                impurity,
                            });
                        }
                    }
                    left_w += hist_w[b];
                    left_pos += hist_pos[b];
                    prev = Some(b);
                }
            }
            let end = hi.min(n_bins - 1);
            if lo <= end {
                hist_w[lo..=end].iter_mut().for_each(|x| *x = 0.0);
                hist_pos[lo..=end].iter_mut().for_each(|x| *x = 0.0);
            }
        }
        let Some(split) = best else { continue };
        let (left, right): (Vec<usize>, Vec<usize>) = samples
            .iter()
            .partition(|&&i| data.code(split.feature, i) <= split.bin);
        let threshold =
            (data.bin_max[split.feature][split.bin] + data.bin_min[split.feature][split.next_bin]) / 2.0;
        let left_idx = nodes.len();
        nodes.push(leaf(&left, &weight, labels));
        nodes.push(leaf(&right, &weight, labels));
        let node = &mut nodes[node_idx];
        node.feature = split.feature as u32;
        node.threshold = threshold;
        node.left = left_idx as u32;
        node.right = left_idx as u32 + 1;
        stack.push((left_idx + 1, right));
        stack.push((left_idx, left));
    }
    Tree { nodes }
}

fn totals(samples: &[usize], weight: &[u32], labels: &[u8]) -> (f64, f64) {
    samples.iter().fold((0.0, 0.0), |(w, p), &i| {
        let wi = weight[i] as f64;
        (w + wi, if labels[i] == 1 { p + wi } else { p })
    })
}

fn leaf(samples: &[usize], weight: &[u32], labels: &[u8]) -> TreeNode {
    let (w, p) = totals(samples, weight, labels);
    TreeNode {
        feature: LEAF,
        threshold: 0.0,
        left: 0,
        right: 0,
        value: if w > 0.0 { p / w } else { 0.0 },
    }
}
