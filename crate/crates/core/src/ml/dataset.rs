use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{FeatureKind, MlError};

/// Label for a scenario under attack.
pub const ATTACK: u8 = 0;
/// Label for normal traffic.
pub const NORMAL: u8 = 1;

/// Identity of the scenario a row was generated from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowTag {
    pub n_legit: u32,
    pub n_malicious: u32,
    pub seed: u64,
}

/// Labeled feature matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    rows: Vec<Vec<f64>>,
    labels: Vec<u8>,
    tags: Vec<RowTag>,
    pub kind: Option<FeatureKind>,
    pub sampling_period: Option<u32>,
}

impl Dataset {
    pub fn new(rows: Vec<Vec<f64>>, labels: Vec<u8>) -> Result<Self, MlError> {
        let tags = vec![RowTag::default(); rows.len()];
        Self::with_tags(rows, labels, tags)
    }

    pub fn with_tags(rows: Vec<Vec<f64>>, labels: Vec<u8>, tags: Vec<RowTag>) -> Result<Self, MlError> {
        if rows.len() != labels.len() || rows.len() != tags.len() {
            return Err(MlError::Invalid(format!(
                "{} rows, {} labels, {} tags",
                rows.len(),
                labels.len(),
                tags.len()
            )));
        }
        if let Some(first) = rows.first() {
            if rows.iter().any(|r| r.len() != first.len()) {
                return Err(MlError::Invalid("rows have different lengths".into()));
            }
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(MlError::Invalid("labels must be 0 or 1".into()));
        }
        Ok(Self {
            rows,
            labels,
            tags,
            kind: None,
            sampling_period: None,
        })
    }

    pub fn with_meta(mut self, kind: FeatureKind, sampling_period: u32) -> Self {
        self.kind = Some(kind);
        self.sampling_period = Some(sampling_period);
        self
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn tags(&self) -> &[RowTag] {
        &self.tags
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let pos = self.labels.iter().filter(|&&l| l == 1).count();
        [self.labels.len() - pos, pos]
    }

    pub fn has_both_classes(&self) -> bool {
        let [neg, pos] = self.class_counts();
        neg > 0 && pos > 0
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            tags: idx.iter().map(|&i| self.tags[i]).collect(),
            kind: self.kind,
            sampling_period: self.sampling_period,
        }
    }
}

/// Right-pads every vector with zeros to the longest length.
pub fn pad_rows(raw: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let width = raw.iter().map(Vec::len).max().unwrap_or(0);
    raw.iter()
        .map(|r| {
            let mut r = r.clone();
            r.resize(width, 0.0);
            r
        })
        .collect()
}

/// Padding, edge-column trimming and standardization fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preprocessor {
    /// Padded input width.
    pub width: usize,
    /// First kept column (inclusive).
    pub start: usize,
    /// Last kept column (exclusive).
    pub end: usize,
    pub means: Vec<f64>,
    /// Column standard deviations; 1 for constant columns.
    pub scales: Vec<f64>,
}

impl Preprocessor {
    pub fn fit(raw: &[Vec<f64>]) -> Result<Self, MlError> {
        if raw.is_empty() {
            return Err(MlError::EmptyDataset("no rows".into()));
        }
        let rows = pad_rows(raw);
        let width = rows[0].len();
        let nonzero = |c: usize| rows.iter().any(|r| r[c] != 0.0);
        let Some(start) = (0..width).find(|&c| nonzero(c)) else {
            return Err(MlError::EmptyDataset("every column is all-zero".into()));
        };
        let end = (0..width).rev().find(|&c| nonzero(c)).expect("start exists") + 1;
        let n = rows.len() as f64;
        let mut means = Vec::with_capacity(end - start);
        let mut scales = Vec::with_capacity(end - start);
        for c in start..end {
            let mean = rows.iter().map(|r| r[c]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r[c] - mean).powi(2)).sum::<f64>() / n;
            let sd = var.sqrt();
            means.push(mean);
            scales.push(if sd > 0.0 { sd } else { 1.0 });
        }
        Ok(Self {
            width,
            start,
            end,
            means,
            scales,
        })
    }

    pub fn n_output(&self) -> usize {
        self.end - self.start
    }

    pub fn transform_row(&self, raw: &[f64]) -> Vec<f64> {
        (self.start..self.end)
            .zip(self.means.iter().zip(&self.scales))
            .map(|(c, (m, s))| (raw.get(c).copied().unwrap_or(0.0) - m) / s)
            .collect()
    }

    pub fn transform(&self, ds: &Dataset) -> Dataset {
        Dataset {
            rows: ds.rows.iter().map(|r| self.transform_row(r)).collect(),
            labels: ds.labels.clone(),
            tags: ds.tags.clone(),
            kind: ds.kind,
            sampling_period: ds.sampling_period,
        }
    }
}

/// Fits a [`Preprocessor`] on all of `raw` and applies it.
pub fn preprocess(raw: &[Vec<f64>], labels: Vec<u8>) -> Result<(Dataset, Preprocessor), MlError> {
    let pre = Preprocessor::fit(raw)?;
    let rows = raw.iter().map(|r| pre.transform_row(r)).collect();
    Ok((Dataset::new(rows, labels)?, pre))
}

/// Seeded, class-stratified train/test split.
pub fn split(ds: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset), MlError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(MlError::Invalid(format!(
            "train_fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let n = ds.len();
    let target = (n as f64 * train_fraction).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let by_class: Vec<Vec<usize>> = (0..2u8)
        .map(|c| {
            let mut idx: Vec<usize> = (0..n).filter(|&i| ds.labels[i] == c).collect();
            idx.shuffle(&mut rng);
            idx
        })
        .collect();

    // Largest-remainder allocation of the training quota across classes.
    let exact: Vec<f64> = by_class
        .iter()
        .map(|idx| idx.len() as f64 * target as f64 / n.max(1) as f64)
        .collect();
    let mut quota: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let mut remaining = target.saturating_sub(quota.iter().sum());
    let mut order: Vec<usize> = (0..2).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &c in &order {
        if remaining == 0 {
            break;
        }
        if quota[c] < by_class[c].len() {
            quota[c] += 1;
            remaining -= 1;
        }
    }
    for (c, idx) in by_class.iter().enumerate() {
        if idx.len() == 1 {
            return Err(MlError::Invalid(format!(
                "class {c} has a single row, so one split would lack it"
            )));
        }
        if idx.len() >= 2 {
            quota[c] = quota[c].clamp(1, idx.len() - 1);
        }
    }

    let mut train = Vec::with_capacity(target);
    let mut test = Vec::with_capacity(n - target);
    for (c, idx) in by_class.iter().enumerate() {
        train.extend_from_slice(&idx[..quota[c]]);
        test.extend_from_slice(&idx[quota[c]..]);
    }
    if train.is_empty() || test.is_empty() {
        return Err(MlError::EmptyDataset(format!(
            "split of {n} rows at {train_fraction} leaves an empty side"
        )));
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((ds.subset(&train), ds.subset(&test)))
}

/// Stratified k-fold assignment: `out[i]` is the validation fold of row `i`.
pub fn stratified_folds(labels: &[u8], k: usize, seed: u64) -> Result<Vec<usize>, MlError> {
    if k < 2 {
        return Err(MlError::Invalid(format!("k must be >= 2, got {k}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![0usize; labels.len()];
    let mut position = 0usize;
    for c in 0..2u8 {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        if idx.len() < k {
            return Err(MlError::Invalid(format!(
                "class {c} has {} rows, fewer than k = {k} folds",
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        for i in idx {
            folds[i] = position % k;
            position += 1;
        }
    }
    Ok(folds)
}
