use serde::{Deserialize, Serialize};

use super::{models, roc_auc, stratified_folds, ClassifierSpec, Dataset, MlError};
use crate::par::Executor;

/// Cross-validated AUROC of one grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvScore {
    pub spec: ClassifierSpec,
    /// `None` for folds skipped because a side had a single class.
    pub fold_auroc: Vec<Option<f64>>,
    pub mean_auroc: f64,
}

impl CvScore {
    pub fn skipped_folds(&self) -> usize {
        self.fold_auroc.iter().filter(|a| a.is_none()).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvOutcome {
    pub best: usize,
    pub scores: Vec<CvScore>,
}

impl CvOutcome {
    pub fn best_spec(&self) -> &ClassifierSpec {
        &self.scores[self.best].spec
    }

    pub fn best_score(&self) -> &CvScore {
        &self.scores[self.best]
    }
}

/// Exhaustive k-fold search over `grid`, ranked by mean validation AUROC.
/// Ties go to the smaller model, then to the earlier grid entry.
pub fn grid_search_cv(
    data: &Dataset,
    grid: &[ClassifierSpec],
    k: usize,
    seed: u64,
    exec: &Executor,
) -> Result<CvOutcome, MlError> {
    if grid.is_empty() {
        return Err(MlError::Invalid("classifier grid is empty".into()));
    }
    for spec in grid {
        spec.validate()?;
    }
    let folds = stratified_folds(data.labels(), k, seed)?;
    let jobs: Vec<(usize, usize)> = (0..grid.len()).flat_map(|g| (0..k).map(move |f| (g, f))).collect();
    let results = exec.map(&jobs, |&(g, f)| {
        let train_idx: Vec<usize> = (0..data.len()).filter(|&i| folds[i] != f).collect();
        let valid_idx: Vec<usize> = (0..data.len()).filter(|&i| folds[i] == f).collect();
        let train = data.subset(&train_idx);
        let valid = data.subset(&valid_idx);
        if !train.has_both_classes() || !valid.has_both_classes() {
            return Ok(None);
        }
        let model = models::train(&grid[g], &train, seed.wrapping_add(f as u64))?;
        let scores = models::predict_scores(&model, &valid)?;
        roc_auc(&scores, valid.labels()).map(Some)
    });

    let mut scores = Vec::with_capacity(grid.len());
    let mut it = results.into_iter();
    for spec in grid {
        let fold_auroc = it.by_ref().take(k).collect::<Result<Vec<_>, _>>()?;
        let valid: Vec<f64> = fold_auroc.iter().flatten().copied().collect();
        if valid.is_empty() {
            return Err(MlError::Invalid(format!("no usable folds for {spec}")));
        }
        scores.push(CvScore {
            spec: spec.clone(),
            mean_auroc: valid.iter().sum::<f64>() / valid.len() as f64,
            fold_auroc,
        });
    }

    let mut best = 0;
    for (i, s) in scores.iter().enumerate().skip(1) {
        let b = &scores[best];
        if s.mean_auroc > b.mean_auroc
            || (s.mean_auroc == b.mean_auroc && s.spec.model_size() < b.spec.model_size())
        {
            best = i;
        }
    }
    Ok(CvOutcome { best, scores })
}
