use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{pca_fit, pca_transform, ridge_fit, DMatrix, PcaModel, RegressError, RidgeModel};
use crate::evalmetrics::pearson;

/// Embeddings, targets and split metadata for the expression benchmark.
#[derive(Debug, Clone)]
pub struct HestData {
    pub x: DMatrix<f64>,
    pub y: DMatrix<f64>,
    pub genes: Vec<String>,
    /// Dataset name per row.
    pub datasets: Vec<String>,
    /// Fold index per row, within its dataset.
    pub folds: Vec<usize>,
}

impl HestData {
    fn validate(&self) -> Result<(), RegressError> {
        let n = self.x.nrows();
        if self.y.nrows() != n || self.datasets.len() != n || self.folds.len() != n {
            return Err(RegressError::Shape(format!(
                "rows: x {n}, y {}, datasets {}, folds {}",
                self.y.nrows(),
                self.datasets.len(),
                self.folds.len()
            )));
        }
        if self.y.ncols() != self.genes.len() {
            return Err(RegressError::Shape(format!("{} target columns vs {} gene names", self.y.ncols(), self.genes.len())));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct FoldFit {
    pub pca: PcaModel,
    pub ridge: RidgeModel,
    /// `None` when the test split has fewer than two rows.
    pub pcc: Vec<Option<f64>>,
    /// Constant predictions or targets; PCC reported as 0.
    pub degenerate: Vec<bool>,
}

fn rows(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), m.ncols(), |r, c| m[(idx[r], c)])
}

/// One train/test split: PCA and ridge see only the training rows.
pub fn fit_fold(
    train_x: &DMatrix<f64>,
    train_y: &DMatrix<f64>,
    test_x: &DMatrix<f64>,
    test_y: &DMatrix<f64>,
    m: usize,
    alpha: f64,
) -> Result<FoldFit, RegressError> {
    let pca = pca_fit(train_x, m)?;
    let ztr = pca_transform(&pca, train_x)?;
    let ridge = ridge_fit(&ztr, train_y, alpha, true)?;
    let pred = ridge.predict(&pca_transform(&pca, test_x)?)?;
    let g = test_y.ncols();
    let mut pcc = vec![None; g];
    let mut degenerate = vec![false; g];
    if test_x.nrows() >= 2 {
        for j in 0..g {
            let p: Vec<f64> = pred.column(j).iter().copied().collect();
            let t: Vec<f64> = test_y.column(j).iter().copied().collect();
            let c = pearson(&p, &t).map_err(|e| RegressError::InvalidParameter(e.to_string()))?;
            pcc[j] = Some(c.r);
            degenerate[j] = c.degenerate;
        }
    }
    Ok(FoldFit { pca, ridge, pcc, degenerate })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PccEntry {
    pub dataset: String,
    pub fold: usize,
    pub gene: String,
    pub pcc: Option<f64>,
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub n: usize,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Summary { mean: f64::NAN, std: f64::NAN, n };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        Summary { mean, std: var.sqrt(), n }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionReport {
    pub genes: Vec<String>,
    pub entries: Vec<PccEntry>,
    /// Mean PCC over defined genes, keyed by (dataset, fold).
    pub fold_means: BTreeMap<String, BTreeMap<usize, f64>>,
    pub per_dataset: BTreeMap<String, Summary>,
    /// Mean of the per-dataset means.
    pub global_mean: f64,
}

impl RegressionReport {
    /// Recompute every aggregate from the raw entries.
    pub fn from_entries(genes: Vec<String>, entries: Vec<PccEntry>) -> Self {
        let mut acc: BTreeMap<String, BTreeMap<usize, Vec<f64>>> = BTreeMap::new();
        for e in &entries {
            let slot = acc.entry(e.dataset.clone()).or_default().entry(e.fold).or_default();
            if let Some(v) = e.pcc {
                slot.push(v);
            }
        }
        let mut fold_means: BTreeMap<String, BTreeMap<usize, f64>> = BTreeMap::new();
        let mut per_dataset = BTreeMap::new();
        for (ds, folds) in acc {
            let means: BTreeMap<usize, f64> = folds
                .into_iter()
                .filter(|(_, v)| !v.is_empty())
                .map(|(f, v)| (f, v.iter().sum::<f64>() / v.len() as f64))
                .collect();
            let vals: Vec<f64> = means.values().copied().collect();
            if !vals.is_empty() {
                per_dataset.insert(ds.clone(), Summary::of(&vals));
            }
            fold_means.insert(ds, means);
        }
        let ds_means: Vec<f64> = per_dataset.values().map(|s: &Summary| s.mean).collect();
        let global_mean = Summary::of(&ds_means).mean;
        RegressionReport { genes, entries, fold_means, per_dataset, global_mean }
    }
}

/// Leave-one-fold-out within each dataset: PCA to `m` dims, ridge with
/// `alpha`, per-gene PCC on the held-out fold.
pub fn hest_pipeline(data: &HestData, m: usize, alpha: f64) -> Result<RegressionReport, RegressError> {
    data.validate()?;
    let names: BTreeSet<&str> = data.datasets.iter().map(String::as_str).collect();
    let mut jobs: Vec<(String, usize, Vec<usize>, Vec<usize>)> = Vec::new();
    for ds in names {
        let members: Vec<usize> = (0..data.x.nrows()).filter(|&i| data.datasets[i] == ds).collect();
        let folds: BTreeSet<usize> = members.iter().map(|&i| data.folds[i]).collect();
        if folds.len() < 2 {
            return Err(RegressError::InvalidParameter(format!("dataset {ds} has fewer than two folds")));
        }
        for f in folds {
            let (test, train): (Vec<usize>, Vec<usize>) = members.iter().partition(|&&i| data.folds[i] == f);
            jobs.push((ds.to_string(), f, train, test));
        }
    }
    let fits: Vec<Result<Vec<PccEntry>, RegressError>> = jobs
        .par_iter()
        .map(|(ds, f, train, test)| {
            let fit = fit_fold(&rows(&data.x, train), &rows(&data.y, train), &rows(&data.x, test), &rows(&data.y, test), m, alpha)?;
            if test.len() < 2 {
                log::warn!("hest_pipeline: {ds} fold {f} has {} test rows, PCC undefined", test.len());
            }
            Ok(data
                .genes
                .iter()
                .enumerate()
                .map(|(g, gene)| PccEntry {
                    dataset: ds.clone(),
                    fold: *f,
                    gene: gene.clone(),
                    pcc: fit.pcc[g],
                    degenerate: fit.degenerate[g],
                })
                .collect())
        })
        .collect();
    let mut entries = Vec::new();
    for r in fits {
        entries.extend(r?);
    }
    Ok(RegressionReport::from_entries(data.genes.clone(), entries))
}
