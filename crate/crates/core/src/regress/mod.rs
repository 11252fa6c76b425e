//! PCA reduction, ridge regression and the cross-validated expression
//! prediction pipeline.

mod pca;
mod pipeline;
mod ridge;

use thiserror::Error;

pub use pca::{pca_fit, pca_inverse, pca_transform, variance_explained_first2, PcaModel};
pub use pipeline::{fit_fold, hest_pipeline, FoldFit, HestData, PccEntry, RegressionReport, Summary};
pub use ridge::{ridge_fit, RidgeModel};

pub use nalgebra::DMatrix;

#[derive(Debug, Error)]
pub enum RegressError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

fn check_finite(m: &DMatrix<f64>, what: &'static str) -> Result<(), RegressError> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(RegressError::NonFinite(what))
    }
}

/// Column means of a matrix.
pub(crate) fn col_means(x: &DMatrix<f64>) -> Vec<f64> {
    let n = x.nrows() as f64;
    x.column_iter().map(|c| c.sum() / n).collect()
}

pub(crate) fn center(x: &DMatrix<f64>, mean: &[f64]) -> DMatrix<f64> {
    let mut c = x.clone();
    for (j, mut col) in c.column_iter_mut().enumerate() {
        col.add_scalar_mut(-mean[j]);
    }
    c
}

/// Thin SVD returning `(U, s, Vt)` with singular values sorted descending.
/// Tall inputs are reduced by QR first.
pub(crate) fn sorted_svd(x: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    let (n, d) = x.shape();
    let (u, s, vt) = if n > 2 * d {
        let qr = x.clone().qr();
        let q = qr.q();
        let svd = qr.r().svd(true, true);
        (q * svd.u.unwrap(), svd.singular_values, svd.v_t.unwrap())
    } else {
        let svd = x.clone().svd(true, true);
        (svd.u.unwrap(), svd.singular_values, svd.v_t.unwrap())
    };
    let mut idx: Vec<usize> = (0..s.len()).collect();
    idx.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
    let u = DMatrix::from_fn(u.nrows(), idx.len(), |r, c| u[(r, idx[c])]);
    let vt = DMatrix::from_fn(idx.len(), vt.ncols(), |r, c| vt[(idx[r], c)]);
    (u, idx.iter().map(|&i| s[i]).collect(), vt)
}

/// Numerical rank threshold for sorted singular values.
pub(crate) fn rank_tol(s: &[f64], n: usize, d: usize) -> f64 {
    s.first().copied().unwrap_or(0.0) * (n.max(d) as f64) * f64::EPSILON
}
