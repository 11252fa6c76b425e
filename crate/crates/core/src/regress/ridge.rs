use super::{center, check_finite, col_means, rank_tol, sorted_svd, DMatrix, RegressError};

#[derive(Debug, Clone, PartialEq)]
pub struct RidgeModel {
    /// `m x G`.
    pub weights: DMatrix<f64>,
    pub intercepts: Vec<f64>,
    pub alpha: f64,
    /// α = 0 with a rank-deficient design; the minimum-norm solution was used.
    pub min_norm: bool,
}

impl RidgeModel {
    pub fn predict(&self, z: &DMatrix<f64>) -> Result<DMatrix<f64>, RegressError> {
        if z.ncols() != self.weights.nrows() {
            return Err(RegressError::Shape(format!("model expects {} features, got {}", self.weights.nrows(), z.ncols())));
        }
        let mut y = z * &self.weights;
        for (g, mut col) in y.column_iter_mut().enumerate() {
            col.add_scalar_mut(self.intercepts[g]);
        }
        Ok(y)
    }
}

/// Closed-form ridge via the SVD of the (optionally centred) design:
/// `W = V diag(s / (s^2 + alpha)) U^T Y`.
pub fn ridge_fit(z: &DMatrix<f64>, y: &DMatrix<f64>, alpha: f64, fit_intercept: bool) -> Result<RidgeModel, RegressError> {
    let (n, m) = z.shape();
    if n == 0 {
        return Err(RegressError::TooFewSamples { needed: 1, got: 0 });
    }
    if y.nrows() != n {
        return Err(RegressError::Shape(format!("{n} design rows vs {} target rows", y.nrows())));
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(RegressError::InvalidParameter(format!("alpha must be finite and >= 0, got {alpha}")));
    }
    check_finite(z, "ridge design")?;
    check_finite(y, "ridge targets")?;
    let (zm, ym) = if fit_intercept { (col_means(z), col_means(y)) } else { (vec![0.0; m], vec![0.0; y.ncols()]) };
    let zc = center(z, &zm);
    let yc = center(y, &ym);
    let (u, s, vt) = sorted_svd(&zc);
    let tol = rank_tol(&s, n, m);
    let rank = s.iter().filter(|&&v| v > tol).count();
    let min_norm = alpha == 0.0 && rank < m;
    if min_norm {
        log::warn!("ridge_fit: singular design at alpha=0, using the minimum-norm solution");
    }
    let f: Vec<f64> = s.iter().map(|&v| if v > tol { v / (v * v + alpha) } else { 0.0 }).collect();
    let mut uty = u.transpose() * &yc;
    for (r, mut row) in uty.row_iter_mut().enumerate() {
        row *= f[r];
    }
    let weights = vt.transpose() * uty;
    let intercepts = (0..y.ncols())
        .map(|g| ym[g] - (0..m).map(|j| zm[j] * weights[(j, g)]).sum::<f64>())
        .collect();
    Ok(RidgeModel { weights, intercepts, alpha, min_norm })
}
