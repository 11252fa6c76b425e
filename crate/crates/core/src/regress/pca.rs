use super::{center, check_finite, col_means, rank_tol, sorted_svd, DMatrix, RegressError};

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `m x D`, orthonormal rows.
    pub components: DMatrix<f64>,
    pub explained_variance_ratio: Vec<f64>,
    pub requested: usize,
    /// Set when fewer than `requested` components were kept.
    pub capped: bool,
}

impl PcaModel {
    pub fn n_components(&self) -> usize {
        self.components.nrows()
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// PCA via SVD of the centred data. Keeps at most `min(m, n - 1, D, rank)`
/// components; each is signed so its largest-magnitude entry is positive.
pub fn pca_fit(x: &DMatrix<f64>, m: usize) -> Result<PcaModel, RegressError> {
    let (n, d) = x.shape();
    if n < 2 {
        return Err(RegressError::TooFewSamples { needed: 2, got: n });
    }
    if d == 0 || m == 0 {
        return Err(RegressError::InvalidParameter("need D > 0 and m > 0".into()));
    }
    check_finite(x, "PCA input")?;
    let mean = col_means(x);
    let xc = center(x, &mean);
    let (_, s, vt) = sorted_svd(&xc);
    let total: f64 = s.iter().map(|v| v * v).sum();
    let tol = rank_tol(&s, n, d);
    let rank = s.iter().take_while(|&&v| v > tol).count();
    let keep = m.min(n - 1).min(d).min(rank);
    if keep < m {
        log::warn!("pca_fit: requested {m} components, keeping {keep}");
    }
    let mut components = DMatrix::zeros(keep, d);
    for r in 0..keep {
        let mut row: Vec<f64> = vt.row(r).iter().copied().collect();
        let mut arg = 0;
        for (j, v) in row.iter().enumerate() {
            if v.abs() > row[arg].abs() {
                arg = j;
            }
        }
        if row[arg] < 0.0 {
            row.iter_mut().for_each(|v| *v = -*v);
        }
        for (j, v) in row.into_iter().enumerate() {
            components[(r, j)] = v;
        }
    }
    let explained_variance_ratio = s[..keep].iter().map(|v| v * v / total).collect();
    Ok(PcaModel { mean, components, explained_variance_ratio, requested: m, capped: keep < m })
}

pub fn pca_transform(model: &PcaModel, x: &DMatrix<f64>) -> Result<DMatrix<f64>, RegressError> {
    if x.ncols() != model.dim() {
        return Err(RegressError::Shape(format!("model expects {} columns, got {}", model.dim(), x.ncols())));
    }
    Ok(center(x, &model.mean) * model.components.transpose())
}

/// Map scores back to the input space.
pub fn pca_inverse(model: &PcaModel, z: &DMatrix<f64>) -> Result<DMatrix<f64>, RegressError> {
    if z.ncols() != model.n_components() {
        return Err(RegressError::Shape(format!("model has {} components, got {}", model.n_components(), z.ncols())));
    }
    let mut x = z * &model.components;
    for (j, mut col) in x.column_iter_mut().enumerate() {
        col.add_scalar_mut(model.mean[j]);
    }
    Ok(x)
}

/// Fraction of variance carried by the first two principal components
/// (fewer if the data has lower rank).
pub fn variance_explained_first2(x: &DMatrix<f64>) -> Result<f64, RegressError> {
    if x.nrows() < 3 {
        return Err(RegressError::TooFewSamples { needed: 3, got: x.nrows() });
    }
    let model = pca_fit(x, 2)?;
    Ok(model.explained_variance_ratio.iter().sum::<f64>().min(1.0))
}
