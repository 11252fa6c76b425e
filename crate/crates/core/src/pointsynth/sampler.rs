use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Landscape, PointPattern, SynthError};
use crate::Point;

const MASS_QUADRATURE: usize = 128;
const VOXEL_QUADRATURE: usize = 16;
const MAX_REJECTIONS_PER_POINT: usize = 1_000_000;

/// Inhomogeneous Poisson process on the unit square: `N ~ Poisson(mean_count)`
/// points placed i.i.d. with density proportional to `density`, by rejection
/// against its supremum.
pub fn sample_poisson<R: Rng + ?Sized>(
    density: &Landscape,
    mean_count: f64,
    rng: &mut R,
) -> Result<PointPattern, SynthError> {
    if !(mean_count.is_finite() && mean_count > 0.0) {
        return Err(SynthError::InvalidParameter(format!("mean count must be positive, got {mean_count}")));
    }
    density.validate()?;
    if density.box_mean(0.0, 0.0, 1.0, 1.0, MASS_QUADRATURE)? <= 0.0 {
        return Err(SynthError::ZeroIntensity);
    }
    let sup = density.upper_bound();
    let poisson = Poisson::new(mean_count).map_err(|e| SynthError::InvalidParameter(e.to_string()))?;
    let n = poisson.sample(rng) as usize;

    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let mut tries = 0;
        loop {
            let x: f64 = rng.random();
            let y: f64 = rng.random();
            let u: f64 = rng.random::<f64>() * sup;
            if u < density.eval(x, y)? {
                points.push([x, y]);
                break;
            }
            tries += 1;
            if tries >= MAX_REJECTIONS_PER_POINT {
                return Err(SynthError::ZeroIntensity);
            }
        }
    }
    Ok(PointPattern::new(points))
}

/// Configuration of the density-adaptive noisy grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoisyGrid {
    /// Voxels per axis.
    pub voxels: u32,
    /// Positional noise std before scaling by the noise landscape.
    pub base_noise_std: f64,
    /// Points produced by a uniform density; sets the base sub-grid size.
    pub uniform_count: u32,
}

impl NoisyGrid {
    pub fn new(voxels: u32, base_noise_std: f64) -> Self {
        Self { voxels, base_noise_std, uniform_count: 900 }
    }

    /// Sub-grid side for a uniform density.
    pub fn base_subgrid(&self) -> f64 {
        f64::from(self.uniform_count).sqrt() / f64::from(self.voxels)
    }

    /// Per-voxel sub-grid sides, row-major with y outermost.
    ///
    /// `s_v = round(s0 * sqrt(mean_v / mean_all))` where `mean_v` is the voxel
    /// mean of the density and `mean_all` the mean over voxels.
    pub fn subgrid_sizes(&self, density: Option<&Landscape>) -> Result<Vec<u32>, SynthError> {
        if self.voxels == 0 {
            return Err(SynthError::InvalidParameter("voxel count must be >= 1".into()));
        }
        let v = self.voxels as usize;
        let s0 = self.base_subgrid();
        let Some(density) = density else {
            return Ok(vec![s0.round() as u32; v * v]);
        };
        density.validate()?;
        let h = 1.0 / v as f64;
        let mut means = Vec::with_capacity(v * v);
        for j in 0..v {
            for i in 0..v {
                let (x0, y0) = (i as f64 * h, j as f64 * h);
                means.push(density.box_mean(x0, y0, x0 + h, y0 + h, VOXEL_QUADRATURE)?);
            }
        }
        let reference = means.iter().sum::<f64>() / means.len() as f64;
        if reference <= 0.0 {
            return Err(SynthError::ZeroIntensity);
        }
        Ok(means.iter().map(|m| (s0 * (m / reference).sqrt()).round() as u32).collect())
    }
}

/// Regular density-adaptive sub-grids perturbed by isotropic Gaussian noise of
/// std `base_noise_std * noise(x, y)`, clamped to the unit square.
pub fn sample_noisy_grid<R: Rng + ?Sized>(
    density: Option<&Landscape>,
    noise: Option<&Landscape>,
    grid: &NoisyGrid,
    rng: &mut R,
) -> Result<PointPattern, SynthError> {
    if !(grid.base_noise_std.is_finite() && grid.base_noise_std >= 0.0) {
        return Err(SynthError::InvalidParameter("noise std must be >= 0".into()));
    }
    if let Some(n) = noise {
        n.validate()?;
    }
    let sizes = grid.subgrid_sizes(density)?;
    let v = grid.voxels as usize;
    let h = 1.0 / v as f64;

    let mut points: Vec<Point> = Vec::with_capacity(sizes.iter().map(|s| (s * s) as usize).sum());
    for j in 0..v {
        for i in 0..v {
            let s = sizes[j * v + i] as usize;
            if s == 0 {
                continue;
            }
            let step = h / s as f64;
            let (x0, y0) = (i as f64 * h, j as f64 * h);
            for b in 0..s {
                for a in 0..s {
                    let x = x0 + (a as f64 + 0.5) * step;
                    let y = y0 + (b as f64 + 0.5) * step;
                    let scale = match noise {
                        Some(n) => n.eval(x, y)?,
                        None => 1.0,
                    };
                    let std = grid.base_noise_std * scale;
                    let ex: f64 = rng.sample(StandardNormal);
                    let ey: f64 = rng.sample(StandardNormal);
                    points.push([(x + std * ex).clamp(0.0, 1.0), (y + std * ey).clamp(0.0, 1.0)]);
                }
            }
        }
    }
    Ok(PointPattern::new(points))
}
