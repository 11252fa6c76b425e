use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{FeatureError, FeatureVector, MultiChannelImage};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingleConvConfig {
    pub n_filters: usize,
    pub kernel: usize,
    pub seed: u64,
    /// Rectify responses before pooling. Keeps positive homogeneity
    /// (`f(s x) = s f(x)` for `s > 0`); without it the map is linear.
    pub relu: bool,
}

impl Default for SingleConvConfig {
    fn default() -> Self {
        Self { n_filters: 64, kernel: 5, seed: 0, relu: true }
    }
}

/// `n_filters` kernels of shape `channels x k x k`, row-major per filter.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    pub n_filters: usize,
    pub channels: usize,
    pub kernel: usize,
    pub weights: Vec<f64>,
}

impl FilterBank {
    /// I.i.d. `N(0, 1 / (k^2 C))` weights drawn in filter, channel, row,
    /// column order from the seeded stream.
    pub fn random(n_filters: usize, channels: usize, kernel: usize, seed: u64) -> Self {
        let fan_in = (kernel * kernel * channels) as f64;
        let normal = Normal::new(0.0, (1.0 / fan_in).sqrt()).expect("positive std");
        let mut rng = rng_from_seed(seed);
        let weights = (0..n_filters * channels * kernel * kernel).map(|_| normal.sample(&mut rng)).collect();
        Self { n_filters, channels, kernel, weights }
    }

    fn filter(&self, f: usize) -> &[f64] {
        let n = self.channels * self.kernel * self.kernel;
        &self.weights[f * n..(f + 1) * n]
    }
}

/// Valid-mode cross-correlation with zero bias, optional ReLU, then global
/// average pooling per filter.
pub fn conv_gap(img: &MultiChannelImage, bank: &FilterBank, relu: bool) -> Result<Vec<f64>, FeatureError> {
    let k = bank.kernel;
    if k == 0 || k.is_multiple_of(2) {
        return Err(FeatureError::InvalidParameter(format!("kernel size must be odd, got {k}")));
    }
    if bank.channels != img.channels() {
        return Err(FeatureError::InvalidParameter(format!(
            "filters expect {} channels, image has {}",
            bank.channels,
            img.channels()
        )));
    }
    let (h, w) = (img.height(), img.width());
    if k > h || k > w {
        return Err(FeatureError::ImageTooSmall { h, w, k });
    }
    let (ho, wo) = (h - k + 1, w - k + 1);
    let planes: Vec<Vec<f64>> = (0..img.channels()).map(|c| img.plane(c).iter().map(|&v| f64::from(v)).collect()).collect();
    let mut acc = vec![0.0f64; ho * wo];
    let mut out = Vec::with_capacity(bank.n_filters);
    for f in 0..bank.n_filters {
        acc.iter_mut().for_each(|v| *v = 0.0);
        let weights = bank.filter(f);
        for (c, plane) in planes.iter().enumerate() {
            for ky in 0..k {
                for kx in 0..k {
                    let wgt = weights[(c * k + ky) * k + kx];
                    if wgt == 0.0 {
                        continue;
                    }
                    for y in 0..ho {
                        let src = &plane[(y + ky) * w + kx..(y + ky) * w + kx + wo];
                        let dst = &mut acc[y * wo..(y + 1) * wo];
                        dst.iter_mut().zip(src).for_each(|(d, s)| *d += wgt * s);
                    }
                }
            }
        }
        let sum: f64 = if relu { acc.iter().map(|v| v.max(0.0)).sum() } else { acc.iter().sum() };
        out.push(sum / (ho * wo) as f64);
    }
    Ok(out)
}

pub fn singleconv_features(img: &MultiChannelImage, cfg: &SingleConvConfig) -> Result<FeatureVector, FeatureError> {
    if cfg.n_filters == 0 {
        return Err(FeatureError::InvalidParameter("n_filters must be >= 1".into()));
    }
    let bank = FilterBank::random(cfg.n_filters, img.channels(), cfg.kernel, cfg.seed);
    let values = conv_gap(img, &bank, cfg.relu)?;
    Ok(FeatureVector {
        values,
        provenance: format!(
            "singleconv:f={},k={},seed={},relu={}",
            cfg.n_filters, cfg.kernel, cfg.seed, cfg.relu
        ),
    })
}
