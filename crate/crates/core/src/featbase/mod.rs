//! Training-free feature baselines: per-channel pixel statistics, random
//! single-layer convolution features and hand-crafted cell-count vectors.

mod cellcount;
mod image;
mod singleconv;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cellcount::{cellcount_base, cellcount_features, CellCountStandardizer, CELLCOUNT_BASE_DIM, CELLCOUNT_DIM};
pub use image::{read_image_manifest, read_raw_image, write_raw_image, MultiChannelImage};
pub use singleconv::{conv_gap, singleconv_features, FilterBank, SingleConvConfig};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("image is {h}x{w}, smaller than the {k}x{k} kernel")]
    ImageTooSmall { h: usize, w: usize, k: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("malformed image: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// A feature vector plus a tag naming the baseline and its configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub provenance: String,
}

impl FeatureVector {
    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PixelStats {
    MeanOnly,
    MeanStdSkew,
}

/// Channel-wise mean, population std and skewness (`m3 / std^3`, 0 for a
/// constant channel). `MeanStdSkew` orders all means, then all stds, then
/// all skews.
pub fn pixel_features(img: &MultiChannelImage, mode: PixelStats) -> FeatureVector {
    let c = img.channels();
    let mut means = Vec::with_capacity(c);
    let mut stds = Vec::with_capacity(c);
    let mut skews = Vec::with_capacity(c);
    for ch in 0..c {
        let plane = img.plane(ch);
        let n = plane.len() as f64;
        let mean = plane.iter().map(|&v| f64::from(v)).sum::<f64>() / n;
        let (m2, m3) = plane.iter().fold((0.0, 0.0), |(a, b), &v| {
            let d = f64::from(v) - mean;
            (a + d * d, b + d * d * d)
        });
        let (m2, m3) = (m2 / n, m3 / n);
        let std = m2.sqrt();
        means.push(mean);
        stds.push(std);
        skews.push(if m2 > 0.0 { m3 / (m2 * std) } else { 0.0 });
    }
    match mode {
        PixelStats::MeanOnly => FeatureVector { values: means, provenance: "pixel:mean".into() },
        PixelStats::MeanStdSkew => {
            means.extend(stds);
            means.extend(skews);
            FeatureVector { values: means, provenance: "pixel:mean_std_skew".into() }
        }
    }
}
