//! The 24-class synthetic point-pattern benchmark: intensity landscapes,
//! Poisson and noisy-grid samplers, seeded splits, augmentations and the
//! on-disk dataset layout.

mod augment;
mod classes;
mod io;
mod landscape;
mod sampler;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use augment::{augment_points, dihedral, rotate_about, Augmentation};
pub use classes::{
    class_registry, class_spec, generate_class, generate_split, make_splits, sample_seed, ClassSpec, Sampling,
    Split, SplitSizes, SynthDataset, TargetCount, BASE_NOISE_STD, N_CLASSES,
};
pub use io::{read_pattern, write_dataset, write_pattern, write_registry};
pub use landscape::{Discs, Landscape};
pub use sampler::{sample_noisy_grid, sample_poisson, NoisyGrid};

use crate::Point;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("disc centers are unresolved; call resolve() before evaluating")]
    UnresolvedDiscs,
    #[error("density is identically zero on the unit square")]
    ZeroIntensity,
    #[error("unknown class id {0} (expected 0..24)")]
    UnknownClass(u32),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("malformed pattern file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Ordered 2-D points, optionally labeled with the class and seed that
/// produced them.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PointPattern {
    pub points: Vec<Point>,
    pub class_id: Option<u8>,
    pub seed: Option<u64>,
}

impl PointPattern {
    pub fn new(points: Vec<Point>) -> Self {
        Self { points, class_id: None, seed: None }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn centroid(&self) -> Point {
        let n = self.points.len().max(1) as f64;
        let (sx, sy) = self.points.iter().fold((0.0, 0.0), |(sx, sy), p| (sx + p[0], sy + p[1]));
        [sx / n, sy / n]
    }
}
