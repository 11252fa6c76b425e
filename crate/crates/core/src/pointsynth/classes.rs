use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{sample_noisy_grid, sample_poisson, Landscape, NoisyGrid, PointPattern, SynthError};
use crate::rng::{derive_seed, rng_from_seed};

pub const N_CLASSES: usize = 24;

/// Positional noise std of every noisy-grid class before landscape scaling.
pub const BASE_NOISE_STD: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Sampling {
    NoisyGrid { voxels: u32 },
    UniformPoisson,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetCount {
    /// Reference count of the class table. Noisy grids with a uniform
    /// density reproduce it exactly; density-modulated grids follow the
    /// sub-grid rounding rule instead.
    Exact(u32),
    PoissonMean(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSpec {
    pub class_id: u8,
    pub sampling: Sampling,
    pub density: Option<Landscape>,
    pub noise: Option<Landscape>,
    pub base_noise_std: f64,
    pub target_count: TargetCount,
}

fn grid(class_id: u8, voxels: u32, density: Option<Landscape>, noise: Option<Landscape>, count: u32) -> ClassSpec {
    ClassSpec {
        class_id,
        sampling: Sampling::NoisyGrid { voxels },
        density,
        noise,
        base_noise_std: BASE_NOISE_STD,
        target_count: TargetCount::Exact(count),
    }
}

fn poisson(class_id: u8, density: Landscape) -> ClassSpec {
    ClassSpec {
        class_id,
        sampling: Sampling::UniformPoisson,
        density: Some(density),
        noise: None,
        base_noise_std: 0.0,
        target_count: TargetCount::PoissonMean(900.0),
    }
}

/// The 24 synthetic classes, indexed by class id.
pub fn class_registry() -> Vec<ClassSpec> {
    use Landscape as L;
    let r3 = (0.2f64 * 0.2 / 3.0).sqrt();
    let r5 = (0.2f64 * 0.2 / 5.0).sqrt();
    vec![
        grid(0, 10, None, Some(L::Constant), 900),
        grid(1, 10, None, Some(L::slope(3.0, 3.0)), 900),
        grid(2, 10, Some(L::slope(3.0, 3.0)), None, 890),
        grid(3, 4, Some(L::step(0.5, 1.0)), None, 848),
        grid(4, 10, Some(L::emboss(1, 0.1, 2.0)), None, 964),
        grid(5, 10, Some(L::emboss(3, 0.1, 2.0)), None, 1028),
        grid(6, 10, Some(L::deboss(1, 0.1)), None, 864),
        grid(7, 10, Some(L::deboss(3, 0.1)), None, 819),
        poisson(8, L::emboss(3, 0.1, 2.0)),
        poisson(9, L::deboss(1, 0.1)),
        poisson(10, L::Constant),
        poisson(11, L::emboss(1, 0.1, 2.0)),
        poisson(12, L::deboss(1, 0.1)),
        grid(13, 10, None, Some(L::step(0.5, 1.0)), 900),
        poisson(14, L::emboss(3, r3, 2.0)),
        poisson(15, L::deboss(3, r3)),
        poisson(16, L::emboss(5, r5, 2.0)),
        poisson(17, L::deboss(5, r5)),
        poisson(18, L::slope(3.0, 3.0)),
        poisson(19, L::slope(2.0, 2.0)),
        poisson(20, L::slope(1.0, 1.0)),
        poisson(21, L::emboss(1, 0.2, 2.0)),
        poisson(22, L::deboss(1, 0.2)),
        poisson(23, L::step(0.5, 1.0)),
    ]
}

pub fn class_spec(class_id: u32) -> Result<ClassSpec, SynthError> {
    class_registry()
        .into_iter()
        .nth(class_id as usize)
        .ok_or(SynthError::UnknownClass(class_id))
}

impl ClassSpec {
    /// Sample one pattern; disc centers are resolved from the same stream.
    pub fn generate(&self, seed: u64) -> Result<PointPattern, SynthError> {
        let mut rng = rng_from_seed(seed);
        let density = self.density.as_ref().map(|l| l.resolve(&mut rng));
        let noise = self.noise.as_ref().map(|l| l.resolve(&mut rng));
        let mut pattern = match (self.sampling, self.target_count) {
            (Sampling::NoisyGrid { voxels }, _) => {
                let cfg = NoisyGrid::new(voxels, self.base_noise_std);
                sample_noisy_grid(density.as_ref(), noise.as_ref(), &cfg, &mut rng)?
            }
            (Sampling::UniformPoisson, TargetCount::PoissonMean(mu)) => {
                sample_poisson(density.as_ref().unwrap_or(&Landscape::Constant), mu, &mut rng)?
            }
            (Sampling::UniformPoisson, TargetCount::Exact(n)) => {
                return Err(SynthError::InvalidParameter(format!(
                    "class {}: Poisson sampling needs a Poisson mean, got exact count {n}",
                    self.class_id
                )))
            }
        };
        pattern.class_id = Some(self.class_id);
        pattern.seed = Some(seed);
        Ok(pattern)
    }
}

pub fn generate_class(class_id: u32, seed: u64) -> Result<PointPattern, SynthError> {
    class_spec(class_id)?.generate(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl Default for SplitSizes {
    fn default() -> Self {
        Self { train: 1000, val: 100, test: 1000 }
    }
}

impl SplitSizes {
    pub fn per_class(&self) -> usize {
        self.train + self.val + self.test
    }

    pub fn total(&self) -> usize {
        self.per_class() * N_CLASSES
    }

    fn get(&self, split: Split) -> usize {
        match split {
            Split::Train => self.train,
            Split::Val => self.val,
            Split::Test => self.test,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }

    fn tag(self) -> u64 {
        self as u64
    }
}

/// Seed of sample `index` of `class_id` in `split`.
pub fn sample_seed(master_seed: u64, class_id: u32, split: Split, index: usize) -> u64 {
    derive_seed(master_seed, &[u64::from(class_id), split.tag(), index as u64])
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SynthDataset {
    pub train: Vec<PointPattern>,
    pub val: Vec<PointPattern>,
    pub test: Vec<PointPattern>,
}

impl SynthDataset {
    pub fn split(&self, split: Split) -> &[PointPattern] {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }

    pub fn len(&self) -> usize {
        self.train.len() + self.val.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Generate one split for every class, class-major.
pub fn generate_split(sizes: &SplitSizes, split: Split, master_seed: u64) -> Result<Vec<PointPattern>, SynthError> {
    let registry = class_registry();
    let n = sizes.get(split);
    (0..N_CLASSES * n)
        .into_par_iter()
        .map(|flat| {
            let (class_id, index) = (flat / n, flat % n);
            registry[class_id].generate(sample_seed(master_seed, class_id as u32, split, index))
        })
        .collect()
}

pub fn make_splits(sizes: SplitSizes, master_seed: u64) -> Result<SynthDataset, SynthError> {
    if sizes.train == 0 || sizes.val == 0 || sizes.test == 0 {
        return Err(SynthError::InvalidParameter("split sizes must be positive".into()));
    }
    Ok(SynthDataset {
        train: generate_split(&sizes, Split::Train, master_seed)?,
        val: generate_split(&sizes, Split::Val, master_seed)?,
        test: generate_split(&sizes, Split::Test, master_seed)?,
    })
}
