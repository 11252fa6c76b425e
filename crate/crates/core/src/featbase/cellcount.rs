use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::FeatureVector;
use crate::rng::rng_from_seed;

pub const CELLCOUNT_BASE_DIM: usize = 16;
pub const CELLCOUNT_DIM: usize = 256;
const NOISE_STD: f64 = 0.01;

/// Basis version 1 of the hand-crafted count features.
pub fn cellcount_base(count: u64) -> [f64; CELLCOUNT_BASE_DIM] {
    let c = count as f64;
    let l = c.ln_1p();
    [
        c,
        c * c,
        c * c * c,
        c.sqrt(),
        l,
        1.0 / (1.0 + c),
        (c / 10.0).sin(),
        (c / 10.0).cos(),
        (c / 100.0).sin(),
        (c / 100.0).cos(),
        c * l,
        l * l,
        c.powf(0.25),
        (c / 100.0).tanh(),
        (count % 10) as f64,
        c.min(500.0),
    ]
}

/// Per-feature mean/std of the base features, fit on training counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellCountStandardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl CellCountStandardizer {
    pub fn fit(counts: &[u64]) -> Self {
        let n = counts.len().max(1) as f64;
        let rows: Vec<_> = counts.iter().map(|&c| cellcount_base(c)).collect();
        let mut mean = vec![0.0; CELLCOUNT_BASE_DIM];
        for r in &rows {
            mean.iter_mut().zip(r).for_each(|(m, v)| *m += v / n);
        }
        let mut std = vec![0.0; CELLCOUNT_BASE_DIM];
        for r in &rows {
            std.iter_mut().zip(r.iter().zip(&mean)).for_each(|(s, (v, m))| *s += (v - m).powi(2) / n);
        }
        // constant features pass through centered
        let std = std.into_iter().map(|v| if v > 0.0 { v.sqrt() } else { 1.0 }).collect();
        Self { mean, std }
    }

    fn apply(&self, base: &mut [f64]) {
        for ((v, m), s) in base.iter_mut().zip(&self.mean).zip(&self.std) {
            *v = (*v - m) / s;
        }
    }
}

/// 16 base features of the count, optionally standardized, tiled
/// cyclically to 256 and perturbed by seeded `N(0, 0.01^2)` noise.
pub fn cellcount_features(count: u64, seed: u64, standardizer: Option<&CellCountStandardizer>) -> FeatureVector {
    let mut base = cellcount_base(count);
    if let Some(s) = standardizer {
        s.apply(&mut base);
    }
    let noise = Normal::new(0.0, NOISE_STD).expect("positive std");
    let mut rng = rng_from_seed(seed);
    let values = (0..CELLCOUNT_DIM).map(|i| base[i % CELLCOUNT_BASE_DIM] + noise.sample(&mut rng)).collect();
    FeatureVector {
        values,
        provenance: format!("cellcount:v1,seed={seed},standardized={}", standardizer.is_some()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimension_and_determinism() {
        let a = cellcount_features(137, 5, None);
        assert_eq!(a.dim(), 256);
        assert_eq!(a, cellcount_features(137, 5, None));
        assert_ne!(a.values, cellcount_features(137, 6, None).values);
    }

    #[test]
    fn zero_count_analytic_values() {
        let b = cellcount_base(0);
        assert_eq!(b[3], 0.0);
        assert_eq!(b[4], 0.0);
        assert_eq!(b[5], 1.0);
        assert_eq!(b[7], 1.0);
    }

    #[test]
    fn tiling_repeats_base_within_noise() {
        let v = cellcount_features(12, 1, None).values;
        let b = cellcount_base(12);
        for (i, x) in v.iter().enumerate() {
            // 6 sigma of the added noise
            assert!((x - b[i % 16]).abs() < 0.06, "{i}");
        }
    }

    #[test]
    fn standardized_base_is_centered() {
        let counts: Vec<u64> = (0..200).map(|i| i * 7 % 311).collect();
        let s = CellCountStandardizer::fit(&counts);
        let mut sums = [0.0; 16];
        for &c in &counts {
            let mut b = cellcount_base(c);
            s.apply(&mut b);
            sums.iter_mut().zip(b).for_each(|(a, v)| *a += v);
        }
        assert!(sums.iter().all(|v| (v / 200.0).abs() < 1e-9));
    }
}
