//! Baseline constructions and frozen-embedding evaluation for microscopy
//! representation benchmarks.
//!
//! The crate is split by concern:
//!
//! * [`pointsynth`] generates the 24-class synthetic point-pattern benchmark.
//! * [`tissuegraph`] builds structure-only tissue views (kNN cell graphs,
//!   binary edge rasters, degree profiles, spot binning).
//! * [`featbase`] computes training-free feature baselines.
//! * [`evalmetrics`] holds the similarity-based metrics (recall in the tail,
//!   replicate mAP, rank correlation, RSA, kNN probing).
//! * [`regress`] is the PCA + ridge expression-prediction pipeline.
//! * [`harness`] does interchange I/O, profiles, folds, orchestration and
//!   report emission. The `cellbench` binary is a thin CLI over it.

pub mod evalmetrics;
pub mod featbase;
pub mod harness;
pub mod pointsynth;
pub mod regress;
pub mod rng;
pub mod textfmt;
pub mod tissuegraph;

/// 2-D point as `[x, y]`.
pub type Point = [f64; 2];
