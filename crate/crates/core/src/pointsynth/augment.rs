use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::PointPattern;
use crate::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Augmentation {
    /// One of the 8 symmetries of the unit square, about its center.
    Rot90Flip,
    /// Uniform rotation about the pattern centroid.
    FreeRotation,
}

/// Apply dihedral element `g` (0..8) about `(0.5, 0.5)`: `g & 3` quarter
/// turns counter-clockwise, preceded by a mirror `x -> 1 - x` when `g >= 4`.
pub fn dihedral(p: Point, g: u8) -> Point {
    let [mut x, y] = p;
    if g & 4 != 0 {
        x = 1.0 - x;
    }
    let mut q = [x, y];
    for _ in 0..(g & 3) {
        q = [1.0 - q[1], q[0]];
    }
    q
}

pub fn rotate_about(points: &[Point], center: Point, theta: f64) -> Vec<Point> {
    let (s, c) = theta.sin_cos();
    points
        .iter()
        .map(|p| {
            let dx = p[0] - center[0];
            let dy = p[1] - center[1];
            [center[0] + c * dx - s * dy, center[1] + s * dx + c * dy]
        })
        .collect()
}

pub fn augment_points<R: Rng + ?Sized>(p: &PointPattern, mode: Augmentation, rng: &mut R) -> PointPattern {
    let points = match mode {
        Augmentation::Rot90Flip => {
            let g = rng.random_range(0..8u8);
            p.points.iter().map(|&q| dihedral(q, g)).collect()
        }
        Augmentation::FreeRotation => {
            let theta = rng.random::<f64>() * 2.0 * PI;
            rotate_about(&p.points, p.centroid(), theta)
        }
    };
    PointPattern { points, class_id: p.class_id, seed: p.seed }
}
