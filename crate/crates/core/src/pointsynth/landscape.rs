use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::SynthError;
use crate::Point;

/// Disc layout shared by the emboss and deboss landscapes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discs {
    pub n: usize,
    pub radius: f64,
    /// `None` until [`Landscape::resolve`] places the discs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub centers: Option<Vec<Point>>,
}

impl Discs {
    pub fn new(n: usize, radius: f64) -> Self {
        Self { n, radius, centers: None }
    }

    /// Centers of `n > 1` discs sit evenly on a circle of radius 0.25 around
    /// the square's center; a single disc lands uniformly in `[r, 1-r]^2`.
    pub fn resolve<R: Rng + ?Sized>(&self, rng: &mut R) -> Discs {
        if self.centers.is_some() {
            return self.clone();
        }
        let centers = match self.n {
            0 => Vec::new(),
            1 => {
                let lo = self.radius.min(0.5);
                let hi = (1.0 - self.radius).max(0.5);
                let x = lo + (hi - lo) * rng.random::<f64>();
                let y = lo + (hi - lo) * rng.random::<f64>();
                vec![[x, y]]
            }
            n => (0..n)
                .map(|i| {
                    let theta = PI / 2.0 + 2.0 * PI * i as f64 / n as f64;
                    [0.5 + 0.25 * theta.cos(), 0.5 + 0.25 * theta.sin()]
                })
                .collect(),
        };
        Discs { n: self.n, radius: self.radius, centers: Some(centers) }
    }

    /// Number of discs containing `(x, y)` (closed discs).
    pub fn coverage(&self, x: f64, y: f64) -> Result<usize, SynthError> {
        let centers = self.centers.as_ref().ok_or(SynthError::UnresolvedDiscs)?;
        let r2 = self.radius * self.radius;
        Ok(centers
            .iter()
            .filter(|c| {
                let dx = x - c[0];
                let dy = y - c[1];
                dx * dx + dy * dy <= r2
            })
            .count())
    }
}

/// Parametric intensity on the unit square, used both as a point density
/// and as a positional-noise scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Landscape {
    Constant,
    /// `1 + max(b - k x, 0)`
    Slope { k: f64, b: f64 },
    /// `1 + delta * [x < threshold]`
    Step { threshold: f64, delta: f64 },
    /// `1 + delta * min(#discs covering, 1)`
    DiscsEmboss { discs: Discs, delta: f64 },
    /// `1 - min(#discs covering, 1)`
    DiscsDeboss { discs: Discs },
}

impl Landscape {
    pub fn slope(k: f64, b: f64) -> Self {
        Landscape::Slope { k, b }
    }

    pub fn step(threshold: f64, delta: f64) -> Self {
        Landscape::Step { threshold, delta }
    }

    pub fn emboss(n: usize, radius: f64, delta: f64) -> Self {
        Landscape::DiscsEmboss { discs: Discs::new(n, radius), delta }
    }

    pub fn deboss(n: usize, radius: f64) -> Self {
        Landscape::DiscsDeboss { discs: Discs::new(n, radius) }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |msg: &str| Err(SynthError::InvalidParameter(msg.to_string()));
        match self {
            Landscape::Constant => Ok(()),
            Landscape::Slope { k, b } if !(k.is_finite() && b.is_finite()) => bad("slope k/b must be finite"),
            Landscape::Slope { .. } => Ok(()),
            Landscape::Step { threshold, delta } => {
                if !(0.0..=1.0).contains(threshold) {
                    bad("step threshold must lie in [0, 1]")
                } else if !(delta.is_finite() && *delta >= -1.0) {
                    bad("step delta must be finite and >= -1")
                } else {
                    Ok(())
                }
            }
            Landscape::DiscsEmboss { discs, delta } => {
                if !(delta.is_finite() && *delta >= -1.0) {
                    return bad("emboss delta must be finite and >= -1");
                }
                validate_discs(discs)
            }
            Landscape::DiscsDeboss { discs } => validate_discs(discs),
        }
    }

    /// Place any unresolved disc centers; other landscapes are returned as is.
    pub fn resolve<R: Rng + ?Sized>(&self, rng: &mut R) -> Landscape {
        match self {
            Landscape::DiscsEmboss { discs, delta } => {
                Landscape::DiscsEmboss { discs: discs.resolve(rng), delta: *delta }
            }
            Landscape::DiscsDeboss { discs } => Landscape::DiscsDeboss { discs: discs.resolve(rng) },
            other => other.clone(),
        }
    }

    pub fn discs(&self) -> Option<&Discs> {
        match self {
            Landscape::DiscsEmboss { discs, .. } | Landscape::DiscsDeboss { discs } => Some(discs),
            _ => None,
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<f64, SynthError> {
        Ok(match self {
            Landscape::Constant => 1.0,
            Landscape::Slope { k, b } => 1.0 + (b - k * x).max(0.0),
            Landscape::Step { threshold, delta } => {
                if x < *threshold {
                    1.0 + delta
                } else {
                    1.0
                }
            }
            Landscape::DiscsEmboss { discs, delta } => 1.0 + delta * discs.coverage(x, y)?.min(1) as f64,
            Landscape::DiscsDeboss { discs } => 1.0 - discs.coverage(x, y)?.min(1) as f64,
        })
    }

    /// Supremum over the unit square.
    pub fn upper_bound(&self) -> f64 {
        match self {
            Landscape::Constant | Landscape::DiscsDeboss { .. } => 1.0,
            Landscape::Slope { k, b } => 1.0 + b.max(0.0).max(b - k),
            Landscape::Step { delta, .. } | Landscape::DiscsEmboss { delta, .. } => 1.0 + delta.max(0.0),
        }
    }

    /// Mean over the axis-aligned box `[x0, x1] x [y0, y1]` by `q x q`
    /// midpoint quadrature.
    pub fn box_mean(&self, x0: f64, y0: f64, x1: f64, y1: f64, q: usize) -> Result<f64, SynthError> {
        let q = q.max(1);
        let hx = (x1 - x0) / q as f64;
        let hy = (y1 - y0) / q as f64;
        let mut acc = 0.0;
        for j in 0..q {
            let y = y0 + (j as f64 + 0.5) * hy;
            for i in 0..q {
                acc += self.eval(x0 + (i as f64 + 0.5) * hx, y)?;
            }
        }
        Ok(acc / (q * q) as f64)
    }
}

fn validate_discs(discs: &Discs) -> Result<(), SynthError> {
    if !(discs.radius.is_finite() && discs.radius > 0.0 && discs.radius <= 0.5) {
        return Err(SynthError::InvalidParameter("disc radius must lie in (0, 0.5]".into()));
    }
    if let Some(c) = &discs.centers {
        if c.len() != discs.n {
            return Err(SynthError::InvalidParameter("disc center count differs from n".into()));
        }
    }
    Ok(())
}
