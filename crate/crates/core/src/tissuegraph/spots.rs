use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{CellIndex, GraphError, SpatialHash};
use crate::Point;

/// Neighborhood radius in units of the grid pitch. Takes the 8-neighborhood
/// (diagonals at sqrt(2)) on square lattices and the 6-neighborhood on hex
/// lattices (next shell at sqrt(3)).
pub const NEIGHBOR_RADIUS_PITCHES: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    Square,
    Hex,
}

impl GridKind {
    pub fn max_neighbors(self) -> usize {
        match self {
            GridKind::Square => 8,
            GridKind::Hex => 6,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "square" => Some(GridKind::Square),
            "hex" | "hexagonal" => Some(GridKind::Hex),
            _ => None,
        }
    }
}

/// Spatial-transcriptomics spot centers in slide coordinates (µm).
#[derive(Debug, Clone, PartialEq)]
pub struct SpotGrid {
    pub spot_ids: Vec<String>,
    pub centers: Vec<Point>,
    pub kind: GridKind,
    /// µm per pixel of the source image.
    pub pixel_size: f64,
}

impl SpotGrid {
    pub fn new(spot_ids: Vec<String>, centers: Vec<Point>, kind: GridKind, pixel_size: f64) -> Result<Self, GraphError> {
        if spot_ids.len() != centers.len() {
            return Err(GraphError::InvalidParameter("spot id and center counts differ".into()));
        }
        if !(pixel_size.is_finite() && pixel_size > 0.0) {
            return Err(GraphError::InvalidParameter(format!("pixel size must be positive, got {pixel_size}")));
        }
        let mut seen: HashMap<(u64, u64), usize> = HashMap::new();
        for (i, c) in centers.iter().enumerate() {
            if seen.insert((c[0].to_bits(), c[1].to_bits()), i).is_some() {
                return Err(GraphError::DuplicateSpot(spot_ids[i].clone()));
            }
        }
        Ok(Self { spot_ids, centers, kind, pixel_size })
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Median nearest-neighbor distance; `None` for fewer than two spots.
    pub fn pitch(&self) -> Option<f64> {
        if self.centers.len() < 2 {
            return None;
        }
        let hash = SpatialHash::auto(&self.centers);
        let mut nn: Vec<f64> = (0..self.centers.len()).filter_map(|i| hash.nearest_to(i).map(|(d, _)| d)).collect();
        nn.sort_by(f64::total_cmp);
        let m = nn.len();
        Some(if m % 2 == 1 { nn[m / 2] } else { 0.5 * (nn[m / 2 - 1] + nn[m / 2]) })
    }
}

/// An anchor spot with its adjacent spots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedPatch {
    pub anchor: usize,
    pub anchor_spot_id: String,
    /// Member spot indices, anchor first, then by distance and index.
    pub members: Vec<usize>,
    pub member_spot_ids: Vec<String>,
    /// `[x0, y0, x1, y1]` covering every member's patch square.
    pub bounding_box: [f64; 4],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub averaged_targets: Option<Vec<f64>>,
}

/// One patch per spot: the anchor plus neighbors within 1.5 pitches, capped
/// at 8 (square) or 6 (hex) nearest. Patch squares of side `patch_extent`
/// are centered on spot centers. Edge spots keep partial neighborhoods.
pub fn bin_spots(grid: &SpotGrid, patch_extent: f64) -> Result<Vec<BinnedPatch>, GraphError> {
    if grid.is_empty() {
        return Err(GraphError::Empty);
    }
    if !(patch_extent.is_finite() && patch_extent >= 0.0) {
        return Err(GraphError::InvalidParameter(format!("patch extent must be >= 0, got {patch_extent}")));
    }
    let radius = grid.pitch().map(|p| p * NEIGHBOR_RADIUS_PITCHES);
    let hash = radius.map(|r| SpatialHash::new(&grid.centers, r));
    let cap = grid.kind.max_neighbors();
    let half = patch_extent / 2.0;

    let patches = (0..grid.len())
        .map(|anchor| {
            let c = grid.centers[anchor];
            let mut nbrs: Vec<(f64, usize)> = match (&hash, radius) {
                (Some(h), Some(r)) => h
                    .within(c, r)
                    .into_iter()
                    .filter(|&j| j != anchor)
                    .map(|j| {
                        let q = grid.centers[j];
                        ((q[0] - c[0]).powi(2) + (q[1] - c[1]).powi(2), j)
                    })
                    .collect(),
                _ => Vec::new(),
            };
            nbrs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            nbrs.truncate(cap);
            let members: Vec<usize> = std::iter::once(anchor).chain(nbrs.into_iter().map(|(_, j)| j)).collect();
            let mut bbox = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
            for &m in &members {
                let p = grid.centers[m];
                bbox = [bbox[0].min(p[0] - half), bbox[1].min(p[1] - half), bbox[2].max(p[0] + half), bbox[3].max(p[1] + half)];
            }
            BinnedPatch {
                anchor,
                anchor_spot_id: grid.spot_ids[anchor].clone(),
                member_spot_ids: members.iter().map(|&m| grid.spot_ids[m].clone()).collect(),
                members,
                bounding_box: bbox,
                averaged_targets: None,
            }
        })
        .collect();
    Ok(patches)
}

/// Componentwise mean of the members' target vectors.
pub fn average_targets(patch: &BinnedPatch, targets: &HashMap<String, Vec<f64>>) -> Result<Vec<f64>, GraphError> {
    let mut acc: Option<Vec<f64>> = None;
    for id in &patch.member_spot_ids {
        let v = targets.get(id).ok_or_else(|| GraphError::MissingTarget(id.clone()))?;
        match &mut acc {
            None => acc = Some(v.clone()),
            Some(a) => {
                if a.len() != v.len() {
                    return Err(GraphError::TargetLength { spot: id.clone(), expected: a.len(), got: v.len() });
                }
                a.iter_mut().zip(v).for_each(|(s, x)| *s += x);
            }
        }
    }
    let n = patch.member_spot_ids.len() as f64;
    let mut out = acc.ok_or(GraphError::Empty)?;
    out.iter_mut().for_each(|s| *s /= n);
    Ok(out)
}

/// Keep patches whose bounding box contains at least one cell centroid.
pub fn drop_empty_patches(patches: Vec<BinnedPatch>, cells: &CellIndex) -> Vec<BinnedPatch> {
    patches.into_iter().filter(|p| cells.count_in_box(p.bounding_box) > 0).collect()
}
