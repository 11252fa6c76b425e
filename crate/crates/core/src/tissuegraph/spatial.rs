use std::collections::HashMap;

use crate::Point;

/// Uniform bucket grid for radius and nearest-neighbor queries.
#[derive(Debug, Clone)]
pub struct SpatialHash {
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<usize>>,
    points: Vec<Point>,
    key_range: [i64; 4],
}

impl SpatialHash {
    pub fn new(points: &[Point], cell: f64) -> Self {
        let cell = if cell.is_finite() && cell > 0.0 { cell } else { 1.0 };
        let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        let mut key_range = [i64::MAX, i64::MAX, i64::MIN, i64::MIN];
        for (i, p) in points.iter().enumerate() {
            let k = Self::key_for(cell, *p);
            key_range = [key_range[0].min(k.0), key_range[1].min(k.1), key_range[2].max(k.0), key_range[3].max(k.1)];
            buckets.entry(k).or_default().push(i);
        }
        Self { cell, buckets, points: points.to_vec(), key_range }
    }

    /// Cell size chosen so an average bucket holds about one point.
    pub fn auto(points: &[Point]) -> Self {
        let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            x0 = x0.min(p[0]);
            x1 = x1.max(p[0]);
            y0 = y0.min(p[1]);
            y1 = y1.max(p[1]);
        }
        let area = ((x1 - x0) * (y1 - y0)).max(0.0);
        let mut cell = (area / points.len().max(1) as f64).sqrt();
        if cell.is_nan() || cell <= 0.0 {
            cell = ((x1 - x0).max(y1 - y0) / points.len().max(1) as f64).max(1e-9);
        }
        Self::new(points, cell)
    }

    fn key_for(cell: f64, p: Point) -> (i64, i64) {
        ((p[0] / cell).floor() as i64, (p[1] / cell).floor() as i64)
    }

    /// Indices within `radius` of `p` (inclusive), unordered.
    pub fn within(&self, p: Point, radius: f64) -> Vec<usize> {
        let (kx, ky) = Self::key_for(self.cell, p);
        let reach = (radius / self.cell).ceil() as i64;
        let r2 = radius * radius;
        let mut out = Vec::new();
        for dy in -reach..=reach {
            for dx in -reach..=reach {
                if let Some(b) = self.buckets.get(&(kx + dx, ky + dy)) {
                    out.extend(b.iter().copied().filter(|&i| dist2(self.points[i], p) <= r2));
                }
            }
        }
        out
    }

    /// Nearest other point to point `i` as `(distance, index)`, ties by index.
    pub fn nearest_to(&self, i: usize) -> Option<(f64, usize)> {
        let p = self.points[i];
        let (kx, ky) = Self::key_for(self.cell, p);
        let mut best: Option<(f64, usize)> = None;
        let max_ring = self.max_ring(kx, ky);
        for ring in 0..=max_ring {
            if let Some((d2, _)) = best {
                // every point in ring `ring` is at least (ring - 1) cells away
                let lower = (ring as f64 - 1.0).max(0.0) * self.cell;
                if lower * lower > d2 {
                    break;
                }
            }
            for (cx, cy) in ring_cells(kx, ky, ring) {
                if let Some(b) = self.buckets.get(&(cx, cy)) {
                    for &j in b {
                        if j == i {
                            continue;
                        }
                        let d2 = dist2(p, self.points[j]);
                        let better = match best {
                            None => true,
                            Some((bd, bj)) => d2 < bd || (d2 == bd && j < bj),
                        };
                        if better {
                            best = Some((d2, j));
                        }
                    }
                }
            }
        }
        best.map(|(d2, j)| (d2.sqrt(), j))
    }

    fn max_ring(&self, kx: i64, ky: i64) -> i64 {
        let [x0, y0, x1, y1] = self.key_range;
        (kx - x0).max(x1 - kx).max(ky - y0).max(y1 - ky).max(0)
    }
}

fn ring_cells(kx: i64, ky: i64, ring: i64) -> Vec<(i64, i64)> {
    if ring == 0 {
        return vec![(kx, ky)];
    }
    let mut out = Vec::with_capacity(8 * ring as usize);
    for d in -ring..=ring {
        out.push((kx + d, ky - ring));
        out.push((kx + d, ky + ring));
    }
    for d in (-ring + 1)..ring {
        out.push((kx - ring, ky + d));
        out.push((kx + ring, ky + d));
    }
    out
}

#[inline]
fn dist2(a: Point, b: Point) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

/// Cell centroids sorted by x for box counting.
#[derive(Debug, Clone)]
pub struct CellIndex {
    sorted: Vec<(Point, usize)>,
}

impl CellIndex {
    pub fn new(points: &[Point]) -> Self {
        let mut sorted: Vec<(Point, usize)> = points.iter().copied().zip(0..).collect();
        sorted.sort_by(|a, b| a.0[0].total_cmp(&b.0[0]).then(a.1.cmp(&b.1)));
        Self { sorted }
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// Original indices of the points inside the closed box `[x0, y0, x1, y1]`,
    /// in ascending order.
    pub fn in_box(&self, bbox: [f64; 4]) -> Vec<usize> {
        let lo = self.sorted.partition_point(|e| e.0[0] < bbox[0]);
        let hi = self.sorted.partition_point(|e| e.0[0] <= bbox[2]);
        let mut out: Vec<usize> = self.sorted[lo..hi]
            .iter()
            .filter(|e| e.0[1] >= bbox[1] && e.0[1] <= bbox[3])
            .map(|e| e.1)
            .collect();
        out.sort_unstable();
        out
    }

    pub fn count_in_box(&self, bbox: [f64; 4]) -> usize {
        let lo = self.sorted.partition_point(|e| e.0[0] < bbox[0]);
        let hi = self.sorted.partition_point(|e| e.0[0] <= bbox[2]);
        self.sorted[lo..hi].iter().filter(|e| e.0[1] >= bbox[1] && e.0[1] <= bbox[3]).count()
    }
}
