//! Structure-only tissue views: coordinate normalization, kNN cell graphs,
//! binary edge rasters, local degree profiles and spot binning.

mod io;
mod raster;
mod spatial;
mod spots;

use thiserror::Error;

pub use io::{read_cells_csv, read_points_file, read_spot_grid_csv, write_patches_csv};
pub use raster::{draw_segment, render_edges, render_native, resize_bilinear_binary, BinaryRaster, RenderConfig};
pub use spatial::{CellIndex, SpatialHash};
pub use spots::{average_targets, bin_spots, drop_empty_patches, BinnedPatch, GridKind, SpotGrid};

use crate::Point;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("empty point set")]
    Empty,
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("raster has zero area ({0}x{1})")]
    ZeroArea(u32, u32),
    #[error("edge ({0}, {1}) references a node outside the point set")]
    BadEdge(usize, usize),
    #[error("missing target vector for spot {0:?}")]
    MissingTarget(String),
    #[error("target length mismatch for spot {spot:?}: expected {expected}, got {got}")]
    TargetLength { spot: String, expected: usize, got: usize },
    #[error("duplicate spot center for {0:?}")]
    DuplicateSpot(String),
    #[error("malformed input: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Subtract the centroid and divide by the larger half-extent of the
/// bounding box. A single point (or a fully coincident set) maps to the origin.
pub fn normalize_coords(points: &[Point]) -> Result<Vec<Point>, GraphError> {
    if points.is_empty() {
        return Err(GraphError::Empty);
    }
    let n = points.len() as f64;
    let (sx, sy) = points.iter().fold((0.0, 0.0), |(a, b), p| (a + p[0], b + p[1]));
    let (cx, cy) = (sx / n, sy / n);
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        x0 = x0.min(p[0]);
        x1 = x1.max(p[0]);
        y0 = y0.min(p[1]);
        y1 = y1.max(p[1]);
    }
    let half = ((x1 - x0) / 2.0).max((y1 - y0) / 2.0);
    let scale = if half > 0.0 { half } else { 1.0 };
    Ok(points.iter().map(|p| [(p[0] - cx) / scale, (p[1] - cy) / scale]).collect())
}

/// Undirected simple graph on `n_nodes` nodes; edges are stored as sorted
/// `(i, j)` pairs with `i < j`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EdgeList {
    pub n_nodes: usize,
    edges: Vec<(usize, usize)>,
}

impl EdgeList {
    pub fn new(n_nodes: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, GraphError> {
        let mut out = Vec::new();
        for (a, b) in edges {
            if a >= n_nodes || b >= n_nodes {
                return Err(GraphError::BadEdge(a, b));
            }
            if a != b {
                out.push((a.min(b), a.max(b)));
            }
        }
        out.sort_unstable();
        out.dedup();
        Ok(Self { n_nodes, edges: out })
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n_nodes];
        for &(a, b) in &self.edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n_nodes];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }
}

/// Symmetrized k-nearest-neighbor graph under the Euclidean metric. Ties are
/// broken by lower index. `k >= n` is clamped to `n - 1` with a warning.
pub fn knn_graph(points: &[Point], k: usize) -> Result<EdgeList, GraphError> {
    let n = points.len();
    if n < 2 {
        return Err(GraphError::TooFewPoints { needed: 2, got: n });
    }
    if k == 0 {
        return Err(GraphError::InvalidParameter("k must be >= 1".into()));
    }
    let k = if k >= n {
        log::warn!("knn_graph: k = {k} >= n = {n}, clamping to {}", n - 1);
        n - 1
    } else {
        k
    };
    let mut edges = Vec::with_capacity(n * k);
    let mut cand: Vec<(f64, usize)> = Vec::with_capacity(n - 1);
    for (i, p) in points.iter().enumerate() {
        cand.clear();
        cand.extend(points.iter().enumerate().filter(|&(j, _)| j != i).map(|(j, q)| {
            let dx = p[0] - q[0];
            let dy = p[1] - q[1];
            (dx * dx + dy * dy, j)
        }));
        let by_key = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < cand.len() {
            cand.select_nth_unstable_by(k - 1, by_key);
        }
        edges.extend(cand[..k].iter().map(|&(_, j)| (i, j)));
    }
    EdgeList::new(n, edges)
}

/// Per node: degree, then min, max, mean and population std of the
/// neighbors' degrees. Isolated nodes get all zeros.
pub fn local_degree_profile(graph: &EdgeList) -> Vec<[f64; 5]> {
    let deg = graph.degrees();
    graph
        .adjacency()
        .iter()
        .enumerate()
        .map(|(i, nbrs)| {
            if nbrs.is_empty() {
                return [0.0; 5];
            }
            let d: Vec<f64> = nbrs.iter().map(|&j| deg[j] as f64).collect();
            let mean = d.iter().sum::<f64>() / d.len() as f64;
            let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / d.len() as f64;
            let min = d.iter().copied().fold(f64::INFINITY, f64::min);
            let max = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            [deg[i] as f64, min, max, mean, var.sqrt()]
        })
        .collect()
}
