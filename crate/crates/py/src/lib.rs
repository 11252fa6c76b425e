//! Python bindings for the `cellbench` core. Embeddings travel as lists of
//! rows; tables are exchanged through the on-disk interchange format.

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use cellbench::evalmetrics::{self as em, PairSet, RecallMode, Tail};
use cellbench::featbase::{self as fb, MultiChannelImage, PixelStats, SingleConvConfig};
use cellbench::harness::{self as hs, EmbeddingTable};
use cellbench::pointsynth;
use cellbench::regress::{self as rg, DMatrix, HestData};
use cellbench::tissuegraph::{self as tg, GridKind, RenderConfig, SpotGrid};

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_table(ids: Option<Vec<String>>, rows: Vec<Vec<f32>>) -> PyResult<EmbeddingTable> {
    let ids = ids.unwrap_or_else(|| (0..rows.len()).map(|i| i.to_string()).collect());
    EmbeddingTable::from_rows(ids, rows).map_err(err)
}

fn to_points(points: Vec<(f64, f64)>) -> Vec<[f64; 2]> {
    points.into_iter().map(|(x, y)| [x, y]).collect()
}

fn to_matrix(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    let n = rows.len();
    let d = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != d) {
        return Err(err("rows have different lengths"));
    }
    Ok(DMatrix::from_fn(n, d, |r, c| rows[r][c]))
}

/// N x D float32 embedding table with per-item string metadata.
#[pyclass(name = "EmbeddingTable", module = "cellbench_py")]
struct PyTable {
    inner: EmbeddingTable,
}

#[pymethods]
impl PyTable {
    #[new]
    #[pyo3(signature = (rows, ids=None, meta=None))]
    fn new(rows: Vec<Vec<f32>>, ids: Option<Vec<String>>, meta: Option<BTreeMap<String, Vec<String>>>) -> PyResult<Self> {
        let mut inner = to_table(ids, rows)?;
        for (key, values) in meta.unwrap_or_default() {
            if values.len() != inner.len() {
                return Err(err(format!("meta {key:?}: {} values for {} items", values.len(), inner.len())));
            }
            for (i, v) in values.into_iter().enumerate() {
                inner.set_meta(i, &key, v);
            }
        }
        Ok(Self { inner })
    }

    /// Load a table from `<base>.manifest.json` (the suffix is optional).
    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        Ok(Self { inner: hs::read_table(&path).map_err(err)? })
    }

    fn write(&self, path: PathBuf) -> PyResult<()> {
        hs::write_table(&self.inner, &path).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn ids(&self) -> Vec<String> {
        self.inner.ids().to_vec()
    }

    #[getter]
    fn meta_keys(&self) -> Vec<String> {
        self.inner.meta_keys().to_vec()
    }

    fn rows(&self) -> Vec<Vec<f32>> {
        (0..self.inner.len()).map(|i| self.inner.row(i).to_vec()).collect()
    }

    fn meta(&self, key: &str) -> Vec<Option<String>> {
        (0..self.inner.len()).map(|i| self.inner.meta(i, key).map(str::to_string)).collect()
    }

    fn __repr__(&self) -> String {
        format!("EmbeddingTable(n_items={}, dim={})", self.inner.len(), self.inner.dim())
    }
}

/// Points of one synthetic sample as `(x, y)` tuples in the unit square.
#[pyfunction]
fn generate_class(class_id: u32, seed: u64) -> PyResult<Vec<(f64, f64)>> {
    let p = pointsynth::generate_class(class_id, seed).map_err(err)?;
    Ok(p.points.into_iter().map(|[x, y]| (x, y)).collect())
}

#[pyfunction]
fn knn_graph(points: Vec<(f64, f64)>, k: usize) -> PyResult<Vec<(usize, usize)>> {
    Ok(tg::knn_graph(&to_points(points), k).map_err(err)?.edges().to_vec())
}

/// Binary kNN-graph image as `(width, height, bits)`, bits row-major 0/1.
#[pyfunction]
#[pyo3(signature = (points, k=5, edge_width=1, native=448, size=224, extent=(0.0, 0.0, 1.0, 1.0)))]
fn render_graph(
    points: Vec<(f64, f64)>,
    k: usize,
    edge_width: u32,
    native: u32,
    size: u32,
    extent: (f64, f64, f64, f64),
) -> PyResult<(u32, u32, Vec<u8>)> {
    let pts = to_points(points);
    let graph = tg::knn_graph(&pts, k).map_err(err)?;
    let cfg = RenderConfig {
        edge_width,
        native: (native, native),
        out: (size, size),
        extent: [extent.0, extent.1, extent.2, extent.3],
    };
    let r = tg::render_edges(&pts, &graph, &cfg).map_err(err)?;
    Ok((r.width, r.height, r.bits))
}

fn image(data: Vec<f32>, channels: usize, height: usize, width: usize) -> PyResult<MultiChannelImage> {
    MultiChannelImage::new(channels, height, width, data).map_err(err)
}

/// Channel means, then stds, then skews (`mode="mean_std_skew"`), or means only.
#[pyfunction]
#[pyo3(signature = (data, channels, height, width, mode="mean_std_skew"))]
fn pixel_features(data: Vec<f32>, channels: usize, height: usize, width: usize, mode: &str) -> PyResult<Vec<f64>> {
    let mode = match mode {
        "mean_only" => PixelStats::MeanOnly,
        "mean_std_skew" => PixelStats::MeanStdSkew,
        other => return Err(err(format!("unknown mode {other:?}"))),
    };
    Ok(fb::pixel_features(&image(data, channels, height, width)?, mode).values)
}

#[pyfunction]
#[pyo3(signature = (data, channels, height, width, n_filters=64, kernel=5, seed=0, relu=true))]
#[allow(clippy::too_many_arguments)]
fn singleconv_features(
    data: Vec<f32>,
    channels: usize,
    height: usize,
    width: usize,
    n_filters: usize,
    kernel: usize,
    seed: u64,
    relu: bool,
) -> PyResult<Vec<f64>> {
    let cfg = SingleConvConfig { n_filters, kernel, seed, relu };
    Ok(fb::singleconv_features(&image(data, channels, height, width)?, &cfg).map_err(err)?.values)
}

/// Unstandardized 256-d count features.
#[pyfunction]
fn cellcount_features(count: u64, seed: u64) -> Vec<f64> {
    fb::cellcount_features(count, seed, None).values
}

#[pyfunction]
fn pearson(x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    em::pearson_r(&x, &y).map_err(err)
}

#[pyfunction]
fn spearman(x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    em::spearman_rho(&x, &y).map_err(err)
}

/// Recall of `pairs` among the `ceil(q * #pairs)` most (or least) similar pairs.
#[pyfunction]
#[pyo3(signature = (rows, ids, pairs, q=0.05, tail="top", per_query=false))]
fn recall_at_tail(
    rows: Vec<Vec<f32>>,
    ids: Vec<String>,
    pairs: Vec<(String, String)>,
    q: f64,
    tail: &str,
    per_query: bool,
) -> PyResult<f64> {
    let tail = match tail {
        "top" => Tail::Top,
        "bottom" => Tail::Bottom,
        other => return Err(err(format!("unknown tail {other:?}"))),
    };
    let mode = if per_query { RecallMode::PerQuery } else { RecallMode::Global };
    let (s, _) = em::cosine_matrix(&to_table(Some(ids), rows)?);
    Ok(em::recall_at_tail(&s, &PairSet::new("pairs", pairs), q, tail, mode).map_err(err)?.recall)
}

/// `(map, per_group)` for replicate retrieval; `labels[i]` labels row `i`.
#[pyfunction]
fn map_retrieval(rows: Vec<Vec<f32>>, labels: Vec<String>) -> PyResult<(f64, BTreeMap<String, f64>)> {
    let table = to_table(None, rows)?;
    let map: HashMap<String, String> = table.ids().iter().cloned().zip(labels).collect();
    let r = em::map_retrieval(&table, &map).map_err(err)?;
    Ok((r.map, r.per_group))
}

#[pyfunction]
#[pyo3(signature = (train, train_labels, test, test_labels, k=20))]
fn knn_accuracy(
    train: Vec<Vec<f32>>,
    train_labels: Vec<String>,
    test: Vec<Vec<f32>>,
    test_labels: Vec<String>,
    k: usize,
) -> PyResult<f64> {
    let r = em::knn_probe(&to_table(None, train)?, &train_labels, &to_table(None, test)?, &test_labels, k).map_err(err)?;
    Ok(r.accuracy)
}

/// Spearman matrix between the pair rankings of several embeddings of the
/// same items, with the dendrogram leaf order.
#[pyfunction]
fn rsa(embeddings: Vec<Vec<Vec<f32>>>, names: Vec<String>) -> PyResult<(Vec<Vec<f64>>, Vec<usize>)> {
    let rankings = embeddings
        .into_iter()
        .map(|rows| Ok(em::pair_ranking(&em::cosine_matrix(&to_table(None, rows)?).0)))
        .collect::<PyResult<Vec<_>>>()?;
    let r = em::rsa_matrix(&rankings, &names).map_err(err)?;
    let m = (0..names.len()).map(|i| (0..names.len()).map(|j| r.get(i, j)).collect()).collect();
    Ok((m, r.order))
}

#[pyfunction]
fn variance_explained_first2(rows: Vec<Vec<f64>>) -> PyResult<f64> {
    rg::variance_explained_first2(&to_matrix(&rows)?).map_err(err)
}

/// PCA + ridge leave-one-fold-out regression. Returns the global mean PCC
/// and the per-dataset means.
#[pyfunction]
#[pyo3(signature = (x, y, datasets, folds, m=256, alpha=1.0))]
fn regression(
    x: Vec<Vec<f64>>,
    y: Vec<Vec<f64>>,
    datasets: Vec<String>,
    folds: Vec<usize>,
    m: usize,
    alpha: f64,
) -> PyResult<(f64, BTreeMap<String, f64>)> {
    let y = to_matrix(&y)?;
    let genes = (0..y.ncols()).map(|g| format!("g{g}")).collect();
    let data = HestData { x: to_matrix(&x)?, y, genes, datasets, folds };
    let r = rg::hest_pipeline(&data, m, alpha).map_err(err)?;
    Ok((r.global_mean, r.per_dataset.into_iter().map(|(k, s)| (k, s.mean)).collect()))
}

/// Member spot ids of each spot's patch, anchor first.
#[pyfunction]
#[pyo3(signature = (ids, centers, kind="square", pixel_size=1.0, patch_extent=224.0))]
fn bin_spots(
    ids: Vec<String>,
    centers: Vec<(f64, f64)>,
    kind: &str,
    pixel_size: f64,
    patch_extent: f64,
) -> PyResult<Vec<Vec<String>>> {
    let kind = GridKind::parse(kind).ok_or_else(|| err(format!("unknown grid kind {kind:?}")))?;
    let grid = SpotGrid::new(ids, to_points(centers), kind, pixel_size).map_err(err)?;
    Ok(tg::bin_spots(&grid, patch_extent).map_err(err)?.into_iter().map(|p| p.member_spot_ids).collect())
}

#[pymodule]
fn cellbench_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTable>()?;
    m.add_function(wrap_pyfunction!(generate_class, m)?)?;
    m.add_function(wrap_pyfunction!(knn_graph, m)?)?;
    m.add_function(wrap_pyfunction!(render_graph, m)?)?;
    m.add_function(wrap_pyfunction!(pixel_features, m)?)?;
    m.add_function(wrap_pyfunction!(singleconv_features, m)?)?;
    m.add_function(wrap_pyfunction!(cellcount_features, m)?)?;
    m.add_function(wrap_pyfunction!(pearson, m)?)?;
    m.add_function(wrap_pyfunction!(spearman, m)?)?;
    m.add_function(wrap_pyfunction!(recall_at_tail, m)?)?;
    m.add_function(wrap_pyfunction!(map_retrieval, m)?)?;
    m.add_function(wrap_pyfunction!(knn_accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(rsa, m)?)?;
    m.add_function(wrap_pyfunction!(variance_explained_first2, m)?)?;
    m.add_function(wrap_pyfunction!(regression, m)?)?;
    m.add_function(wrap_pyfunction!(bin_spots, m)?)?;
    m.add("N_CLASSES", pointsynth::N_CLASSES)?;
    Ok(())
}
