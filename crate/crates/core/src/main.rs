use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use cellbench::evalmetrics::{cosine_matrix, pair_ranking, rsa_matrix, MetricError, RecallMode, Tail};
use cellbench::featbase::{
    cellcount_features, pixel_features, read_image_manifest, read_raw_image, singleconv_features, write_raw_image,
    CellCountStandardizer, FeatureError, MultiChannelImage, PixelStats, SingleConvConfig,
};
use cellbench::harness::{
    emit_reports, read_table, run_benchmark, write_atomic, write_run_outputs, write_table, BenchmarkKind, EmbeddingTable,
    FoldScheme, HarnessError, ProfileSpec, Report, ReportFormat, RunConfig,
};
use cellbench::pointsynth::{make_splits, write_dataset, SplitSizes, SynthError};
use cellbench::regress::{variance_explained_first2, RegressError};
use cellbench::rng::derive_seed_str;
use cellbench::textfmt::fmt_sig9;
use cellbench::tissuegraph::{
    bin_spots, drop_empty_patches, knn_graph, normalize_coords, read_cells_csv, read_points_file, read_spot_grid_csv,
    render_edges, write_patches_csv, CellIndex, GraphError, RenderConfig,
};

#[derive(Parser)]
#[command(name = "cellbench", version, about = "Baselines and frozen-embedding evaluation for microscopy benchmarks")]
struct Cli {
    /// Master seed (overrides the config file's seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON run configuration for the eval-* verbs.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// More logging (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate the 24-class synthetic point-pattern dataset.
    SynthGen {
        #[arg(long, default_value_t = 1000)]
        train: usize,
        #[arg(long, default_value_t = 100)]
        val: usize,
        #[arg(long, default_value_t = 1000)]
        test: usize,
    },
    /// Render kNN graphs of point files as binary images.
    RenderGraph(RenderArgs),
    /// Bin spatial-transcriptomics spots into neighborhood patches.
    BinSpots {
        #[arg(long)]
        spots: PathBuf,
        /// Cell centroids; patches without cells are dropped.
        #[arg(long)]
        cells: Option<PathBuf>,
        /// Side of one spot's patch square, in slide units.
        #[arg(long, default_value_t = 224.0)]
        patch_extent: f64,
    },
    /// Per-channel pixel statistics.
    FeatPixel {
        #[arg(long)]
        images: PathBuf,
        #[arg(long, value_enum, default_value_t = PixelMode::MeanStdSkew)]
        mode: PixelMode,
        #[arg(long, default_value = "pixel")]
        name: String,
    },
    /// Random single-convolution features.
    FeatSingleconv {
        #[arg(long)]
        images: PathBuf,
        #[arg(long, default_value_t = 64)]
        filters: usize,
        #[arg(long, default_value_t = 5)]
        kernel: usize,
        /// Skip the rectification before pooling.
        #[arg(long)]
        linear: bool,
        #[arg(long, default_value = "singleconv")]
        name: String,
    },
    /// Cell-count features from `item_id,count[,split]`.
    FeatCellcount {
        #[arg(long)]
        counts: PathBuf,
        /// Skip standardization of the base features.
        #[arg(long)]
        raw: bool,
        #[arg(long, default_value = "cellcount")]
        name: String,
    },
    /// Recall of known pairs in the similarity tail.
    EvalRetrieval(EvalArgs),
    /// Replicate-retrieval mean average precision.
    EvalMap(EvalArgs),
    /// PCA + ridge expression prediction, per-gene PCC.
    EvalRegression(EvalArgs),
    /// kNN top-1 accuracy.
    EvalKnn(EvalArgs),
    /// Spearman matrix between the pair rankings of several tables.
    Rsa {
        #[arg(long, num_args = 2.., required = true)]
        tables: Vec<PathBuf>,
    },
    /// Variance explained by the first two principal components.
    PcaDiag {
        #[arg(long, num_args = 1.., required = true)]
        tables: Vec<PathBuf>,
    },
    /// Re-emit saved reports.
    Report {
        #[arg(long, num_args = 1.., required = true)]
        reports: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::CsvDir)]
        format: Format,
    },
}

#[derive(Args)]
struct RenderArgs {
    /// Point files (synthetic pattern or `cell_id,x_um,y_um`) or directories of them.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 1)]
    edge_width: u32,
    #[arg(long, default_value_t = 448)]
    native: u32,
    #[arg(long, default_value_t = 224)]
    size: u32,
    /// Center and rescale coordinates to about [-1, 1] (default for cell CSVs).
    #[arg(long)]
    normalize: bool,
}

#[derive(Args, Default)]
struct EvalArgs {
    #[arg(long)]
    table: Option<PathBuf>,
    #[arg(long)]
    test_table: Option<PathBuf>,
    #[arg(long)]
    pairs: Option<PathBuf>,
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    targets: Option<PathBuf>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long, value_enum)]
    tail: Option<TailArg>,
    /// Rank per query row instead of over all pairs.
    #[arg(long)]
    per_query: bool,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    label_key: Option<String>,
    /// Aggregate rows into profiles by this metadata key.
    #[arg(long)]
    profile_key: Option<String>,
    #[arg(long, value_enum)]
    folds: Option<FoldArg>,
    /// `key=value` tags recorded in the report (model, model_family, stage).
    #[arg(long = "tag")]
    tags: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PixelMode {
    MeanOnly,
    MeanStdSkew,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    CsvDir,
    JsonFile,
    PlotData,
}

#[derive(Clone, Copy, ValueEnum)]
enum TailArg {
    Top,
    Bottom,
}

#[derive(Clone, Copy, ValueEnum)]
enum FoldArg {
    None,
    PerGene,
    PlateGrouped,
}

#[derive(Debug)]
struct CliError {
    code: u8,
    msg: String,
}

impl CliError {
    fn config(msg: impl Into<String>) -> Self {
        CliError { code: 2, msg: msg.into() }
    }

    fn data(msg: impl Into<String>) -> Self {
        CliError { code: 3, msg: msg.into() }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        CliError { code: e.exit_code() as u8, msg: e.to_string() }
    }
}

macro_rules! invalid_param_is_config {
    ($($t:ident),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                match e {
                    $t::InvalidParameter(_) => CliError::config(e.to_string()),
                    other => CliError::data(other.to_string()),
                }
            }
        }
    )*};
}
invalid_param_is_config!(SynthError, GraphError, FeatureError, MetricError, RegressError);

type Result<T> = std::result::Result<T, CliError>;

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::data(format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    write_atomic(path, bytes).map_err(|e| io_err(path, e))
}

/// Files of a directory (sorted) or the path itself.
fn expand_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut files: Vec<PathBuf> = std::fs::read_dir(p)
                .map_err(|e| io_err(p, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "csv"))
                .collect();
            files.sort();
            out.extend(files);
        } else {
            out.push(p.clone());
        }
    }
    if out.is_empty() {
        return Err(CliError::config("no input files"));
    }
    Ok(out)
}

fn stem(p: &Path) -> String {
    let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let name = name.strip_suffix(".manifest.json").unwrap_or(&name).to_string();
    match name.rsplit_once('.') {
        Some((s, _)) if !s.is_empty() => s.to_string(),
        _ => name,
    }
}

fn render_graph(args: &RenderArgs, out: &Path) -> Result<()> {
    let files = expand_inputs(&args.inputs)?;
    let cfg = RenderConfig {
        edge_width: args.edge_width,
        native: (args.native, args.native),
        out: (args.size, args.size),
        ..RenderConfig::default()
    };
    let rows: Vec<Result<(String, String, Option<u8>)>> = files
        .par_iter()
        .map(|f| {
            let pattern = read_points_file(f)?;
            let is_cells = pattern.class_id.is_none() && pattern.seed.is_none();
            let (points, extent) = if args.normalize || is_cells {
                (normalize_coords(&pattern.points)?, [-1.0, -1.0, 1.0, 1.0])
            } else {
                (pattern.points.clone(), [0.0, 0.0, 1.0, 1.0])
            };
            let graph = knn_graph(&points, args.k)?;
            let raster = render_edges(&points, &graph, &RenderConfig { extent, ..cfg })?;
            // item ids carry the parent directory so train/test files stay distinct
            let parent = f.parent().and_then(|p| p.file_name()).map(|p| p.to_string_lossy().into_owned());
            let id = match parent {
                Some(p) if !p.is_empty() => format!("{p}_{}", stem(f)),
                _ => stem(f),
            };
            write_file(&out.join(format!("{id}.pgm")), &raster.to_pgm())?;
            let img = MultiChannelImage::from_binary(raster.width as usize, raster.height as usize, &raster.bits)?;
            write_raw_image(&out.join(format!("{id}.raw")), &img)?;
            Ok((id.clone(), format!("{id}.raw"), pattern.class_id))
        })
        .collect();
    let mut manifest = String::from("item_id,path,class\n");
    for r in rows {
        let (id, path, class) = r?;
        let _ = writeln!(manifest, "{id},{path},{}", class.map(|c| c.to_string()).unwrap_or_default());
    }
    write_file(&out.join("images.csv"), manifest.as_bytes())
}

/// Extra manifest columns (beyond item_id,path) become table metadata.
fn manifest_meta(path: &Path) -> Result<Vec<Vec<(String, String)>>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| CliError::data(e.to_string()))?;
    let headers: Vec<String> = rdr.headers().map_err(|e| CliError::data(e.to_string()))?.iter().map(String::from).collect();
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::data(e.to_string()))?;
        out.push(
            headers
                .iter()
                .zip(rec.iter())
                .skip(2)
                .filter(|(_, v)| !v.is_empty())
                .map(|(k, v)| (k.clone(), v.to_string()))
                .collect(),
        );
    }
    Ok(out)
}

fn image_features(
    images: &Path,
    name: &str,
    out: &Path,
    f: impl Fn(&MultiChannelImage) -> std::result::Result<Vec<f64>, FeatureError> + Sync,
) -> Result<()> {
    let items = read_image_manifest(images)?;
    let meta = manifest_meta(images)?;
    let rows: Vec<Result<Vec<f32>>> = items
        .par_iter()
        .map(|(_, p)| {
            let img = read_raw_image(p)?;
            Ok(f(&img)?.into_iter().map(|v| v as f32).collect())
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let mut table = EmbeddingTable::from_rows(items.iter().map(|(id, _)| id.clone()).collect(), rows)?;
    for (i, kv) in meta.iter().enumerate() {
        for (k, v) in kv {
            table.set_meta(i, k, v.clone());
        }
    }
    write_table(&table, &out.join(name))?;
    Ok(())
}

fn feat_cellcount(counts: &Path, raw: bool, seed: u64, name: &str, out: &Path) -> Result<()> {
    let mut rdr = csv::Reader::from_path(counts).map_err(|e| CliError::data(e.to_string()))?;
    let mut ids = Vec::new();
    let mut values = Vec::new();
    let mut splits = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::data(e.to_string()))?;
        let c: u64 = rec
            .get(1)
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| CliError::data(format!("bad count row {:?}", rec.iter().collect::<Vec<_>>())))?;
        ids.push(rec[0].to_string());
        values.push(c);
        splits.push(rec.get(2).map(str::to_string));
    }
    // fit on training rows when a split column is present
    let fit: Vec<u64> = if splits.iter().any(|s| s.is_some()) {
        values.iter().zip(&splits).filter(|(_, s)| s.as_deref() == Some("train")).map(|(v, _)| *v).collect()
    } else {
        values.clone()
    };
    if !raw && fit.is_empty() {
        return Err(CliError::data("no training rows to fit the standardizer"));
    }
    let std = (!raw).then(|| CellCountStandardizer::fit(&fit));
    let rows = ids
        .iter()
        .zip(&values)
        .map(|(id, &c)| cellcount_features(c, derive_seed_str(seed, id), std.as_ref()).values.into_iter().map(|v| v as f32).collect())
        .collect();
    let mut table = EmbeddingTable::from_rows(ids, rows)?;
    for (i, s) in splits.iter().enumerate() {
        table.set_meta(i, "count", values[i].to_string());
        if let Some(s) = s {
            table.set_meta(i, "split", s.clone());
        }
    }
    write_table(&table, &out.join(name))?;
    Ok(())
}

fn bin_spots_cmd(spots: &Path, cells: Option<&Path>, extent: f64, out: &Path) -> Result<()> {
    let grid = read_spot_grid_csv(spots)?;
    let mut patches = bin_spots(&grid, extent)?;
    let counts = match cells {
        Some(c) => {
            let (_, pts) = read_cells_csv(c)?;
            let index = CellIndex::new(&pts);
            patches = drop_empty_patches(patches, &index);
            Some(patches.iter().map(|p| index.count_in_box(p.bounding_box)).collect::<Vec<_>>())
        }
        None => None,
    };
    write_patches_csv(&out.join("patches.csv"), &patches, counts.as_deref())?;
    Ok(())
}

fn eval_config(cli: &Cli, kind: BenchmarkKind, a: &EvalArgs) -> Result<RunConfig> {
    let mut c = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => {
            let table = a.table.clone().ok_or_else(|| CliError::config("--table or --config is required"))?;
            RunConfig::new(kind, table)
        }
    };
    if c.benchmark != kind {
        return Err(CliError::config(format!("config is for {}, verb expects {}", c.benchmark.name(), kind.name())));
    }
    if let Some(s) = cli.seed {
        c.seed = s;
    }
    let i = &mut c.inputs;
    if let Some(t) = &a.table {
        i.table = t.clone();
    }
    for (dst, src) in [
        (&mut i.test_table, &a.test_table),
        (&mut i.pairs, &a.pairs),
        (&mut i.labels, &a.labels),
        (&mut i.targets, &a.targets),
    ] {
        if src.is_some() {
            dst.clone_from(src);
        }
    }
    let p = &mut c.params;
    if let Some(q) = a.q {
        p.q = q;
    }
    if let Some(t) = a.tail {
        p.tail = match t {
            TailArg::Top => Tail::Top,
            TailArg::Bottom => Tail::Bottom,
        };
    }
    if a.per_query {
        p.recall_mode = RecallMode::PerQuery;
    }
    if let Some(k) = a.k {
        p.k = k;
    }
    if let Some(v) = a.alpha {
        p.alpha = v;
    }
    if let Some(m) = a.m {
        p.m = m;
    }
    if let Some(k) = &a.label_key {
        p.label_key.clone_from(k);
    }
    if let Some(k) = &a.profile_key {
        p.profile = Some(ProfileSpec { group_key: k.clone(), center: Default::default(), aggregate: Default::default() });
    }
    match a.folds {
        Some(FoldArg::None) => p.folds = None,
        Some(FoldArg::PerGene) => p.folds = Some(FoldScheme::per_gene()),
        Some(FoldArg::PlateGrouped) => p.folds = Some(FoldScheme::plate_grouped()),
        None => {}
    }
    for t in &a.tags {
        let (k, v) = t.split_once('=').ok_or_else(|| CliError::config(format!("tag {t:?} is not key=value")))?;
        c.tags.insert(k.to_string(), v.to_string());
    }
    Ok(c)
}

fn eval(cli: &Cli, kind: BenchmarkKind, a: &EvalArgs) -> Result<()> {
    let config = eval_config(cli, kind, a)?;
    let report = run_benchmark(&config)?;
    write_run_outputs(&report, &config, &cli.out)?;
    for s in &report.summaries {
        println!("{}\t{}\t{}\t{} ± {}\t(n={})", kind.name(), s.family, s.target, fmt_sig9(s.mean), fmt_sig9(s.std), s.n);
    }
    Ok(())
}

fn rsa_cmd(tables: &[PathBuf], out: &Path) -> Result<()> {
    let loaded = tables.iter().map(|t| read_table(t)).collect::<std::result::Result<Vec<_>, _>>()?;
    let names: Vec<String> = tables.iter().map(|t| stem(t)).collect();
    let reference = &loaded[0];
    let mut rankings = Vec::new();
    for (t, name) in loaded.iter().zip(&names) {
        // align rows to the first table's item order
        let idx = reference
            .ids()
            .iter()
            .map(|id| t.index_of(id).ok_or_else(|| CliError::data(format!("{name}: missing item {id:?}"))))
            .collect::<Result<Vec<_>>>()?;
        if t.len() != reference.len() {
            return Err(CliError::data(format!("{name}: {} items vs {}", t.len(), reference.len())));
        }
        rankings.push(pair_ranking(&cosine_matrix(&t.subset(&idx)).0));
    }
    let r = rsa_matrix(&rankings, &names)?;
    let mut csv = String::from("model");
    for n in &names {
        let _ = write!(csv, ",{n}");
    }
    csv.push('\n');
    for (i, n) in names.iter().enumerate() {
        csv.push_str(n);
        for j in 0..names.len() {
            let _ = write!(csv, ",{}", r.get(i, j));
        }
        csv.push('\n');
    }
    write_file(&out.join("rsa_matrix.csv"), csv.as_bytes())?;
    let mut json = serde_json::to_string_pretty(&r).map_err(|e| CliError::data(e.to_string()))?;
    json.push('\n');
    write_file(&out.join("rsa.json"), json.as_bytes())?;
    let order: Vec<&str> = r.order.iter().map(|&i| names[i].as_str()).collect();
    println!("order: {}", order.join(" "));
    Ok(())
}

fn pca_diag(tables: &[PathBuf], out: &Path) -> Result<()> {
    let mut csv = String::from("table,n_items,dim,var_first2\n");
    for t in tables {
        let table = read_table(t)?;
        let v = variance_explained_first2(&table.to_matrix())?;
        let _ = writeln!(csv, "{},{},{},{}", stem(t), table.len(), table.dim(), v);
        println!("{}\t{}", stem(t), fmt_sig9(v));
    }
    write_file(&out.join("pca_diag.csv"), csv.as_bytes())
}

fn run(cli: &Cli) -> Result<()> {
    let seed = cli.seed.unwrap_or(0);
    let out = cli.out.as_path();
    match &cli.cmd {
        Cmd::SynthGen { train, val, test } => {
            let data = make_splits(SplitSizes { train: *train, val: *val, test: *test }, seed)?;
            write_dataset(out, &data)?;
            println!("wrote {} patterns to {}", data.len(), out.display());
            Ok(())
        }
        Cmd::RenderGraph(args) => render_graph(args, out),
        Cmd::BinSpots { spots, cells, patch_extent } => bin_spots_cmd(spots, cells.as_deref(), *patch_extent, out),
        Cmd::FeatPixel { images, mode, name } => {
            let mode = match mode {
                PixelMode::MeanOnly => PixelStats::MeanOnly,
                PixelMode::MeanStdSkew => PixelStats::MeanStdSkew,
            };
            image_features(images, name, out, |img| Ok(pixel_features(img, mode).values))
        }
        Cmd::FeatSingleconv { images, filters, kernel, linear, name } => {
            if *filters == 0 || kernel % 2 == 0 {
                return Err(CliError::config(format!("need filters >= 1 and an odd kernel, got {filters} and {kernel}")));
            }
            let cfg = SingleConvConfig { n_filters: *filters, kernel: *kernel, seed, relu: !linear };
            image_features(images, name, out, |img| Ok(singleconv_features(img, &cfg)?.values))
        }
        Cmd::FeatCellcount { counts, raw, name } => feat_cellcount(counts, *raw, seed, name, out),
        Cmd::EvalRetrieval(a) => eval(cli, BenchmarkKind::Retrieval, a),
        Cmd::EvalMap(a) => eval(cli, BenchmarkKind::Map, a),
        Cmd::EvalRegression(a) => eval(cli, BenchmarkKind::Regression, a),
        Cmd::EvalKnn(a) => eval(cli, BenchmarkKind::Knn, a),
        Cmd::Rsa { tables } => rsa_cmd(tables, out),
        Cmd::PcaDiag { tables } => pca_diag(tables, out),
        Cmd::Report { reports, format } => {
            let loaded = reports.iter().map(|p| Report::from_json_file(p)).collect::<std::result::Result<Vec<_>, _>>()?;
            let (fmt, target) = match format {
                Format::CsvDir => (ReportFormat::CsvDir, out.to_path_buf()),
                Format::JsonFile => (ReportFormat::JsonFile, out.join("reports.json")),
                Format::PlotData => (ReportFormat::PlotData, out.to_path_buf()),
            };
            emit_reports(&loaded, fmt, &target)?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.msg);
            ExitCode::from(e.code)
        }
    }
}
