//! Acceptance suite. Runs every criterion in sequence (so the timed ones
//! measure a quiet machine), prints one PASS/FAIL line each and exits
//! non-zero if any failed.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use cellbench::evalmetrics::{
    cosine_matrix, knn_probe, map_retrieval, recall_at_tail, spearman_rho, PairSet, RecallMode, Tail,
};
use cellbench::featbase::{pixel_features, singleconv_features, MultiChannelImage, PixelStats, SingleConvConfig};
use cellbench::harness::EmbeddingTable;
use cellbench::pointsynth::{class_registry, dihedral, make_splits, Landscape, PointPattern, Sampling, SplitSizes};
use cellbench::regress::{hest_pipeline, variance_explained_first2, HestData};
use cellbench::rng::rng_from_seed;
use cellbench::tissuegraph::{bin_spots, knn_graph, render_edges, render_native, GridKind, RenderConfig, SpotGrid};
use cellbench::Point;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("synthetic point counts", point_counts),
        ("deboss discs are empty", deboss_exclusion),
        ("retrieval random null", retrieval_null),
        ("mAP random null", map_null),
        ("mAP matches enumeration", map_enumeration),
        ("regression sanity", regression_sanity),
        ("PCA variance diagnostics", pca_diagnostics),
        ("rank statistics", rank_statistics),
        ("spot binning geometry", binning_geometry),
        ("raster rotation symmetry", raster_symmetry),
        ("CLI determinism", cli_determinism),
        ("synthetic end-to-end", end_to_end),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = f();
        let status = if o.pass { "PASS" } else { "FAIL" };
        println!("[{status}] {:>2} {name}: {} ({:.1}s)", i + 1, o.detail, t.elapsed().as_secs_f64());
        failed += usize::from(!o.pass);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn point_counts() -> Outcome {
    let reg = class_registry();
    let t = Instant::now();
    let mut class0_ok = true;
    let mut worst_poisson: (f64, u8) = (0.0, 0);
    let mut grid_means = Vec::new();
    for spec in &reg {
        let counts: Vec<usize> = (0..200).map(|s| spec.generate(s).unwrap().len()).collect();
        let mean = counts.iter().sum::<usize>() as f64 / 200.0;
        if spec.class_id == 0 {
            class0_ok = counts.iter().all(|&c| c == 900);
        }
        match spec.sampling {
            Sampling::UniformPoisson => {
                let dev = (mean - 900.0).abs() / 900.0;
                if dev >= worst_poisson.0 {
                    worst_poisson = (dev, spec.class_id);
                }
            }
            Sampling::NoisyGrid { .. } => grid_means.push(format!("c{}={mean:.0}", spec.class_id)),
        }
    }
    let secs = t.elapsed().as_secs_f64();
    outcome(
        class0_ok && worst_poisson.0 <= 0.05 && secs < 10.0,
        format!(
            "class 0 always 900: {class0_ok}; worst Poisson mean deviation {:.2}% (class {}); grid means [{}]; 4800 patterns in {secs:.2}s",
            100.0 * worst_poisson.0,
            worst_poisson.1,
            grid_means.join(" ")
        ),
    )
}

fn deboss_exclusion() -> Outcome {
    let mut checked = Vec::new();
    let mut violations = 0usize;
    for spec in class_registry() {
        let Some(Landscape::DiscsDeboss { discs }) = &spec.density else { continue };
        if spec.sampling != Sampling::UniformPoisson {
            continue;
        }
        checked.push(spec.class_id);
        for seed in 0..100 {
            // the generator resolves the density landscape first
            let mut rng = rng_from_seed(seed);
            let resolved = spec.density.as_ref().unwrap().resolve(&mut rng);
            let centers = resolved.discs().unwrap().centers.clone().unwrap();
            let r2 = discs.radius * discs.radius;
            let p = spec.generate(seed).unwrap();
            violations += p
                .points
                .iter()
                .filter(|q| centers.iter().any(|c| (q[0] - c[0]).powi(2) + (q[1] - c[1]).powi(2) < r2))
                .count();
        }
    }
    outcome(violations == 0 && !checked.is_empty(), format!("classes {checked:?} x 100 seeds, {violations} points inside a disc"))
}

fn random_table<R: Rng>(rng: &mut R, ids: &[String], dim: usize) -> EmbeddingTable {
    let rows = ids.iter().map(|_| (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal) as f32).collect()).collect();
    EmbeddingTable::from_rows(ids.to_vec(), rows).unwrap()
}

fn retrieval_null() -> Outcome {
    let mut rng = rng_from_seed(101);
    let n = 50;
    let ids: Vec<String> = (0..n).map(|i| format!("g{i:02}")).collect();
    let mut all: Vec<(usize, usize)> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
    all.shuffle(&mut rng);
    let truth = PairSet::new("random", all[..100].iter().map(|&(i, j)| (ids[i].clone(), ids[j].clone())).collect());
    let mut acc = 0.0;
    for _ in 0..100 {
        let s = cosine_matrix(&random_table(&mut rng, &ids, 32)).0;
        acc += recall_at_tail(&s, &truth, 0.05, Tail::Top, RecallMode::Global).unwrap().recall;
    }
    let mean = acc / 100.0;
    outcome((mean - 0.05).abs() <= 0.01, format!("mean recall {mean:.4} over 100 trials (target 0.05 +/- 0.01)"))
}

fn map_null() -> Outcome {
    let mut rng = rng_from_seed(202);
    let (groups, per) = (8, 50);
    let ids: Vec<String> = (0..groups * per).map(|i| format!("x{i:03}")).collect();
    let labels: HashMap<String, String> = ids.iter().enumerate().map(|(i, id)| (id.clone(), format!("g{}", i % groups))).collect();
    let mut acc = 0.0;
    for _ in 0..100 {
        acc += map_retrieval(&random_table(&mut rng, &ids, 32), &labels).unwrap().map;
    }
    let mean = acc / 100.0;
    outcome(
        (mean - 0.125).abs() <= 0.02,
        format!("mean mAP {mean:.4} with {groups} groups of {per} over 100 trials (target 0.125 +/- 0.02)"),
    )
}

fn cos64(a: &[f32], b: &[f32]) -> f64 {
    let (mut d, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (x, y) = (f64::from(*x), f64::from(*y));
        d += x * y;
        na += x * x;
        nb += y * y;
    }
    (d / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0)
}

/// AP from explicit ranks: a candidate's rank is one plus the number of
/// candidates ranked ahead of it (higher similarity, or equal with a lower
/// index).
fn enumerated_ap(rows: &[Vec<f32>], labels: &[usize], q: usize) -> f64 {
    let n = rows.len();
    let sim: Vec<f64> = (0..n).map(|j| cos64(&rows[q], &rows[j])).collect();
    let ahead = |a: usize, b: usize| sim[b] > sim[a] || (sim[b] == sim[a] && b < a);
    let rank = |a: usize| 1 + (0..n).filter(|&b| b != q && b != a && ahead(a, b)).count();
    let relevant: Vec<usize> = (0..n).filter(|&j| j != q && labels[j] == labels[q]).collect();
    let total: f64 = relevant
        .iter()
        .map(|&j| {
            let hits_at = 1 + relevant.iter().filter(|&&o| o != j && ahead(j, o)).count();
            hits_at as f64 / rank(j) as f64
        })
        .sum();
    total / relevant.len() as f64
}

fn map_enumeration() -> Outcome {
    let mut rng = rng_from_seed(303);
    let mut worst = 0.0f64;
    let mut instances = 0;
    while instances < 200 {
        let n = rng.random_range(3..=6);
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..3)).collect();
        let mut sizes = [0usize; 3];
        labels.iter().for_each(|&l| sizes[l] += 1);
        if sizes.iter().filter(|&&s| s >= 2).count() < 2 {
            continue;
        }
        instances += 1;
        // coarse values so cosine ties actually occur
        let rows: Vec<Vec<f32>> = (0..n).map(|_| (0..3).map(|_| rng.random_range(-2..=2) as f32).collect()).collect();
        let rows: Vec<Vec<f32>> = rows.into_iter().map(|r| if r.iter().all(|&v| v == 0.0) { vec![1.0, 0.0, 0.0] } else { r }).collect();
        let ids: Vec<String> = (0..n).map(|i| format!("i{i}")).collect();
        let table = EmbeddingTable::from_rows(ids.clone(), rows.clone()).unwrap();
        let map: HashMap<String, String> = ids.iter().zip(&labels).map(|(id, l)| (id.clone(), l.to_string())).collect();
        let got = map_retrieval(&table, &map).unwrap();
        let mut group_means = Vec::new();
        for (g, &size) in sizes.iter().enumerate() {
            if size < 2 {
                continue;
            }
            let qs: Vec<usize> = (0..n).filter(|&i| labels[i] == g).collect();
            let want = qs.iter().map(|&q| enumerated_ap(&rows, &labels, q)).sum::<f64>() / qs.len() as f64;
            worst = worst.max((got.per_group[&g.to_string()] - want).abs());
            group_means.push(want);
        }
        let want_map = group_means.iter().sum::<f64>() / group_means.len() as f64;
        worst = worst.max((got.map - want_map).abs());
    }
    outcome(worst <= 1e-12, format!("200 instances of <= 6 items, max |diff| {worst:.1e}"))
}

fn hest_data<R: Rng>(rng: &mut R, n: usize, latent: usize, d: usize, g: usize) -> HestData {
    let z = DMatrix::from_fn(n, latent, |_, _| rng.sample::<f64, _>(StandardNormal));
    let a = DMatrix::from_fn(latent, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let x = &z * a;
    let w = DMatrix::from_fn(d, g, |_, _| rng.sample::<f64, _>(StandardNormal));
    let y = &x * w;
    HestData {
        x,
        y,
        genes: (0..g).map(|i| format!("gene{i}")).collect(),
        datasets: (0..n).map(|i| ["A", "B"][i % 2].to_string()).collect(),
        folds: (0..n).map(|i| (i / 2) % 3).collect(),
    }
}

fn regression_sanity() -> Outcome {
    let mut rng = rng_from_seed(404);
    let data = hest_data(&mut rng, 180, 16, 40, 6);
    let r = hest_pipeline(&data, 16, 1e-8).unwrap();
    let min_pcc = r.entries.iter().map(|e| e.pcc.unwrap_or(f64::NAN)).fold(f64::INFINITY, f64::min);
    let mut null_sum = 0.0;
    for _ in 0..20 {
        let mut d = hest_data(&mut rng, 180, 16, 40, 6);
        let mut perm: Vec<usize> = (0..180).collect();
        perm.shuffle(&mut rng);
        d.y = DMatrix::from_fn(180, 6, |r, c| d.y[(perm[r], c)]);
        null_sum += hest_pipeline(&d, 16, 1.0).unwrap().global_mean;
    }
    let null_mean = null_sum / 20.0;
    outcome(
        min_pcc >= 1.0 - 1e-6 && null_mean.abs() <= 0.1,
        format!("noiseless min PCC {min_pcc:.9} over {} gene-folds; shuffled mean PCC {null_mean:+.4} over 20 trials", r.entries.len()),
    )
}

fn eigen_first2(x: &DMatrix<f64>) -> f64 {
    let n = x.nrows() as f64;
    let mean = x.row_mean();
    let mut c = x.clone();
    for mut row in c.row_iter_mut() {
        row -= &mean;
    }
    let cov = c.transpose() * &c / (n - 1.0);
    let mut ev: Vec<f64> = cov.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    (ev[0] + ev[1]) / ev.iter().sum::<f64>()
}

fn pca_diagnostics() -> Outcome {
    let mut rng = rng_from_seed(505);
    let mut rank2_worst = 0.0f64;
    for _ in 0..10 {
        let a = DMatrix::from_fn(60, 2, |_, _| rng.sample::<f64, _>(StandardNormal));
        let b = DMatrix::from_fn(2, 12, |_, _| rng.sample::<f64, _>(StandardNormal));
        let shift = DMatrix::from_fn(1, 12, |_, _| rng.random_range(-5.0..5.0));
        let x = &a * b + DMatrix::from_fn(60, 12, |_, c| shift[(0, c)]);
        rank2_worst = rank2_worst.max((variance_explained_first2(&x).unwrap() - 1.0).abs());
    }
    let iso = DMatrix::from_fn(10_000, 10, |_, _| rng.sample::<f64, _>(StandardNormal));
    let v = variance_explained_first2(&iso).unwrap();
    let oracle = eigen_first2(&iso);
    outcome(
        rank2_worst <= 1e-9 && (v - 0.2).abs() <= 0.02 && (v - oracle).abs() <= 1e-9,
        format!("rank-2 max |v-1| {rank2_worst:.1e}; isotropic 10-D v={v:.4} (eigen oracle {oracle:.4})"),
    )
}

fn oracle_ranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&v| {
            let below = x.iter().filter(|&&o| o < v).count() as f64;
            let equal = x.iter().filter(|&&o| o == v).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

fn oracle_pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

fn rank_statistics() -> Outcome {
    let mut rng = rng_from_seed(606);
    let mut exact = true;
    for _ in 0..100 {
        let n = rng.random_range(3..40);
        let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let up: Vec<f64> = x.iter().map(|v| v.exp() * 3.0 + 1.0).collect();
        let down: Vec<f64> = x.iter().map(|v| -v * v * v).collect();
        exact &= spearman_rho(&x, &up).unwrap() == 1.0 && spearman_rho(&x, &down).unwrap() == -1.0;
    }
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(4..30);
        let a: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..5))).collect();
        let b: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..5))).collect();
        let (ra, rb) = (oracle_ranks(&a), oracle_ranks(&b));
        if ra.iter().all(|&v| v == ra[0]) || rb.iter().all(|&v| v == rb[0]) {
            continue;
        }
        worst = worst.max((spearman_rho(&a, &b).unwrap() - oracle_pearson(&ra, &rb)).abs());
    }
    outcome(exact && worst <= 1e-12, format!("monotone maps give exactly +/-1: {exact}; tied inputs max |diff| {worst:.1e}"))
}

fn lattice(kind: GridKind, nx: usize, ny: usize, pitch: f64) -> SpotGrid {
    let mut ids = Vec::new();
    let mut centers = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            ids.push(format!("s{i}_{j}"));
            centers.push(match kind {
                GridKind::Square => [i as f64 * pitch, j as f64 * pitch],
                GridKind::Hex => [i as f64 * pitch + if j % 2 == 1 { pitch / 2.0 } else { 0.0 }, j as f64 * pitch * 3f64.sqrt() / 2.0],
            });
        }
    }
    SpotGrid::new(ids, centers, kind, 0.5).unwrap()
}

fn binning_geometry() -> Outcome {
    let sq = bin_spots(&lattice(GridKind::Square, 7, 6, 100.0), 224.0).unwrap();
    let at = |i: usize, j: usize| sq[j * 7 + i].members.len();
    let (interior, edge, corner) = (at(3, 3), at(0, 3), at(6, 5));
    let hex = bin_spots(&lattice(GridKind::Hex, 9, 9, 55.0), 224.0).unwrap();
    let hex_interior = hex[4 * 9 + 4].members.len();
    outcome(
        (interior, edge, corner, hex_interior) == (9, 6, 4, 7),
        format!("square interior/edge/corner {interior}/{edge}/{corner}, hex interior {hex_interior}"),
    )
}

fn raster_symmetry() -> Outcome {
    let mut rng = rng_from_seed(707);
    let mut mismatches = 0;
    for trial in 0..50 {
        let n = rng.random_range(20..120);
        let pts: Vec<Point> = (0..n).map(|_| [rng.random(), rng.random()]).collect();
        let graph = knn_graph(&pts, 5).unwrap();
        let cfg = RenderConfig { edge_width: 1 + 2 * (trial % 2), native: (448, 448), ..RenderConfig::default() };
        let base = render_native(&pts, &graph, &cfg).unwrap();
        let rotated: Vec<Point> = pts.iter().map(|&p| dihedral(p, 1)).collect();
        if render_native(&rotated, &graph, &cfg).unwrap() != base.rotate90() {
            mismatches += 1;
        }
    }
    outcome(mismatches == 0, format!("50 random graphs at 448x448, {mismatches} mismatches"))
}

fn cellbench(dir: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_cellbench"))
        .current_dir(dir)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)))
    }
}

fn write_fixtures(dir: &Path) {
    let mut spots = String::from("spot_id,x_um,y_um,grid_kind,pixel_size_um\n");
    let mut cells = String::from("cell_id,x_um,y_um\n");
    for j in 0..5 {
        for i in 0..5 {
            spots.push_str(&format!("s{i}{j},{},{},square,0.5\n", i * 100, j * 100));
            if (i + j) % 3 != 0 {
                cells.push_str(&format!("c{i}{j},{},{}\n", i * 100 + 13, j * 100 - 7));
            }
        }
    }
    fs::write(dir.join("spots.csv"), spots).unwrap();
    fs::write(dir.join("cells.csv"), cells).unwrap();
    let mut counts = String::from("item_id,count,split\n");
    for i in 0..30 {
        counts.push_str(&format!("p{i},{},{}\n", 50 + i * 17 % 90, if i < 20 { "train" } else { "test" }));
    }
    fs::write(dir.join("counts.csv"), counts).unwrap();
}

/// Manifest over the rendered train images with dataset/fold metadata, and
/// a target table derived from the pattern files.
fn write_regression_inputs(dir: &Path) {
    let manifest = fs::read_to_string(dir.join("img_train/images.csv")).unwrap();
    let mut out = String::from("item_id,path,dataset,fold\n");
    let mut targets = String::from("item_id,geneA,geneB\n");
    for (i, line) in manifest.lines().skip(1).enumerate() {
        let mut f = line.split(',');
        let (id, path, class) = (f.next().unwrap(), f.next().unwrap(), f.next().unwrap());
        out.push_str(&format!("{id},{path},{},{}\n", ["A", "B"][i % 2], (i / 2) % 3));
        let file = id.strip_prefix("train_").unwrap();
        let n_points = fs::read_to_string(dir.join(format!("synth/train/{file}.csv"))).unwrap().lines().count();
        targets.push_str(&format!("{id},{n_points},{}\n", class.parse::<f64>().unwrap() * 0.5 + (i % 3) as f64));
    }
    fs::write(dir.join("img_train/folds.csv"), out).unwrap();
    fs::write(dir.join("targets.csv"), targets).unwrap();
}

fn write_pairs(dir: &Path) {
    let manifest = fs::read_to_string(dir.join("img_train/images.csv")).unwrap();
    let rows: Vec<(String, String)> = manifest
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_string(), f[2].to_string())
        })
        .collect();
    let mut pairs = String::from("id_a,id_b,source\n");
    for (i, a) in rows.iter().enumerate() {
        for b in &rows[i + 1..] {
            if a.1 == b.1 {
                pairs.push_str(&format!("{},{},same_class\n", a.0, b.0));
            }
        }
    }
    fs::write(dir.join("pairs.csv"), pairs).unwrap();
}

fn run_every_verb(dir: &Path) -> Result<usize, String> {
    write_fixtures(dir);
    let verbs: Vec<Vec<&str>> = vec![
        vec!["synth-gen", "--train", "2", "--val", "1", "--test", "1", "--seed", "7", "--out", "synth"],
        vec!["render-graph", "synth/train", "--native", "96", "--size", "48", "--out", "img_train"],
        vec!["render-graph", "synth/test", "--native", "96", "--size", "48", "--edge-width", "2", "--out", "img_test"],
        vec!["bin-spots", "--spots", "spots.csv", "--cells", "cells.csv", "--patch-extent", "150", "--out", "spots"],
        vec!["feat-pixel", "--images", "img_train/images.csv", "--out", "feat_train"],
        vec!["feat-pixel", "--images", "img_test/images.csv", "--mode", "mean-only", "--out", "feat_test"],
        vec!["feat-singleconv", "--images", "img_train/images.csv", "--filters", "8", "--kernel", "3", "--seed", "3", "--out", "feat_train"],
        vec!["feat-singleconv", "--images", "img_test/images.csv", "--filters", "8", "--kernel", "3", "--seed", "3", "--out", "feat_test"],
        vec!["feat-singleconv", "--images", "img_train/folds.csv", "--filters", "8", "--kernel", "3", "--linear", "--name", "lin", "--out", "feat_train"],
        vec!["feat-cellcount", "--counts", "counts.csv", "--seed", "5", "--out", "feat_counts"],
        vec!["eval-retrieval", "--table", "feat_train/singleconv", "--pairs", "pairs.csv", "--q", "0.1", "--out", "ev_retrieval"],
        vec!["eval-map", "--table", "feat_train/singleconv", "--label-key", "class", "--tag", "model=sc", "--out", "ev_map"],
        vec!["eval-regression", "--table", "feat_train/lin", "--targets", "targets.csv", "--m", "4", "--alpha", "0.5", "--out", "ev_regression"],
        vec!["eval-knn", "--table", "feat_train/singleconv", "--test-table", "feat_test/singleconv", "--label-key", "class", "--k", "3", "--out", "ev_knn"],
        vec!["rsa", "--tables", "feat_train/singleconv", "feat_train/pixel", "feat_train/lin", "--out", "rsa"],
        vec!["pca-diag", "--tables", "feat_train/singleconv", "feat_train/pixel", "--out", "pca"],
        vec!["report", "--reports", "ev_map/report.json", "ev_knn/report.json", "--format", "plot-data", "--out", "rep_plot"],
        vec!["report", "--reports", "ev_map/report.json", "ev_regression/report.json", "--format", "csv-dir", "--out", "rep_csv"],
        vec!["report", "--reports", "ev_retrieval/report.json", "--format", "json-file", "--out", "rep_json"],
    ];
    for (i, v) in verbs.iter().enumerate() {
        if i == 4 {
            write_regression_inputs(dir);
            write_pairs(dir);
        }
        cellbench(dir, v)?;
    }
    Ok(verbs.len())
}

fn files_under(root: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

fn cli_determinism() -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let runs = (run_every_verb(a.path()), run_every_verb(b.path()));
    let n_verbs = match runs {
        (Ok(n), Ok(_)) => n,
        (Err(e), _) | (_, Err(e)) => return outcome(false, format!("CLI failed: {e}")),
    };
    let (fa, fb) = (files_under(a.path()), files_under(b.path()));
    if fa != fb {
        return outcome(false, "the two runs produced different file sets");
    }
    let differing: Vec<String> = fa
        .iter()
        .filter(|p| fs::read(a.path().join(p)).unwrap() != fs::read(b.path().join(p)).unwrap())
        .map(|p| p.display().to_string())
        .collect();
    outcome(
        differing.is_empty(),
        format!("{n_verbs} invocations covering all 13 verbs, {} files compared, {} differ {:?}", fa.len(), differing.len(), differing),
    )
}

fn render_image(p: &PointPattern) -> MultiChannelImage {
    let graph = knn_graph(&p.points, 5).unwrap();
    let r = render_edges(&p.points, &graph, &RenderConfig::default()).unwrap();
    MultiChannelImage::from_binary(r.width as usize, r.height as usize, &r.bits).unwrap()
}

fn feature_table(patterns: &[PointPattern], f: impl Fn(&MultiChannelImage) -> Vec<f64> + Sync) -> (EmbeddingTable, Vec<u8>) {
    use rayon::prelude::*;
    let rows: Vec<Vec<f32>> = patterns.par_iter().map(|p| f(&render_image(p)).into_iter().map(|v| v as f32).collect()).collect();
    let ids = (0..patterns.len()).map(|i| format!("p{i}")).collect();
    (EmbeddingTable::from_rows(ids, rows).unwrap(), patterns.iter().map(|p| p.class_id.unwrap()).collect())
}

fn end_to_end() -> Outcome {
    let t = Instant::now();
    let data = make_splits(SplitSizes { train: 100, val: 20, test: 100 }, 2024).unwrap();
    let cfg = SingleConvConfig { n_filters: 32, kernel: 3, seed: 0, relu: true };
    let conv = |img: &MultiChannelImage| singleconv_features(img, &cfg).unwrap().values;
    let (train, train_y) = feature_table(&data.train, conv);
    let (test, test_y) = feature_table(&data.test, conv);
    let sc = knn_probe(&train, &train_y, &test, &test_y, 20).unwrap().accuracy;
    let secs = t.elapsed().as_secs_f64();
    let pix = |img: &MultiChannelImage| pixel_features(img, PixelStats::MeanStdSkew).values;
    let (ptrain, _) = feature_table(&data.train, pix);
    let (ptest, _) = feature_table(&data.test, pix);
    let px = knn_probe(&ptrain, &train_y, &ptest, &test_y, 20).unwrap().accuracy;
    outcome(
        sc > 1.0 / 8.0 && secs < 300.0,
        format!("single-conv kNN accuracy {sc:.3} (pixel stats {px:.3}, chance {:.3}, bar {:.3}); generate+render+features+probe {secs:.0}s", 1.0 / 24.0, 1.0 / 8.0),
    )
}
