use std::collections::HashMap;
use std::path::{Path, PathBuf};

use super::{
    build_profiles, center_table, make_folds, read_table, write_atomic, BenchmarkKind, EmbeddingTable, HarnessError,
    RawValue, Report, RunConfig,
};
use crate::evalmetrics::{cosine_matrix, knn_probe, map_retrieval, read_pairs_csv, recall_at_tail};
use crate::regress::{hest_pipeline, DMatrix, HestData};

/// `item_id,group` rows.
pub fn read_labels_csv(path: &Path) -> Result<HashMap<String, String>, HarnessError> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out = HashMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() < 2 {
            return Err(HarnessError::Data(format!("{}: expected item_id,group", path.display())));
        }
        if out.insert(rec[0].to_string(), rec[1].to_string()).is_some() {
            return Err(HarnessError::Data(format!("{}: duplicate item {:?}", path.display(), &rec[0])));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetTable {
    pub genes: Vec<String>,
    pub rows: HashMap<String, Vec<f64>>,
}

/// `item_id,g1,...,gG` with the header naming the genes.
pub fn read_targets_csv(path: &Path) -> Result<TargetTable, HarnessError> {
    let mut rdr = csv::Reader::from_path(path)?;
    let genes: Vec<String> = rdr.headers()?.iter().skip(1).map(str::to_string).collect();
    if genes.is_empty() {
        return Err(HarnessError::Data(format!("{}: no target columns", path.display())));
    }
    let mut rows = HashMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let vals: Result<Vec<f64>, _> = rec.iter().skip(1).map(str::parse::<f64>).collect();
        let vals = vals.map_err(|e| HarnessError::Data(format!("{}: item {:?}: {e}", path.display(), &rec[0])))?;
        if vals.len() != genes.len() || vals.iter().any(|v| !v.is_finite()) {
            return Err(HarnessError::Data(format!("{}: bad target row for {:?}", path.display(), &rec[0])));
        }
        rows.insert(rec[0].to_string(), vals);
    }
    Ok(TargetTable { genes, rows })
}

fn labels_for(table: &EmbeddingTable, config: &RunConfig) -> Result<HashMap<String, String>, HarnessError> {
    if let Some(p) = &config.inputs.labels {
        return read_labels_csv(p);
    }
    let key = &config.params.label_key;
    Ok((0..table.len())
        .filter_map(|i| table.meta(i, key).map(|g| (table.ids()[i].clone(), g.to_string())))
        .collect())
}

fn require<'a>(p: &'a Option<PathBuf>, what: &str) -> Result<&'a PathBuf, HarnessError> {
    p.as_ref().ok_or_else(|| HarnessError::Config(format!("benchmark needs inputs.{what}")))
}

/// Row sets to evaluate: the configured folds, or one fold holding everything.
fn fold_sets(table: &EmbeddingTable, config: &RunConfig) -> Result<Vec<Vec<usize>>, HarnessError> {
    match &config.params.folds {
        None => Ok(vec![(0..table.len()).collect()]),
        Some(scheme) => {
            let spec = make_folds(table, scheme, config.seed)?;
            Ok((0..scheme.n_folds()).map(|f| spec.members(table, f)).collect())
        }
    }
}

fn run_retrieval(config: &RunConfig) -> Result<Vec<RawValue>, HarnessError> {
    let table = read_table(&config.inputs.table)?;
    let pairs = read_pairs_csv(require(&config.inputs.pairs, "pairs")?)?;
    let p = &config.params;
    let mut raw = Vec::new();
    for (f, rows) in fold_sets(&table, config)?.into_iter().enumerate() {
        let mut sub = table.subset(&rows);
        if let Some(spec) = &p.profile {
            sub = build_profiles(&sub, &spec.group_key, &spec.center, spec.aggregate)?;
        }
        let (s, _) = cosine_matrix(&sub);
        for (source, set) in &pairs {
            let r = recall_at_tail(&s, set, p.q, p.tail, p.recall_mode)?;
            raw.push(RawValue::new("recall", source, f, r.recall));
        }
    }
    Ok(raw)
}

fn run_map(config: &RunConfig) -> Result<Vec<RawValue>, HarnessError> {
    let table = read_table(&config.inputs.table)?;
    let mut raw = Vec::new();
    for (f, rows) in fold_sets(&table, config)?.into_iter().enumerate() {
        let mut sub = table.subset(&rows);
        if let Some(spec) = &config.params.profile {
            sub = if spec.group_key.is_empty() {
                center_table(&sub, &spec.center)?
            } else {
                build_profiles(&sub, &spec.group_key, &spec.center, spec.aggregate)?
            };
        }
        let labels = labels_for(&sub, config)?;
        let rep = map_retrieval(&sub, &labels)?;
        for (g, ap) in &rep.per_group {
            raw.push(RawValue::new("ap", g, f, *ap));
        }
        raw.push(RawValue::new("map", "all", f, rep.map));
    }
    Ok(raw)
}

fn run_regression(config: &RunConfig) -> Result<Vec<RawValue>, HarnessError> {
    let table = read_table(&config.inputs.table)?;
    let targets = read_targets_csv(require(&config.inputs.targets, "targets")?)?;
    let p = &config.params;
    let n = table.len();
    let mut y = DMatrix::zeros(n, targets.genes.len());
    let mut datasets = Vec::with_capacity(n);
    let mut folds = Vec::with_capacity(n);
    let mut missing = Vec::new();
    for i in 0..n {
        let id = &table.ids()[i];
        match targets.rows.get(id) {
            Some(v) => y.row_mut(i).copy_from_slice(v),
            None => missing.push(id.clone()),
        }
        datasets.push(table.meta(i, &p.dataset_key).unwrap_or("all").to_string());
        let fold = table.require_meta(i, &p.fold_key)?;
        folds.push(fold.parse().map_err(|_| HarnessError::Data(format!("item {id:?}: fold {fold:?} is not an integer")))?);
    }
    if !missing.is_empty() {
        return Err(HarnessError::Data(format!("{} items lack targets, e.g. {:?}", missing.len(), missing[0])));
    }
    let data = HestData { x: table.to_matrix(), y, genes: targets.genes, datasets, folds };
    let rep = hest_pipeline(&data, p.m, p.alpha)?;
    let mut raw = Vec::new();
    for e in &rep.entries {
        if let Some(v) = e.pcc {
            raw.push(RawValue::new("pcc", &e.gene, format!("{}/{}", e.dataset, e.fold), v));
        }
    }
    for (ds, folds) in &rep.fold_means {
        for (f, v) in folds {
            raw.push(RawValue::new("pcc_fold_mean", ds, f, *v));
        }
    }
    raw.push(RawValue::new("pcc_global", "all", "all", rep.global_mean));
    Ok(raw)
}

fn run_knn(config: &RunConfig) -> Result<Vec<RawValue>, HarnessError> {
    let train = read_table(&config.inputs.table)?;
    let test = read_table(require(&config.inputs.test_table, "test_table")?)?;
    let label = |t: &EmbeddingTable| -> Result<Vec<String>, HarnessError> {
        let map = labels_for(t, config)?;
        t.ids()
            .iter()
            .map(|id| map.get(id).cloned().ok_or_else(|| HarnessError::Data(format!("item {id:?} has no label"))))
            .collect()
    };
    let (tl, sl) = (label(&train)?, label(&test)?);
    let r = knn_probe(&train, &tl, &test, &sl, config.params.k)?;
    Ok(vec![RawValue::new("knn_accuracy", "top1", 0, r.accuracy)])
}

/// Evaluate one benchmark. Pure in (inputs, config).
pub fn run_benchmark(config: &RunConfig) -> Result<Report, HarnessError> {
    let raw = match config.benchmark {
        BenchmarkKind::Retrieval => run_retrieval(config),
        BenchmarkKind::Map => run_map(config),
        BenchmarkKind::Regression => run_regression(config),
        BenchmarkKind::Knn => run_knn(config),
    }?;
    Ok(Report::new(config.benchmark, config.hash(), config.tags.clone(), raw))
}

/// `raw_values.csv`, `report.json` and the resolved `config.json`.
pub fn write_run_outputs(report: &Report, config: &RunConfig, out: &Path) -> Result<(), HarnessError> {
    let w = |name: &str, bytes: &[u8]| {
        let p = out.join(name);
        write_atomic(&p, bytes).map_err(|e| HarnessError::io(&p, e))
    };
    w("raw_values.csv", &report.raw_csv()?)?;
    let mut rep = serde_json::to_string_pretty(report)?;
    rep.push('\n');
    w("report.json", rep.as_bytes())?;
    let mut cfg = serde_json::to_string_pretty(config)?;
    cfg.push('\n');
    w("config.json", cfg.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{write_table, FoldScheme};
    use crate::rng::rng_from_seed;
    use rand::Rng;

    #[test]
    fn retrieval_toy_shape_and_rerun() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = rng_from_seed(1);
        let n = 5 * 30;
        let rows: Vec<Vec<f32>> = (0..n).map(|_| (0..4).map(|_| rng.random_range(-1.0f32..1.0)).collect()).collect();
        let mut t = EmbeddingTable::from_rows((0..n).map(|i| format!("img{i}")).collect(), rows).unwrap();
        for i in 0..n {
            t.set_meta(i, "gene", format!("G{}", i % 5));
        }
        write_table(&t, &dir.path().join("emb")).unwrap();
        std::fs::write(dir.path().join("pairs.csv"), "id_a,id_b,source\nG0,G1,corum\nG2,G3,corum\nG1,G4,humap\n").unwrap();
        let mut c = RunConfig::new(BenchmarkKind::Retrieval, dir.path().join("emb"));
        c.inputs.pairs = Some(dir.path().join("pairs.csv"));
        c.params.q = 0.2;
        c.params.folds = Some(FoldScheme::per_gene());
        c.params.profile =
            Some(crate::harness::ProfileSpec { group_key: "gene".into(), center: Default::default(), aggregate: Default::default() });
        let r = run_benchmark(&c).unwrap();
        assert_eq!(r.raw.iter().filter(|v| v.family == "recall").count(), 6);
        assert_eq!(r.summaries.len(), 2);
        assert_eq!(r.summary("recall", "corum").unwrap().n, 3);
        write_run_outputs(&r, &c, &dir.path().join("a")).unwrap();
        write_run_outputs(&run_benchmark(&c).unwrap(), &c, &dir.path().join("b")).unwrap();
        assert_eq!(
            std::fs::read(dir.path().join("a/raw_values.csv")).unwrap(),
            std::fs::read(dir.path().join("b/raw_values.csv")).unwrap()
        );
    }

    #[test]
    fn missing_input_is_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let t = EmbeddingTable::from_rows(vec!["a".into()], vec![vec![1.0]]).unwrap();
        write_table(&t, &dir.path().join("e")).unwrap();
        let c = RunConfig::new(BenchmarkKind::Retrieval, dir.path().join("e"));
        let e = run_benchmark(&c).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let c = RunConfig::new(BenchmarkKind::Map, dir.path().join("nope"));
        assert_eq!(run_benchmark(&c).unwrap_err().exit_code(), 3);
    }

    #[test]
    fn targets_reader() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        std::fs::write(&p, "item_id,A,B\nx,1,2.5\ny,-1,0\n").unwrap();
        let t = read_targets_csv(&p).unwrap();
        assert_eq!(t.genes, vec!["A", "B"]);
        assert_eq!(t.rows["x"], vec![1.0, 2.5]);
        std::fs::write(&p, "item_id,A\nx,abc\n").unwrap();
        assert!(read_targets_csv(&p).is_err());
    }
}
