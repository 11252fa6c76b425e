use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::HarnessError;

pub const FORMAT_VERSION: u32 = 1;

/// Write via a sibling temp file and rename, so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir)?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub n_items: usize,
    pub dim: usize,
    pub dtype: String,
    pub ids: Vec<String>,
    pub meta_keys: Vec<String>,
}

/// N x D float32 embeddings with per-item string metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    ids: Vec<String>,
    dim: usize,
    data: Vec<f32>,
    meta_keys: Vec<String>,
    meta: Vec<BTreeMap<String, String>>,
}

impl EmbeddingTable {
    pub fn new(ids: Vec<String>, dim: usize, data: Vec<f32>) -> Result<Self, HarnessError> {
        if dim == 0 && !ids.is_empty() {
            return Err(HarnessError::ZeroDim);
        }
        if data.len() != ids.len() * dim {
            return Err(HarnessError::PayloadSize { expected: (ids.len() * dim * 4) as u64, got: (data.len() * 4) as u64 });
        }
        let mut seen = HashSet::with_capacity(ids.len());
        for id in &ids {
            if !seen.insert(id.as_str()) {
                return Err(HarnessError::DuplicateId(id.clone()));
            }
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            let row = pos / dim;
            return Err(HarnessError::NonFinite { row, item_id: ids[row].clone(), col: pos % dim });
        }
        let n = ids.len();
        Ok(Self { ids, dim, data, meta_keys: Vec::new(), meta: vec![BTreeMap::new(); n] })
    }

    pub fn from_rows(ids: Vec<String>, rows: Vec<Vec<f32>>) -> Result<Self, HarnessError> {
        let dim = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (row, r) in rows.into_iter().enumerate() {
            if r.len() != dim {
                return Err(HarnessError::RaggedRow { row, len: r.len(), dim });
            }
            data.extend(r);
        }
        if ids.len() * dim != data.len() {
            return Err(HarnessError::CountMismatch { ids: ids.len(), n_items: data.len() / dim.max(1) });
        }
        Self::new(ids, dim, data)
    }

    /// Rows are rounded to f32.
    pub fn from_matrix(ids: Vec<String>, m: &DMatrix<f64>) -> Result<Self, HarnessError> {
        let rows = (0..m.nrows()).map(|r| m.row(r).iter().map(|&v| v as f32).collect()).collect();
        if ids.len() != m.nrows() {
            return Err(HarnessError::CountMismatch { ids: ids.len(), n_items: m.nrows() });
        }
        if m.ncols() == 0 && m.nrows() > 0 {
            return Err(HarnessError::ZeroDim);
        }
        Self::from_rows(ids, rows)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    pub fn meta_keys(&self) -> &[String] {
        &self.meta_keys
    }

    pub fn meta(&self, i: usize, key: &str) -> Option<&str> {
        self.meta[i].get(key).map(String::as_str)
    }

    /// Like [`meta`](Self::meta) but a missing key is an error.
    pub fn require_meta(&self, i: usize, key: &str) -> Result<&str, HarnessError> {
        self.meta(i, key).ok_or_else(|| HarnessError::MissingMetaKey { key: key.to_string(), item: self.ids[i].clone() })
    }

    pub fn set_meta(&mut self, i: usize, key: &str, value: impl Into<String>) {
        if !self.meta_keys.iter().any(|k| k == key) {
            self.meta_keys.push(key.to_string());
        }
        self.meta[i].insert(key.to_string(), value.into());
    }

    pub fn subset(&self, idx: &[usize]) -> EmbeddingTable {
        let mut data = Vec::with_capacity(idx.len() * self.dim);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        EmbeddingTable {
            ids: idx.iter().map(|&i| self.ids[i].clone()).collect(),
            dim: self.dim,
            data,
            meta_keys: self.meta_keys.clone(),
            meta: idx.iter().map(|&i| self.meta[i].clone()).collect(),
        }
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.len(), self.dim, |r, c| f64::from(self.data[r * self.dim + c]))
    }

    pub fn manifest(&self) -> Manifest {
        Manifest {
            version: FORMAT_VERSION,
            n_items: self.len(),
            dim: self.dim,
            dtype: "f32le".into(),
            ids: self.ids.clone(),
            meta_keys: self.meta_keys.clone(),
        }
    }
}

/// `(manifest, payload, metadata)` paths for a table base path. The base may
/// be given with or without the `.manifest.json` suffix.
pub fn table_paths(base: &Path) -> (PathBuf, PathBuf, PathBuf) {
    let s = base.to_string_lossy();
    let stem = s.strip_suffix(".manifest.json").unwrap_or(&s).to_string();
    (
        PathBuf::from(format!("{stem}.manifest.json")),
        PathBuf::from(format!("{stem}.f32")),
        PathBuf::from(format!("{stem}.meta.csv")),
    )
}

pub fn write_table(table: &EmbeddingTable, base: &Path) -> Result<(), HarnessError> {
    let (mp, pp, cp) = table_paths(base);
    let mut json = serde_json::to_string_pretty(&table.manifest())?;
    json.push('\n');
    let mut payload = Vec::with_capacity(table.data.len() * 4);
    for v in &table.data {
        payload.extend_from_slice(&v.to_le_bytes());
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["item_id", "key", "value"])?;
    for (i, id) in table.ids.iter().enumerate() {
        for k in &table.meta_keys {
            if let Some(v) = table.meta[i].get(k) {
                w.write_record([id.as_str(), k.as_str(), v.as_str()])?;
            }
        }
    }
    let meta = w.into_inner().map_err(|e| HarnessError::Meta(e.to_string()))?;
    write_atomic(&pp, &payload).map_err(|e| HarnessError::io(&pp, e))?;
    write_atomic(&cp, &meta).map_err(|e| HarnessError::io(&cp, e))?;
    // manifest last: its presence marks a complete table
    write_atomic(&mp, json.as_bytes()).map_err(|e| HarnessError::io(&mp, e))?;
    Ok(())
}

pub fn read_table(base: &Path) -> Result<EmbeddingTable, HarnessError> {
    let (mp, pp, cp) = table_paths(base);
    let text = fs::read_to_string(&mp).map_err(|e| HarnessError::io(&mp, e))?;
    let m: Manifest = serde_json::from_str(&text).map_err(|e| HarnessError::Manifest(e.to_string()))?;
    if m.version != FORMAT_VERSION {
        return Err(HarnessError::Version(m.version));
    }
    if m.dtype != "f32le" {
        return Err(HarnessError::Dtype(m.dtype));
    }
    if m.ids.len() != m.n_items {
        return Err(HarnessError::CountMismatch { ids: m.ids.len(), n_items: m.n_items });
    }
    if m.dim == 0 {
        return Err(HarnessError::ZeroDim);
    }
    let bytes = fs::read(&pp).map_err(|e| HarnessError::io(&pp, e))?;
    let expected = (m.n_items * m.dim * 4) as u64;
    if bytes.len() as u64 != expected {
        return Err(HarnessError::PayloadSize { expected, got: bytes.len() as u64 });
    }
    let data: Vec<f32> = bytes.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
    let mut table = EmbeddingTable::new(m.ids, m.dim, data)?;
    table.meta_keys = m.meta_keys;
    if cp.exists() {
        let index: std::collections::HashMap<String, usize> =
            table.ids.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        let mut rdr = csv::Reader::from_path(&cp)?;
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() != 3 {
                return Err(HarnessError::Meta(format!("expected item_id,key,value, got {} fields", rec.len())));
            }
            let i = *index.get(&rec[0]).ok_or_else(|| HarnessError::Meta(format!("unknown item {:?}", &rec[0])))?;
            if !table.meta_keys.iter().any(|k| k == &rec[1]) {
                return Err(HarnessError::Meta(format!("key {:?} not declared in manifest", &rec[1])));
            }
            table.meta[i].insert(rec[1].to_string(), rec[2].to_string());
        }
    } else if !table.meta_keys.is_empty() {
        return Err(HarnessError::Meta(format!("{} missing", cp.display())));
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> EmbeddingTable {
        let mut t = EmbeddingTable::from_rows(
            vec!["a".into(), "b".into(), "c".into()],
            vec![vec![1.0, -2.5], vec![0.1, 3.0e-7], vec![f32::MAX, f32::MIN_POSITIVE]],
        )
        .unwrap();
        t.set_meta(0, "plate", "P1");
        t.set_meta(1, "plate", "P2");
        t.set_meta(1, "gene", "TP53, \"quoted\"");
        t
    }

    #[test]
    fn round_trip_and_rewrite() {
        let dir = tempfile::tempdir().unwrap();
        let base = dir.path().join("emb");
        let t = sample();
        write_table(&t, &base).unwrap();
        let back = read_table(&dir.path().join("emb.manifest.json")).unwrap();
        assert_eq!(back, t);
        let bytes = |p: &str| fs::read(dir.path().join(p)).unwrap();
        let before = (bytes("emb.manifest.json"), bytes("emb.f32"), bytes("emb.meta.csv"));
        write_table(&back, &base).unwrap();
        assert_eq!(before, (bytes("emb.manifest.json"), bytes("emb.f32"), bytes("emb.meta.csv")));
        let manifest = String::from_utf8(before.0).unwrap();
        let order: Vec<usize> =
            ["version", "n_items", "dim", "dtype", "ids", "meta_keys"].iter().map(|k| manifest.find(k).unwrap()).collect();
        assert!(order.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn truncated_payload() {
        let dir = tempfile::tempdir().unwrap();
        let base = dir.path().join("t");
        write_table(&sample(), &base).unwrap();
        let p = dir.path().join("t.f32");
        let b = fs::read(&p).unwrap();
        fs::write(&p, &b[..b.len() - 3]).unwrap();
        assert!(matches!(read_table(&base), Err(HarnessError::PayloadSize { expected: 24, got: 21 })));
    }

    #[test]
    fn nan_names_row() {
        let dir = tempfile::tempdir().unwrap();
        let base = dir.path().join("t");
        write_table(&sample(), &base).unwrap();
        let p = dir.path().join("t.f32");
        let mut b = fs::read(&p).unwrap();
        b[12..16].copy_from_slice(&f32::NAN.to_le_bytes());
        fs::write(&p, &b).unwrap();
        match read_table(&base) {
            Err(HarnessError::NonFinite { row, item_id, col }) => {
                assert_eq!((row, item_id.as_str(), col), (1, "b", 1));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn distinct_validation_errors() {
        assert!(matches!(
            EmbeddingTable::from_rows(vec!["x".into(), "x".into()], vec![vec![1.0], vec![2.0]]),
            Err(HarnessError::DuplicateId(_))
        ));
        assert!(matches!(
            EmbeddingTable::from_rows(vec!["x".into(), "y".into()], vec![vec![1.0], vec![2.0, 3.0]]),
            Err(HarnessError::RaggedRow { row: 1, .. })
        ));
        let dir = tempfile::tempdir().unwrap();
        let base = dir.path().join("t");
        write_table(&sample(), &base).unwrap();
        let mp = dir.path().join("t.manifest.json");
        let text = fs::read_to_string(&mp).unwrap();
        fs::write(&mp, text.replace("\"n_items\": 3", "\"n_items\": 4")).unwrap();
        assert!(matches!(read_table(&base), Err(HarnessError::CountMismatch { ids: 3, n_items: 4 })));
        fs::write(&mp, text.replace("f32le", "f16")).unwrap();
        assert!(matches!(read_table(&base), Err(HarnessError::Dtype(_))));
        fs::write(&mp, text.replace("\"version\": 1", "\"version\": 9")).unwrap();
        assert!(matches!(read_table(&base), Err(HarnessError::Version(9))));
    }

    #[test]
    fn subset_keeps_meta() {
        let t = sample();
        let s = t.subset(&[1]);
        assert_eq!(s.ids(), ["b".to_string()]);
        assert_eq!(s.meta(0, "plate"), Some("P2"));
        assert_eq!(s.row(0), t.row(1));
    }
}
