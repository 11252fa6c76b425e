use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{class_registry, PointPattern, Split, SynthDataset, SynthError};
use crate::harness::write_atomic;
use crate::textfmt::fmt_sig9;

/// Serialize one pattern: a `class_id,seed,n_points` line followed by one
/// `x,y` row per point, 9 significant digits.
pub fn write_pattern(path: &Path, p: &PointPattern) -> Result<(), SynthError> {
    let mut s = String::with_capacity(24 * p.len() + 32);
    let class = p.class_id.map(|c| c.to_string()).unwrap_or_default();
    let seed = p.seed.map(|c| c.to_string()).unwrap_or_default();
    let _ = writeln!(s, "{class},{seed},{}", p.len());
    for q in &p.points {
        let _ = writeln!(s, "{},{}", fmt_sig9(q[0]), fmt_sig9(q[1]));
    }
    write_atomic(path, s.as_bytes())?;
    Ok(())
}

pub fn read_pattern(path: &Path) -> Result<PointPattern, SynthError> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| SynthError::Format("empty file".into()))?;
    let fields: Vec<&str> = header.split(',').collect();
    if fields.len() != 3 {
        return Err(SynthError::Format(format!("bad header line {header:?}")));
    }
    let opt = |s: &str| -> Result<Option<u64>, SynthError> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse().map(Some).map_err(|_| SynthError::Format(format!("bad header field {s:?}")))
        }
    };
    let class_id = opt(fields[0])?.map(|c| c as u8);
    let seed = opt(fields[1])?;
    let n: usize = fields[2].parse().map_err(|_| SynthError::Format("bad point count".into()))?;
    let mut points = Vec::with_capacity(n);
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let (x, y) = line
            .split_once(',')
            .ok_or_else(|| SynthError::Format(format!("row {i}: expected x,y")))?;
        let parse = |v: &str| v.trim().parse::<f64>().map_err(|_| SynthError::Format(format!("row {i}: bad number {v:?}")));
        points.push([parse(x)?, parse(y)?]);
    }
    if points.len() != n {
        return Err(SynthError::Format(format!("header says {n} points, found {}", points.len())));
    }
    Ok(PointPattern { points, class_id, seed })
}

pub fn write_registry(path: &Path) -> Result<(), SynthError> {
    let json = serde_json::to_string_pretty(&class_registry()).map_err(|e| SynthError::Format(e.to_string()))?;
    write_atomic(path, json.as_bytes())?;
    Ok(())
}

/// `<dir>/{train,val,test}/c<class>_<index>.csv` plus `<dir>/registry.json`.
pub fn write_dataset(dir: &Path, data: &SynthDataset) -> Result<(), SynthError> {
    for split in Split::ALL {
        write_split(dir, split, data.split(split))?;
    }
    write_registry(&dir.join("registry.json"))
}

pub(crate) fn sample_file_name(class_id: Option<u8>, index: usize) -> String {
    format!("c{:02}_{index:05}.csv", class_id.unwrap_or(0))
}

pub(crate) fn write_split(dir: &Path, split: Split, patterns: &[PointPattern]) -> Result<(), SynthError> {
    let sub = dir.join(split.name());
    fs::create_dir_all(&sub)?;
    let mut index = 0usize;
    let mut last_class = None;
    for p in patterns {
        if p.class_id != last_class {
            index = 0;
            last_class = p.class_id;
        }
        write_pattern(&sub.join(sample_file_name(p.class_id, index)), p)?;
        index += 1;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointsynth::{generate_class, make_splits, SplitSizes};

    #[test]
    fn pattern_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = generate_class(3, 99).unwrap();
        let path = dir.path().join("p.csv");
        write_pattern(&path, &p).unwrap();
        let q = read_pattern(&path).unwrap();
        assert_eq!(q.class_id, Some(3));
        assert_eq!(q.seed, Some(99));
        assert_eq!(q.len(), p.len());
        for (a, b) in p.points.iter().zip(&q.points) {
            assert!((a[0] - b[0]).abs() < 1e-9 && (a[1] - b[1]).abs() < 1e-9);
        }
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with(&format!("3,99,{}\n", p.len())));
    }

    #[test]
    fn dataset_layout() {
        let dir = tempfile::tempdir().unwrap();
        let data = make_splits(SplitSizes { train: 2, val: 1, test: 1 }, 5).unwrap();
        write_dataset(dir.path(), &data).unwrap();
        assert!(dir.path().join("train/c00_00000.csv").exists());
        assert!(dir.path().join("train/c23_00001.csv").exists());
        assert!(dir.path().join("val/c12_00000.csv").exists());
        let reg: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("registry.json")).unwrap()).unwrap();
        assert_eq!(reg.as_array().unwrap().len(), 24);
    }
}
