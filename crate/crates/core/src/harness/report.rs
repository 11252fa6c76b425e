use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{write_atomic, BenchmarkKind, HarnessError};
use crate::regress::Summary;

/// One persisted score. `fold` is a free label (`"0"`, `"ds/2"`, `"all"`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawValue {
    pub family: String,
    pub target: String,
    pub fold: String,
    pub value: f64,
}

impl RawValue {
    pub fn new(family: &str, target: &str, fold: impl ToString, value: f64) -> Self {
        Self { family: family.into(), target: target.into(), fold: fold.to_string(), value }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSummary {
    pub family: String,
    pub target: String,
    pub mean: f64,
    /// Population std across folds.
    pub std: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool_version: String,
    pub config_hash: String,
    pub benchmark: BenchmarkKind,
    pub tags: BTreeMap<String, String>,
    pub raw: Vec<RawValue>,
    pub summaries: Vec<ScoreSummary>,
}

impl Report {
    pub fn new(benchmark: BenchmarkKind, config_hash: String, tags: BTreeMap<String, String>, raw: Vec<RawValue>) -> Self {
        let summaries = summarize(&raw);
        Self { tool_version: env!("CARGO_PKG_VERSION").to_string(), config_hash, benchmark, tags, raw, summaries }
    }

    /// Recompute the summaries from the raw values.
    pub fn recomputed(&self) -> Vec<ScoreSummary> {
        summarize(&self.raw)
    }

    pub fn summary(&self, family: &str, target: &str) -> Option<&ScoreSummary> {
        self.summaries.iter().find(|s| s.family == family && s.target == target)
    }

    /// Short label: the `model` tag, else the first 12 hex digits of the hash.
    pub fn label(&self) -> String {
        self.tags.get("model").cloned().unwrap_or_else(|| self.config_hash.chars().take(12).collect())
    }

    /// `family,target,fold,value`, values in shortest round-trip form.
    pub fn raw_csv(&self) -> Result<Vec<u8>, HarnessError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["family", "target", "fold", "value"])?;
        for r in &self.raw {
            w.write_record([r.family.as_str(), r.target.as_str(), r.fold.as_str(), &r.value.to_string()])?;
        }
        w.into_inner().map_err(|e| HarnessError::Data(e.to_string()))
    }

    pub fn from_json_file(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

fn summarize(raw: &[RawValue]) -> Vec<ScoreSummary> {
    let mut groups: BTreeMap<(&str, &str), Vec<f64>> = BTreeMap::new();
    for r in raw {
        groups.entry((&r.family, &r.target)).or_default().push(r.value);
    }
    groups
        .into_iter()
        .map(|((family, target), v)| {
            let s = Summary::of(&v);
            ScoreSummary { family: family.into(), target: target.into(), mean: s.mean, std: s.std, n: s.n }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    /// `<family>.csv` per metric family plus `summary.csv`; `out` is a directory.
    CsvDir,
    /// `out` is a file.
    JsonFile,
    /// `bars.csv` and `stagewise.csv`; `out` is a directory.
    PlotData,
}

impl ReportFormat {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "csvdir" | "csv" => Some(ReportFormat::CsvDir),
            "jsonfile" | "json" => Some(ReportFormat::JsonFile),
            "plotdata" | "plot" => Some(ReportFormat::PlotData),
            _ => None,
        }
    }
}

pub fn emit_report(report: &Report, format: ReportFormat, out: &Path) -> Result<(), HarnessError> {
    emit_reports(std::slice::from_ref(report), format, out)
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    write_atomic(path, bytes).map_err(|e| HarnessError::io(path, e))
}

fn csv_bytes(header: &[&str], rows: Vec<Vec<String>>) -> Result<Vec<u8>, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.into_inner().map_err(|e| HarnessError::Data(e.to_string()))
}

fn num(v: f64) -> String {
    v.to_string()
}

pub fn emit_reports(reports: &[Report], format: ReportFormat, out: &Path) -> Result<(), HarnessError> {
    match format {
        ReportFormat::JsonFile => {
            let mut text = if reports.len() == 1 {
                serde_json::to_string_pretty(&reports[0])?
            } else {
                serde_json::to_string_pretty(reports)?
            };
            text.push('\n');
            write(out, text.as_bytes())
        }
        ReportFormat::CsvDir => {
            let mut families: BTreeMap<&str, Vec<Vec<String>>> = BTreeMap::new();
            let mut summary = Vec::new();
            for rep in reports {
                let label = rep.label();
                for r in &rep.raw {
                    families
                        .entry(&r.family)
                        .or_default()
                        .push(vec![label.clone(), r.target.clone(), r.fold.clone(), num(r.value)]);
                }
                for s in &rep.summaries {
                    summary.push(vec![label.clone(), s.family.clone(), s.target.clone(), num(s.mean), num(s.std), s.n.to_string()]);
                }
            }
            for (family, rows) in families {
                write(&out.join(format!("{family}.csv")), &csv_bytes(&["run", "target", "fold", "value"], rows)?)?;
            }
            write(&out.join("summary.csv"), &csv_bytes(&["run", "family", "target", "mean", "std", "n"], summary)?)
        }
        ReportFormat::PlotData => {
            let mut bars = Vec::new();
            // (model_family, stage, family, target) -> per-model means
            let mut stages: BTreeMap<(String, StageKey, String, String), Vec<f64>> = BTreeMap::new();
            for rep in reports {
                let label = rep.label();
                for s in &rep.summaries {
                    bars.push(vec![
                        label.clone(),
                        s.family.clone(),
                        s.target.clone(),
                        num(s.mean),
                        num(s.std),
                        num(s.mean - s.std),
                        num(s.mean + s.std),
                        s.n.to_string(),
                    ]);
                    if let Some(stage) = rep.tags.get("stage") {
                        let fam = rep.tags.get("model_family").cloned().unwrap_or_else(|| "all".into());
                        stages
                            .entry((fam, StageKey::new(stage), s.family.clone(), s.target.clone()))
                            .or_default()
                            .push(s.mean);
                    }
                }
            }
            write(
                &out.join("bars.csv"),
                &csv_bytes(&["run", "family", "target", "mean", "std", "err_lo", "err_hi", "n"], bars)?,
            )?;
            let rows = stages
                .into_iter()
                .map(|((mf, stage, family, target), v)| {
                    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
                    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let mean = v.iter().sum::<f64>() / v.len() as f64;
                    vec![mf, stage.1, family, target, num(min), num(max), num(mean), v.len().to_string()]
                })
                .collect();
            write(
                &out.join("stagewise.csv"),
                &csv_bytes(&["model_family", "stage", "family", "target", "min", "max", "mean", "n_models"], rows)?,
            )
        }
    }
}

/// Sorts numeric stage labels numerically, others after them by text.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct StageKey(Option<i64>, String);

impl StageKey {
    fn new(s: &str) -> Self {
        StageKey(s.parse().ok(), s.to_string())
    }
}
