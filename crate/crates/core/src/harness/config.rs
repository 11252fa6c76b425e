use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Aggregate, Center, FoldScheme, HarnessError};
use crate::evalmetrics::{RecallMode, Tail};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchmarkKind {
    Retrieval,
    Map,
    Regression,
    Knn,
}

impl BenchmarkKind {
    pub fn name(self) -> &'static str {
        match self {
            BenchmarkKind::Retrieval => "retrieval",
            BenchmarkKind::Map => "map",
            BenchmarkKind::Regression => "regression",
            BenchmarkKind::Knn => "knn",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileSpec {
    pub group_key: String,
    #[serde(default)]
    pub center: Center,
    #[serde(default)]
    pub aggregate: Aggregate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricParams {
    pub q: f64,
    pub tail: Tail,
    pub recall_mode: RecallMode,
    pub k: usize,
    pub alpha: f64,
    pub m: usize,
    pub folds: Option<FoldScheme>,
    pub profile: Option<ProfileSpec>,
    /// Metadata key holding class/group labels when no labels file is given.
    pub label_key: String,
    pub dataset_key: String,
    pub fold_key: String,
}

impl Default for MetricParams {
    fn default() -> Self {
        Self {
            q: 0.05,
            tail: Tail::Top,
            recall_mode: RecallMode::Global,
            k: 20,
            alpha: 1.0,
            m: 256,
            folds: None,
            profile: None,
            label_key: "group".into(),
            dataset_key: "dataset".into(),
            fold_key: "fold".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Inputs {
    pub table: PathBuf,
    pub test_table: Option<PathBuf>,
    pub pairs: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub targets: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub benchmark: BenchmarkKind,
    #[serde(default)]
    pub params: MetricParams,
    #[serde(default)]
    pub seed: u64,
    pub inputs: Inputs,
    /// Free-form labels copied into the report (`model`, `model_family`, `stage`).
    #[serde(default)]
    pub tags: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn new(benchmark: BenchmarkKind, table: impl Into<PathBuf>) -> Self {
        Self {
            benchmark,
            params: MetricParams::default(),
            seed: 0,
            inputs: Inputs { table: table.into(), ..Inputs::default() },
            tags: BTreeMap::new(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// Hex SHA-256 of the compact JSON form.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_and_hash() {
        let mut c = RunConfig::new(BenchmarkKind::Retrieval, "emb");
        c.params.folds = Some(FoldScheme::per_gene());
        c.tags.insert("model".into(), "singleconv".into());
        let back = RunConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
        assert_eq!(c.hash().len(), 64);
        c.params.q = 0.1;
        assert_ne!(back.hash(), c.hash());
    }

    #[test]
    fn defaults_fill_in() {
        let c = RunConfig::from_json(r#"{"benchmark":"map","inputs":{"table":"x"}}"#).unwrap();
        assert_eq!(c.params.k, 20);
        assert_eq!(c.params.alpha, 1.0);
        assert_eq!(c.params.q, 0.05);
        assert!(matches!(RunConfig::from_json("{}"), Err(HarnessError::Config(_))));
    }
}
