//! Similarity-based evaluation: cosine matrices, recall in the similarity
//! tail, replicate-retrieval mAP, Pearson/Spearman, RSA with average-linkage
//! clustering, and kNN probing.

mod correlation;
mod knn;
mod map;
mod retrieval;
mod rsa;

use thiserror::Error;

pub use correlation::{average_ranks, pearson, pearson_r, spearman, spearman_rho, Correlation};
pub use knn::{knn_probe, KnnResult};
pub use map::{average_precision, map_retrieval, MapReport};
pub use retrieval::{read_pairs_csv, recall_at_tail, PairSet, RecallMode, RecallResult, Tail};
pub use rsa::{pair_ranking, rsa_matrix, Merge, RsaResult};

use crate::harness::EmbeddingTable;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} values, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("non-finite value at position {0}")]
    NonFinite(usize),
    #[error("no ground-truth pair resolves against the item list; unresolved ids: {0:?}")]
    EmptyTruth(Vec<String>),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("need at least two non-singleton groups, got {0}")]
    TooFewGroups(usize),
    #[error("rankings cover different pair universes ({0} vs {1} pairs)")]
    PairUniverseMismatch(usize, usize),
    #[error("training set is empty")]
    EmptyTrain,
    #[error("malformed input: {0}")]
    Format(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Dense symmetric `n x n` similarity matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    pub n: usize,
    pub values: Vec<f64>,
    pub item_ids: Vec<String>,
}

impl SimilarityMatrix {
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }
}

/// Cosine similarity matrix plus the indices of all-zero rows, whose
/// similarities (diagonal included) are defined as 0.
pub fn cosine_matrix(table: &EmbeddingTable) -> (SimilarityMatrix, Vec<usize>) {
    let n = table.len();
    let rows: Vec<Vec<f64>> = (0..n).map(|i| table.row(i).iter().map(|&v| f64::from(v)).collect()).collect();
    let norms: Vec<f64> = rows.iter().map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    let zero_rows: Vec<usize> = (0..n).filter(|&i| norms[i] == 0.0).collect();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        if norms[i] == 0.0 {
            continue;
        }
        values[i * n + i] = 1.0;
        for j in (i + 1)..n {
            if norms[j] == 0.0 {
                continue;
            }
            let dot: f64 = rows[i].iter().zip(&rows[j]).map(|(a, b)| a * b).sum();
            // `+ 0.0` folds -0.0 into 0.0 so orthogonal pairs tie exactly
            let s = (dot / (norms[i] * norms[j])).clamp(-1.0, 1.0) + 0.0;
            values[i * n + j] = s;
            values[j * n + i] = s;
        }
    }
    if !zero_rows.is_empty() {
        log::warn!("cosine_matrix: {} all-zero rows get similarity 0", zero_rows.len());
    }
    (SimilarityMatrix { n, values, item_ids: table.ids().to_vec() }, zero_rows)
}
