use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::MetricError;
use crate::harness::EmbeddingTable;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnResult<L> {
    pub accuracy: f64,
    pub predictions: Vec<L>,
    pub k: usize,
}

fn normalized(t: &EmbeddingTable) -> Vec<Vec<f64>> {
    (0..t.len())
        .map(|i| {
            let r: Vec<f64> = t.row(i).iter().map(|&v| f64::from(v)).collect();
            let n = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            if n == 0.0 {
                r
            } else {
                r.into_iter().map(|v| v / n).collect()
            }
        })
        .collect()
}

/// Cosine-distance kNN top-1 accuracy. Neighbours are ordered by
/// (distance, train index); votes tie-break on smaller mean distance, then
/// on label order.
pub fn knn_probe<L>(
    train: &EmbeddingTable,
    train_labels: &[L],
    test: &EmbeddingTable,
    test_labels: &[L],
    k: usize,
) -> Result<KnnResult<L>, MetricError>
where
    L: Ord + Clone + Send + Sync,
{
    if k == 0 {
        return Err(MetricError::InvalidParameter("k must be at least 1".into()));
    }
    if train.is_empty() {
        return Err(MetricError::EmptyTrain);
    }
    if train_labels.len() != train.len() {
        return Err(MetricError::LengthMismatch(train.len(), train_labels.len()));
    }
    if test_labels.len() != test.len() {
        return Err(MetricError::LengthMismatch(test.len(), test_labels.len()));
    }
    let k_eff = k.min(train.len());
    if k_eff < k {
        log::warn!("knn_probe: k={k} exceeds train size, using {k_eff}");
    }
    let tr = normalized(train);
    let te = normalized(test);
    let predictions: Vec<L> = te
        .par_iter()
        .map(|q| {
            let mut d: Vec<(f64, usize)> = tr
                .iter()
                .enumerate()
                .map(|(j, t)| (1.0 - q.iter().zip(t).map(|(a, b)| a * b).sum::<f64>(), j))
                .collect();
            let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            if k_eff < d.len() {
                d.select_nth_unstable_by(k_eff - 1, cmp);
            }
            let mut votes: BTreeMap<&L, (usize, f64)> = BTreeMap::new();
            for &(dist, j) in &d[..k_eff] {
                let e = votes.entry(&train_labels[j]).or_default();
                e.0 += 1;
                e.1 += dist;
            }
            // BTreeMap iterates in label order, so strict improvement keeps the smallest label.
            let mut best: Option<(&L, usize, f64)> = None;
            for (l, (c, s)) in votes {
                let mean = s / c as f64;
                let better = match best {
                    None => true,
                    Some((_, bc, bm)) => c > bc || (c == bc && mean < bm),
                };
                if better {
                    best = Some((l, c, mean));
                }
            }
            best.expect("k >= 1").0.clone()
        })
        .collect();
    let correct = predictions.iter().zip(test_labels).filter(|(p, t)| p == t).count();
    let accuracy = if test.is_empty() { 0.0 } else { correct as f64 / test.len() as f64 };
    Ok(KnnResult { accuracy, predictions, k: k_eff })
}
