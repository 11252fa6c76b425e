use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{MetricError, SimilarityMatrix};

/// Unordered item-id pairs with a known relationship (e.g. CORUM, HuMAP).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PairSet {
    pub source: String,
    pub pairs: Vec<(String, String)>,
}

impl PairSet {
    pub fn new(source: impl Into<String>, pairs: Vec<(String, String)>) -> Self {
        Self { source: source.into(), pairs }
    }

    /// Map to sorted, de-duplicated `(i, j)` index pairs with `i < j`; self
    /// pairs are dropped and unresolved ids are returned separately.
    pub fn resolve(&self, ids: &[String]) -> (Vec<(usize, usize)>, Vec<String>) {
        let index: HashMap<&str, usize> = ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let mut out = BTreeSet::new();
        let mut missing = BTreeSet::new();
        for (a, b) in &self.pairs {
            match (index.get(a.as_str()), index.get(b.as_str())) {
                (Some(&i), Some(&j)) if i != j => {
                    out.insert((i.min(j), i.max(j)));
                }
                (Some(_), Some(_)) => {}
                (ia, ib) => {
                    if ia.is_none() {
                        missing.insert(a.clone());
                    }
                    if ib.is_none() {
                        missing.insert(b.clone());
                    }
                }
            }
        }
        (out.into_iter().collect(), missing.into_iter().collect())
    }
}

/// `id_a,id_b,source` rows, grouped by source.
pub fn read_pairs_csv(path: &Path) -> Result<BTreeMap<String, PairSet>, MetricError> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out: BTreeMap<String, PairSet> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() < 2 {
            return Err(MetricError::Format("pair rows need id_a,id_b[,source]".into()));
        }
        let source = rec.get(2).unwrap_or("pairs").to_string();
        out.entry(source.clone())
            .or_insert_with(|| PairSet::new(source, Vec::new()))
            .pairs
            .push((rec[0].to_string(), rec[1].to_string()));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tail {
    Top,
    Bottom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecallMode {
    /// Rank all unordered pairs together.
    #[default]
    Global,
    /// Rank each item's row separately; both directions of a truth pair count.
    PerQuery,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallResult {
    pub recall: f64,
    pub hits: usize,
    pub n_truth: usize,
    pub n_selected: usize,
    pub unresolved: Vec<String>,
}

fn tail_size(q: f64, n: usize) -> usize {
    // guard against q * n landing a hair above an integer
    (((q * n as f64) - 1e-9).ceil().max(1.0) as usize).min(n)
}

fn order(tail: Tail, a: (f64, usize), b: (f64, usize)) -> std::cmp::Ordering {
    let by_sim = match tail {
        Tail::Top => b.0.total_cmp(&a.0),
        Tail::Bottom => a.0.total_cmp(&b.0),
    };
    by_sim.then(a.1.cmp(&b.1))
}

/// Fraction of truth pairs among the `ceil(q * #pairs)` pairs of the chosen
/// similarity tail. Ties go to the lower pair index.
pub fn recall_at_tail(
    s: &SimilarityMatrix,
    truth: &PairSet,
    q: f64,
    tail: Tail,
    mode: RecallMode,
) -> Result<RecallResult, MetricError> {
    if !(q > 0.0 && q < 1.0) {
        return Err(MetricError::InvalidParameter(format!("q must lie in (0, 1), got {q}")));
    }
    let n = s.n;
    if n < 2 {
        return Err(MetricError::TooShort { needed: 2, got: n });
    }
    let (pairs, unresolved) = truth.resolve(&s.item_ids);
    if pairs.is_empty() {
        return Err(MetricError::EmptyTruth(unresolved));
    }
    if !unresolved.is_empty() {
        log::warn!("recall_at_tail: {} truth ids not in the item list", unresolved.len());
    }
    let (hits, n_selected, denom) = match mode {
        RecallMode::Global => {
            let mut all: Vec<(f64, usize)> = Vec::with_capacity(n * (n - 1) / 2);
            for i in 0..n {
                for j in (i + 1)..n {
                    all.push((s.get(i, j), all.len()));
                }
            }
            let m = tail_size(q, all.len());
            if m < all.len() {
                all.select_nth_unstable_by(m - 1, |a, b| order(tail, *a, *b));
            }
            let selected: BTreeSet<usize> = all[..m].iter().map(|e| e.1).collect();
            let flat = |i: usize, j: usize| i * (2 * n - i - 1) / 2 + (j - i - 1);
            let hits = pairs.iter().filter(|&&(i, j)| selected.contains(&flat(i, j))).count();
            (hits, m, pairs.len())
        }
        RecallMode::PerQuery => {
            let m = tail_size(q, n - 1);
            let mut selected: Vec<BTreeSet<usize>> = Vec::with_capacity(n);
            for i in 0..n {
                let mut row: Vec<(f64, usize)> = (0..n).filter(|&j| j != i).map(|j| (s.get(i, j), j)).collect();
                if m < row.len() {
                    row.select_nth_unstable_by(m - 1, |a, b| order(tail, *a, *b));
                }
                selected.push(row[..m].iter().map(|e| e.1).collect());
            }
            let hits = pairs
                .iter()
                .map(|&(i, j)| usize::from(selected[i].contains(&j)) + usize::from(selected[j].contains(&i)))
                .sum();
            (hits, m, 2 * pairs.len())
        }
    };
    Ok(RecallResult { recall: hits as f64 / denom as f64, hits, n_truth: pairs.len(), n_selected, unresolved })
}
