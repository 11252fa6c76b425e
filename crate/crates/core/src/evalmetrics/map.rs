use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{cosine_matrix, MetricError};
use crate::harness::EmbeddingTable;

/// Average precision of a ranked relevance list.
pub fn average_precision(relevant: &[bool]) -> f64 {
    let mut hits = 0usize;
    let mut acc = 0.0;
    for (rank, &r) in relevant.iter().enumerate() {
        if r {
            hits += 1;
            acc += hits as f64 / (rank + 1) as f64;
        }
    }
    if hits == 0 {
        0.0
    } else {
        acc / hits as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapReport {
    /// Group name -> mean AP over that group's queries.
    pub per_group: BTreeMap<String, f64>,
    pub map: f64,
    pub excluded_groups: Vec<String>,
    /// Items in the table without a label; they are dropped from ranking.
    pub unlabeled: usize,
}

/// Replicate retrieval: every labelled item queries all other labelled items
/// by descending cosine similarity. Ties go to the lower candidate index.
pub fn map_retrieval(table: &EmbeddingTable, labels: &HashMap<String, String>) -> Result<MapReport, MetricError> {
    let keep: Vec<usize> = (0..table.len()).filter(|&i| labels.contains_key(&table.ids()[i])).collect();
    let unlabeled = table.len() - keep.len();
    if unlabeled > 0 {
        log::warn!("map_retrieval: {unlabeled} items have no label and are dropped");
    }
    let mut sizes: BTreeMap<&str, usize> = BTreeMap::new();
    for &i in &keep {
        *sizes.entry(labels[&table.ids()[i]].as_str()).or_default() += 1;
    }
    let excluded_groups: Vec<String> = sizes.iter().filter(|(_, &c)| c < 2).map(|(g, _)| g.to_string()).collect();
    if !excluded_groups.is_empty() {
        log::warn!("map_retrieval: singleton groups excluded as queries: {excluded_groups:?}");
    }
    let n_groups = sizes.len() - excluded_groups.len();
    if n_groups < 2 {
        return Err(MetricError::TooFewGroups(n_groups));
    }

    let sub = table.subset(&keep);
    let (s, _) = cosine_matrix(&sub);
    let group: Vec<&str> = keep.iter().map(|&i| labels[&table.ids()[i]].as_str()).collect();
    let n = keep.len();

    let mut sums: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    let mut order: Vec<usize> = Vec::with_capacity(n);
    let mut rel: Vec<bool> = Vec::with_capacity(n);
    for q in 0..n {
        if sizes[group[q]] < 2 {
            continue;
        }
        order.clear();
        order.extend((0..n).filter(|&j| j != q));
        let row = s.row(q);
        order.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
        rel.clear();
        rel.extend(order.iter().map(|&j| group[j] == group[q]));
        let e = sums.entry(group[q]).or_default();
        e.0 += average_precision(&rel);
        e.1 += 1;
    }
    let per_group: BTreeMap<String, f64> = sums.into_iter().map(|(g, (a, c))| (g.to_string(), a / c as f64)).collect();
    let map = per_group.values().sum::<f64>() / per_group.len() as f64;
    Ok(MapReport { per_group, map, excluded_groups, unlabeled })
}
