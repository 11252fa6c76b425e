use serde::{Deserialize, Serialize};

use super::{spearman_rho, MetricError, SimilarityMatrix};

/// Upper-triangle pair similarities in row-major `(i, j), i < j` order.
pub fn pair_ranking(s: &SimilarityMatrix) -> Vec<f64> {
    let n = s.n;
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            out.push(s.get(i, j));
        }
    }
    out
}

/// One agglomeration step. Cluster ids follow scipy: leaves are `0..n`,
/// the k-th merge creates cluster `n + k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub distance: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RsaResult {
    pub names: Vec<String>,
    /// Row-major `m x m` Spearman matrix.
    pub matrix: Vec<f64>,
    /// Dendrogram leaf order (indices into `names`).
    pub order: Vec<usize>,
    pub merges: Vec<Merge>,
}

impl RsaResult {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.names.len() + j]
    }
}

struct Cluster {
    id: usize,
    members: Vec<usize>,
    /// Lexicographically smallest member name, for tie-breaking.
    key: String,
}

/// Spearman matrix between pair rankings plus average-linkage clustering on
/// `1 - rho`. Equal distances merge the pair whose smallest names sort first.
pub fn rsa_matrix(rankings: &[Vec<f64>], names: &[String]) -> Result<RsaResult, MetricError> {
    let m = rankings.len();
    if names.len() != m {
        return Err(MetricError::LengthMismatch(m, names.len()));
    }
    if m == 0 {
        return Err(MetricError::TooShort { needed: 1, got: 0 });
    }
    let len = rankings[0].len();
    if let Some(r) = rankings.iter().find(|r| r.len() != len) {
        return Err(MetricError::PairUniverseMismatch(len, r.len()));
    }
    let mut matrix = vec![1.0; m * m];
    for i in 0..m {
        for j in (i + 1)..m {
            let rho = spearman_rho(&rankings[i], &rankings[j])?;
            matrix[i * m + j] = rho;
            matrix[j * m + i] = rho;
        }
    }
    let dist = |a: usize, b: usize| 1.0 - matrix[a * m + b];

    let mut clusters: Vec<Cluster> =
        (0..m).map(|i| Cluster { id: i, members: vec![i], key: names[i].clone() }).collect();
    // Each cluster carries its own dendrogram subtree order.
    let mut leaf_orders: Vec<Vec<usize>> = (0..m).map(|i| vec![i]).collect();
    let mut merges = Vec::with_capacity(m.saturating_sub(1));
    while clusters.len() > 1 {
        let mut best: Option<(f64, String, String, usize, usize)> = None;
        for a in 0..clusters.len() {
            for b in (a + 1)..clusters.len() {
                let (ca, cb) = (&clusters[a], &clusters[b]);
                let mut d = 0.0;
                for &x in &ca.members {
                    for &y in &cb.members {
                        d += dist(x, y);
                    }
                }
                d /= (ca.members.len() * cb.members.len()) as f64;
                let (k1, k2) = if ca.key <= cb.key { (ca.key.clone(), cb.key.clone()) } else { (cb.key.clone(), ca.key.clone()) };
                let better = match &best {
                    None => true,
                    Some((bd, bk1, bk2, _, _)) => d < *bd || (d == *bd && (&k1, &k2) < (bk1, bk2)),
                };
                if better {
                    best = Some((d, k1, k2, a, b));
                }
            }
        }
        let (d, _, _, a, b) = best.expect("at least two clusters");
        // left child is the one with the smaller name key
        let (l, r) = if clusters[a].key <= clusters[b].key { (a, b) } else { (b, a) };
        let cb = clusters.remove(l.max(r));
        let ca = clusters.remove(l.min(r));
        let (left, right) = if l < r { (ca, cb) } else { (cb, ca) };
        let new_id = m + merges.len();
        merges.push(Merge { left: left.id, right: right.id, distance: d, size: left.members.len() + right.members.len() });
        let mut order = std::mem::take(&mut leaf_orders[left.id]);
        order.extend(std::mem::take(&mut leaf_orders[right.id]));
        leaf_orders.push(order);
        let mut members = left.members;
        members.extend(right.members);
        let key = left.key.min(right.key);
        clusters.push(Cluster { id: new_id, members, key });
    }
    let order = std::mem::take(&mut leaf_orders[clusters[0].id]);
    Ok(RsaResult { names: names.to_vec(), matrix, order, merges })
}
