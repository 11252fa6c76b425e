use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{EmbeddingTable, HarnessError};

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Center {
    #[default]
    None,
    /// Subtract, per plate, the mean of the rows whose `control_key` equals
    /// `control_value`.
    NegControlPerPlate { plate_key: String, control_key: String, control_value: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregate {
    #[default]
    Mean,
    Median,
}

/// Apply the centering step on its own.
pub fn center_table(table: &EmbeddingTable, center: &Center) -> Result<EmbeddingTable, HarnessError> {
    let Center::NegControlPerPlate { plate_key, control_key, control_value } = center else {
        return Ok(table.clone());
    };
    let d = table.dim();
    let mut plates: Vec<&str> = Vec::with_capacity(table.len());
    let mut sums: BTreeMap<&str, (Vec<f64>, usize)> = BTreeMap::new();
    for i in 0..table.len() {
        let plate = table.require_meta(i, plate_key)?;
        plates.push(plate);
        let e = sums.entry(plate).or_insert_with(|| (vec![0.0; d], 0));
        if table.meta(i, control_key) == Some(control_value.as_str()) {
            for (a, &v) in e.0.iter_mut().zip(table.row(i)) {
                *a += f64::from(v);
            }
            e.1 += 1;
        }
    }
    let missing: Vec<String> = sums.iter().filter(|(_, (_, c))| *c == 0).map(|(p, _)| p.to_string()).collect();
    if !missing.is_empty() {
        return Err(HarnessError::PlatesWithoutControls(missing));
    }
    let means: BTreeMap<&str, Vec<f64>> =
        sums.into_iter().map(|(p, (s, c))| (p, s.into_iter().map(|v| v / c as f64).collect())).collect();
    let mut data = Vec::with_capacity(table.len() * d);
    for i in 0..table.len() {
        let mu = &means[plates[i]];
        data.extend(table.row(i).iter().zip(mu).map(|(&v, m)| (f64::from(v) - m) as f32));
    }
    let mut out = EmbeddingTable::new(table.ids().to_vec(), d, data)?;
    for i in 0..table.len() {
        for k in table.meta_keys() {
            if let Some(v) = table.meta(i, k) {
                out.set_meta(i, k, v);
            }
        }
    }
    Ok(out)
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// One profile per distinct `group_key` value, in sorted group order. Output
/// metadata carries the group value, the member count, and every key whose
/// value is constant within the group.
pub fn build_profiles(
    table: &EmbeddingTable,
    group_key: &str,
    center: &Center,
    aggregate: Aggregate,
) -> Result<EmbeddingTable, HarnessError> {
    let centered = center_table(table, center)?;
    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for i in 0..centered.len() {
        groups.entry(centered.require_meta(i, group_key)?.to_string()).or_default().push(i);
    }
    let d = centered.dim();
    let mut rows = Vec::with_capacity(groups.len());
    let mut counts = Vec::with_capacity(groups.len());
    for members in groups.values_mut() {
        // sum in id order so the result does not depend on row order
        members.sort_by(|&a, &b| centered.ids()[a].cmp(&centered.ids()[b]));
        let row: Vec<f32> = match aggregate {
            Aggregate::Mean => {
                let mut acc = vec![0.0f64; d];
                for &i in members.iter() {
                    for (a, &v) in acc.iter_mut().zip(centered.row(i)) {
                        *a += f64::from(v);
                    }
                }
                acc.into_iter().map(|v| (v / members.len() as f64) as f32).collect()
            }
            Aggregate::Median => (0..d)
                .map(|c| {
                    let mut col: Vec<f64> = members.iter().map(|&i| f64::from(centered.row(i)[c])).collect();
                    median(&mut col) as f32
                })
                .collect(),
        };
        rows.push(row);
        counts.push(members.len());
    }
    let ids: Vec<String> = groups.keys().cloned().collect();
    let mut out = EmbeddingTable::from_rows(ids.clone(), rows)?;
    for (i, (g, members)) in groups.iter().enumerate() {
        out.set_meta(i, group_key, g.clone());
        out.set_meta(i, "n_members", counts[i].to_string());
        // keep keys whose value is shared by every member
        for k in centered.meta_keys() {
            if k == group_key || k == "n_members" {
                continue;
            }
            let first = centered.meta(members[0], k);
            if first.is_some() && members.iter().all(|&m| centered.meta(m, k) == first) {
                out.set_meta(i, k, first.unwrap_or_default());
            }
        }
    }
    Ok(out)
}
