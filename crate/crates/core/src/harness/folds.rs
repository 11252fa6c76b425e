use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{EmbeddingTable, HarnessError};
use crate::rng::{derive_seed_str, rng_from_seed};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FoldScheme {
    /// `n_per` items per gene in each fold.
    PerGeneSubsample { gene_key: String, n_per: usize, folds: usize },
    /// `plates_per_lab` plates from each lab in each fold.
    PlateGrouped { plate_key: String, lab_key: String, folds: usize, plates_per_lab: usize },
}

impl FoldScheme {
    pub fn per_gene() -> Self {
        FoldScheme::PerGeneSubsample { gene_key: "gene".into(), n_per: 10, folds: 3 }
    }

    pub fn plate_grouped() -> Self {
        FoldScheme::PlateGrouped { plate_key: "plate".into(), lab_key: "lab".into(), folds: 5, plates_per_lab: 4 }
    }

    pub fn n_folds(&self) -> usize {
        match self {
            FoldScheme::PerGeneSubsample { folds, .. } | FoldScheme::PlateGrouped { folds, .. } => *folds,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldSpec {
    pub scheme: FoldScheme,
    /// Item id -> fold. Items left out of every fold are absent.
    pub assignments: BTreeMap<String, usize>,
    pub warnings: Vec<String>,
}

impl FoldSpec {
    /// Row indices of `table` in fold `f`, in table order.
    pub fn members(&self, table: &EmbeddingTable, f: usize) -> Vec<usize> {
        (0..table.len()).filter(|&i| self.assignments.get(&table.ids()[i]) == Some(&f)).collect()
    }
}

/// Distribute shuffled `units` over `folds`, `per` each. If supply is short
/// every unit is still used, dealt round-robin.
fn deal<T: Clone>(units: &[T], per: usize, folds: usize) -> (Vec<(T, usize)>, bool) {
    if units.len() >= per * folds {
        let out = (0..folds).flat_map(|f| units[f * per..(f + 1) * per].iter().map(move |u| (u.clone(), f))).collect();
        (out, false)
    } else {
        (units.iter().enumerate().map(|(i, u)| (u.clone(), i % folds)).collect(), true)
    }
}

pub fn make_folds(table: &EmbeddingTable, scheme: &FoldScheme, seed: u64) -> Result<FoldSpec, HarnessError> {
    let mut assignments = BTreeMap::new();
    let mut warnings = Vec::new();
    match scheme {
        FoldScheme::PerGeneSubsample { gene_key, n_per, folds } => {
            if *n_per == 0 || *folds == 0 {
                return Err(HarnessError::Config("n_per and folds must be positive".into()));
            }
            let mut genes: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
            for i in 0..table.len() {
                genes.entry(table.require_meta(i, gene_key)?).or_default().push(&table.ids()[i]);
            }
            for (gene, mut items) in genes {
                items.sort_unstable();
                items.shuffle(&mut rng_from_seed(derive_seed_str(seed, gene)));
                let (dealt, short) = deal(&items, *n_per, *folds);
                if short {
                    warnings.push(format!("gene {gene}: {} items for {folds} folds x {n_per}", items.len()));
                }
                assignments.extend(dealt.into_iter().map(|(id, f)| (id.to_string(), f)));
            }
        }
        FoldScheme::PlateGrouped { plate_key, lab_key, folds, plates_per_lab } => {
            if *plates_per_lab == 0 || *folds == 0 {
                return Err(HarnessError::Config("plates_per_lab and folds must be positive".into()));
            }
            let mut labs: BTreeMap<&str, BTreeMap<&str, Vec<&str>>> = BTreeMap::new();
            for i in 0..table.len() {
                let lab = table.require_meta(i, lab_key)?;
                let plate = table.require_meta(i, plate_key)?;
                labs.entry(lab).or_default().entry(plate).or_default().push(&table.ids()[i]);
            }
            for (lab, plates) in labs {
                let mut names: Vec<&str> = plates.keys().copied().collect();
                names.shuffle(&mut rng_from_seed(derive_seed_str(seed, lab)));
                let (dealt, short) = deal(&names, *plates_per_lab, *folds);
                if short {
                    warnings.push(format!("lab {lab}: {} plates for {folds} folds x {plates_per_lab}", names.len()));
                }
                for (plate, f) in dealt {
                    for id in &plates[plate] {
                        assignments.insert(id.to_string(), f);
                    }
                }
            }
        }
    }
    for w in &warnings {
        log::warn!("make_folds: {w}");
    }
    Ok(FoldSpec { scheme: scheme.clone(), assignments, warnings })
}
