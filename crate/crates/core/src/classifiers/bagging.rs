//! Bootstrap aggregation of CART trees.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::features::{FeatureSchema, FeatureTable};
use super::tree::{fit_tree, Impurity, Selection, TreeModel, TreeParams};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BagParams {
    pub members: usize,
    /// When false every member sees the full training set unchanged.
    pub bootstrap: bool,
}

impl Default for BagParams {
    fn default() -> Self {
        BagParams {
            members: 50,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BagModel {
    pub members: Vec<TreeModel>,
}

/// The with-replacement resamples used for each ensemble member.
pub fn bootstrap_samples(n: usize, members: usize, seed: u64) -> Vec<Vec<usize>> {
    (0..members)
        .map(|m| {
            let mut r = rng::indexed_stream(seed, "bag/bootstrap", m as u64);
            (0..n).map(|_| r.random_range(0..n)).collect()
        })
        .collect()
}

pub fn fit_bagging(
    schema: &FeatureSchema,
    table: &FeatureTable,
    labels: &[u8],
    tree: &TreeParams,
    params: &BagParams,
    seed: u64,
) -> Result<BagModel> {
    if params.members == 0 {
        return Err(Error::domain("bagging needs at least one member"));
    }
    let samples = if params.bootstrap {
        bootstrap_samples(table.n_rows, params.members, seed)
    } else {
        vec![(0..table.n_rows).collect(); params.members]
    };
    let members = samples
        .par_iter()
        .map(|rows| {
            let t = table.select_rows(rows);
            let y: Vec<u8> = rows.iter().map(|&r| labels[r]).collect();
            fit_tree(schema, &t, &y, tree, Selection::Exhaustive(Impurity::Gini))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BagModel { members })
}

impl BagModel {
    pub fn predict(&self, table: &FeatureTable) -> Vec<f64> {
        let m = self.members.len() as f64;
        let mut out = vec![0.0; table.n_rows];
        for tree in &self.members {
            for (o, p) in out.iter_mut().zip(tree.predict(table)) {
                *o += p;
            }
        }
        out.iter_mut().for_each(|o| *o /= m);
        out
    }
}
