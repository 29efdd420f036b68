//! Binary recursive partitioning.
//!
//! One builder serves three learners: exhaustive search with Gini impurity
//! (`rpart`), exhaustive search with entropy (`tree`), and conditional
//! inference (`ctree`), where a permutation test picks the split variable
//! and Gini then picks the split point.
//!
//! Numeric splits send `x <= threshold` left, with the threshold at the
//! midpoint between consecutive distinct values. Categorical splits order
//! the levels present in the node by their class-1 proportion and send a
//! prefix of that order left.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use super::features::{FeatureKind, FeatureSchema, FeatureTable};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeParams {
    /// Nodes with at most this many rows are not split.
    pub min_node_size: usize,
    pub max_depth: usize,
    /// Minimum impurity decrease, relative to the root size, for a split.
    pub cp: f64,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            min_node_size: 20,
            max_depth: 30,
            cp: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CtreeParams {
    pub alpha: f64,
    pub permutations: usize,
}

impl Default for CtreeParams {
    fn default() -> Self {
        CtreeParams {
            alpha: 0.05,
            permutations: 999,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Impurity {
    Gini,
    Entropy,
}

impl Impurity {
    fn of(self, n0: f64, n1: f64) -> f64 {
        let n = n0 + n1;
        if n == 0.0 {
            return 0.0;
        }
        let (p0, p1) = (n0 / n, n1 / n);
        match self {
            Impurity::Gini => 1.0 - p0 * p0 - p1 * p1,
            Impurity::Entropy => {
                let h = |p: f64| if p > 0.0 { -p * p.ln() } else { 0.0 };
                h(p0) + h(p1)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Selection {
    Exhaustive(Impurity),
    Conditional { params: CtreeParams, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Split {
    Leaf,
    Numeric {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Categorical {
        feature: usize,
        left_levels: Vec<u32>,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    /// Fraction of class-1 rows reaching this node during training.
    pub prob: f64,
    pub n: usize,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub nodes: Vec<Node>,
}

impl TreeModel {
    pub fn predict_row(&self, table: &FeatureTable, row: usize) -> f64 {
        let mut i = 0;
        loop {
            let node = &self.nodes[i];
            i = match &node.split {
                Split::Leaf => return node.prob,
                Split::Numeric {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    if table.columns[*feature][row] <= *threshold {
                        *left
                    } else {
                        *right
                    }
                }
                Split::Categorical {
                    feature,
                    left_levels,
                    left,
                    right,
                } => {
                    let level = table.columns[*feature][row] as u32;
                    if left_levels.contains(&level) {
                        *left
                    } else {
                        *right
                    }
                }
            };
        }
    }

    pub fn predict(&self, table: &FeatureTable) -> Vec<f64> {
        (0..table.n_rows).map(|r| self.predict_row(table, r)).collect()
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n.split, Split::Leaf)).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Candidate {
    gain: f64,
    split: Split,
    left_rows: Vec<usize>,
    right_rows: Vec<usize>,
}

struct Builder<'a> {
    schema: &'a FeatureSchema,
    table: &'a FeatureTable,
    labels: &'a [u8],
    params: TreeParams,
    selection: Selection,
    root_n: f64,
    nodes: Vec<Node>,
}

pub fn fit_tree(
    schema: &FeatureSchema,
    table: &FeatureTable,
    labels: &[u8],
    params: &TreeParams,
    selection: Selection,
) -> Result<TreeModel> {
    if table.n_rows == 0 {
        return Err(Error::domain("cannot grow a tree on zero rows"));
    }
    let mut b = Builder {
        schema,
        table,
        labels,
        params: *params,
        selection,
        root_n: table.n_rows as f64,
        nodes: Vec::new(),
    };
    b.grow((0..table.n_rows).collect(), 0, 1);
    Ok(TreeModel { nodes: b.nodes })
}

impl Builder<'_> {
    /// `path` identifies the node (heap numbering) so permutation streams do
    /// not depend on traversal order.
    fn grow(&mut self, rows: Vec<usize>, depth: usize, path: u64) -> usize {
        let n = rows.len();
        let n1 = rows.iter().filter(|&&r| self.labels[r] == 1).count();
        let id = self.nodes.len();
        self.nodes.push(Node {
            prob: n1 as f64 / n as f64,
            n,
            split: Split::Leaf,
        });
        if n <= self.params.min_node_size || depth >= self.params.max_depth || n1 == 0 || n1 == n {
            return id;
        }
        let Some(best) = self.choose(&rows, path) else {
            return id;
        };
        if (n as f64 / self.root_n) * best.gain < self.params.cp || best.gain <= 0.0 {
            return id;
        }
        let left = self.grow(best.left_rows, depth + 1, path.wrapping_mul(2));
        let right = self.grow(best.right_rows, depth + 1, path.wrapping_mul(2).wrapping_add(1));
        self.nodes[id].split = match best.split {
            Split::Numeric { feature, threshold, .. } => Split::Numeric {
                feature,
                threshold,
                left,
                right,
            },
            Split::Categorical {
                feature, left_levels, ..
            } => Split::Categorical {
                feature,
                left_levels,
                left,
                right,
            },
            Split::Leaf => unreachable!(),
        };
        id
    }

    fn choose(&self, rows: &[usize], path: u64) -> Option<Candidate> {
        match self.selection {
            Selection::Exhaustive(imp) => {
                let mut best: Option<Candidate> = None;
                for f in 0..self.schema.features.len() {
                    if let Some(c) = self.best_split(f, rows, imp) {
                        if best.as_ref().is_none_or(|b| c.gain > b.gain + 1e-12) {
                            best = Some(c);
                        }
                    }
                }
                best
            }
            Selection::Conditional { params, seed } => {
                let node_seed = rng::derive_indexed(seed, "ctree/node", path);
                let tests = permutation_tests(
                    self.schema,
                    self.table,
                    self.labels,
                    rows,
                    params.permutations,
                    node_seed,
                );
                let m = tests.iter().flatten().count();
                let (f, t) = tests
                    .iter()
                    .enumerate()
                    .filter_map(|(f, t)| t.map(|t| (f, t)))
                    .min_by(|a, b| a.1.p_value.total_cmp(&b.1.p_value).then(a.0.cmp(&b.0)))?;
                let adjusted = (t.p_value * m as f64).min(1.0);
                if adjusted >= params.alpha {
                    return None;
                }
                self.best_split(f, rows, Impurity::Gini)
            }
        }
    }

    fn best_split(&self, f: usize, rows: &[usize], imp: Impurity) -> Option<Candidate> {
        let x = &self.table.columns[f];
        let n = rows.len() as f64;
        let n1 = rows.iter().filter(|&&r| self.labels[r] == 1).count() as f64;
        let parent = imp.of(n - n1, n1);
        match &self.schema.features[f].kind {
            FeatureKind::Numeric { .. } => {
                let mut sorted = rows.to_vec();
                sorted.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
                let mut best: Option<(f64, f64)> = None;
                let (mut l0, mut l1) = (0.0, 0.0);
                for i in 0..sorted.len() - 1 {
                    if self.labels[sorted[i]] == 1 {
                        l1 += 1.0;
                    } else {
                        l0 += 1.0;
                    }
                    let (a, b) = (x[sorted[i]], x[sorted[i + 1]]);
                    if a == b {
                        continue;
                    }
                    let nl = l0 + l1;
                    let (r0, r1) = (n - n1 - l0, n1 - l1);
                    let gain = parent - (nl / n) * imp.of(l0, l1) - ((n - nl) / n) * imp.of(r0, r1);
                    if best.is_none_or(|(g, _)| gain > g + 1e-12) {
                        best = Some((gain, a + (b - a) / 2.0));
                    }
                }
                let (gain, threshold) = best?;
                let (left_rows, right_rows) = rows.iter().partition(|&&r| x[r] <= threshold);
                Some(Candidate {
                    gain,
                    split: Split::Numeric {
                        feature: f,
                        threshold,
                        left: 0,
                        right: 0,
                    },
                    left_rows,
                    right_rows,
                })
            }
            FeatureKind::Categorical { vocabulary, .. } => {
                let k = vocabulary.len();
                let mut c0 = vec![0.0f64; k];
                let mut c1 = vec![0.0f64; k];
                for &r in rows {
                    let l = x[r] as usize;
                    if self.labels[r] == 1 {
                        c1[l] += 1.0;
                    } else {
                        c0[l] += 1.0;
                    }
                }
                let mut present: Vec<usize> = (0..k).filter(|&l| c0[l] + c1[l] > 0.0).collect();
                if present.len() < 2 {
                    return None;
                }
                present.sort_by(|&a, &b| {
                    let pa = c1[a] / (c0[a] + c1[a]);
                    let pb = c1[b] / (c0[b] + c1[b]);
                    pa.total_cmp(&pb).then(a.cmp(&b))
                });
                let mut best: Option<(f64, usize)> = None;
                let (mut l0, mut l1) = (0.0, 0.0);
                for (i, &lev) in present.iter().enumerate().take(present.len() - 1) {
                    l0 += c0[lev];
                    l1 += c1[lev];
                    let nl = l0 + l1;
                    let gain = parent - (nl / n) * imp.of(l0, l1) - ((n - nl) / n) * imp.of(n - n1 - l0, n1 - l1);
                    if best.is_none_or(|(g, _)| gain > g + 1e-12) {
                        best = Some((gain, i + 1));
                    }
                }
                let (gain, cut) = best?;
                let mut left_levels: Vec<u32> = present[..cut].iter().map(|&l| l as u32).collect();
                left_levels.sort_unstable();
                let (left_rows, right_rows) = rows.iter().partition(|&&r| left_levels.contains(&(x[r] as u32)));
                Some(Candidate {
                    gain,
                    split: Split::Categorical {
                        feature: f,
                        left_levels,
                        left: 0,
                        right: 0,
                    },
                    left_rows,
                    right_rows,
                })
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PermutationTest {
    pub statistic: f64,
    /// Monte-Carlo p-value `(1 + #{T* >= T}) / (B + 1)`, unadjusted.
    pub p_value: f64,
}

fn association(kind: &FeatureKind, x: &[f64], rows: &[usize], labels: &[u8], scratch: &mut [f64]) -> f64 {
    match kind {
        FeatureKind::Numeric { .. } => {
            let (mut s1, mut n1, mut s0, mut n0) = (0.0, 0.0, 0.0, 0.0);
            for (i, &r) in rows.iter().enumerate() {
                if labels[i] == 1 {
                    s1 += x[r];
                    n1 += 1.0;
                } else {
                    s0 += x[r];
                    n0 += 1.0;
                }
            }
            (s1 / n1 - s0 / n0).abs()
        }
        FeatureKind::Categorical { vocabulary, .. } => {
            // chi-square of the level x class table
            let k = vocabulary.len();
            let (c0, c1) = scratch.split_at_mut(k);
            c0.iter_mut().for_each(|v| *v = 0.0);
            c1.iter_mut().for_each(|v| *v = 0.0);
            for (i, &r) in rows.iter().enumerate() {
                let l = x[r] as usize;
                if labels[i] == 1 {
                    c1[l] += 1.0;
                } else {
                    c0[l] += 1.0;
                }
            }
            let n = rows.len() as f64;
            let n1: f64 = c1.iter().sum();
            let n0 = n - n1;
            let mut chi = 0.0;
            for l in 0..k {
                let nl = c0[l] + c1[l];
                if nl == 0.0 {
                    continue;
                }
                let e1 = nl * n1 / n;
                let e0 = nl * n0 / n;
                chi += (c1[l] - e1).powi(2) / e1 + (c0[l] - e0).powi(2) / e0;
            }
            chi
        }
    }
}

fn is_constant(x: &[f64], rows: &[usize]) -> bool {
    let first = x[rows[0]];
    rows.iter().all(|&r| x[r] == first)
}

/// Per-feature permutation tests of label association within `rows`.
/// Features constant within `rows` get `None`. All features share each
/// label permutation.
pub fn permutation_tests(
    schema: &FeatureSchema,
    table: &FeatureTable,
    labels: &[u8],
    rows: &[usize],
    permutations: usize,
    seed: u64,
) -> Vec<Option<PermutationTest>> {
    let node_labels: Vec<u8> = rows.iter().map(|&r| labels[r]).collect();
    let max_levels = schema.features.iter().filter_map(|f| f.n_levels()).max().unwrap_or(0);
    let mut scratch = vec![0.0; 2 * max_levels];
    let active: Vec<usize> = (0..schema.features.len())
        .filter(|&f| !is_constant(&table.columns[f], rows))
        .collect();
    let observed: Vec<f64> = active
        .iter()
        .map(|&f| {
            association(
                &schema.features[f].kind,
                &table.columns[f],
                rows,
                &node_labels,
                &mut scratch,
            )
        })
        .collect();
    let mut exceed = vec![0usize; active.len()];
    let mut perm = node_labels.clone();
    let mut r = rng::Rng::seed_from_u64(seed);
    for _ in 0..permutations {
        perm.shuffle(&mut r);
        for (i, &f) in active.iter().enumerate() {
            let t = association(&schema.features[f].kind, &table.columns[f], rows, &perm, &mut scratch);
            if t >= observed[i] - 1e-12 * observed[i].abs().max(1.0) {
                exceed[i] += 1;
            }
        }
    }
    let mut out = vec![None; schema.features.len()];
    for (i, &f) in active.iter().enumerate() {
        out[f] = Some(PermutationTest {
            statistic: observed[i],
            p_value: (1 + exceed[i]) as f64 / (permutations + 1) as f64,
        });
    }
    out
}
