//! Holdout splitting and SMOTE rebalancing of the training partition.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::dataset::{ColumnData, ColumnKind, Dataset, Role};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.8,
            seed: 42,
        }
    }
}

/// Row indices of the train and test partitions, each in ascending order.
/// Unstratified: a uniform random subset of `round(train_fraction * n)` rows
/// goes to training.
pub fn split_indices(n: usize, spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(Error::domain("train_fraction must lie in (0, 1)"));
    }
    if n < 2 {
        return Err(Error::domain(format!("cannot split {n} rows")));
    }
    let n_train = (spec.train_fraction * n as f64).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(spec.seed, "split"));
    let mut train = order[..n_train].to_vec();
    let mut test = order[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn split(data: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    data.labels()?;
    let (train, test) = split_indices(data.n_rows(), spec)?;
    Ok((data.select_rows(&train), data.select_rows(&test)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SmoteSpec {
    pub k: usize,
    /// Synthetic minority rows to add, as a percentage of the minority count.
    pub over_pct: u32,
    /// Majority rows to keep, as a percentage of the synthetic count.
    pub under_pct: u32,
    pub seed: u64,
}

impl Default for SmoteSpec {
    fn default() -> Self {
        SmoteSpec {
            k: 5,
            over_pct: 200,
            under_pct: 200,
            seed: 42,
        }
    }
}

/// Where a synthetic row came from: rows are indices into the input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticOrigin {
    pub seed_row: usize,
    pub neighbor_row: usize,
    pub gap: f64,
}

#[derive(Debug, Clone)]
pub struct SmoteOutcome {
    /// Kept majority rows, then all original minority rows, then synthetic
    /// rows in the order of `origins`.
    pub data: Dataset,
    pub minority_label: u8,
    pub minority_rows: Vec<usize>,
    pub majority_kept: Vec<usize>,
    pub origins: Vec<SyntheticOrigin>,
}

pub fn smote(train: &Dataset, spec: &SmoteSpec) -> Result<Dataset> {
    smote_with_provenance(train, spec).map(|o| o.data)
}

/// Indices (into `points`) of the `k` nearest neighbours of each row, under
/// Euclidean distance on the given standardized coordinates. Ties go to the
/// lower index.
fn nearest_neighbours(points: &[Vec<f64>], k: usize) -> Vec<Vec<usize>> {
    let m = points.len();
    (0..m)
        .map(|i| {
            let mut d: Vec<(f64, usize)> = (0..m)
                .filter(|&j| j != i)
                .map(|j| {
                    let dist: f64 = points[i].iter().zip(&points[j]).map(|(a, b)| (a - b) * (a - b)).sum();
                    (dist, j)
                })
                .collect();
            d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            d.into_iter().take(k).map(|(_, j)| j).collect()
        })
        .collect()
}

pub fn smote_with_provenance(train: &Dataset, spec: &SmoteSpec) -> Result<SmoteOutcome> {
    if spec.k < 1 {
        return Err(Error::domain("SMOTE needs k >= 1"));
    }
    if spec.under_pct == 0 {
        return Err(Error::domain("SMOTE under_pct must be positive"));
    }
    let labels = train.labels()?;
    let features = train.feature_indices();
    for &c in &features {
        if train.column(c).missing_count() > 0 {
            return Err(Error::domain(format!(
                "SMOTE requires complete features; `{}` has missing cells",
                train.spec(c).name
            )));
        }
    }
    let positives = labels.iter().filter(|&&y| y == 1).count();
    let minority_label = u8::from(positives <= labels.len() - positives);
    let minority_rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == minority_label).collect();
    let majority_rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] != minority_label).collect();
    let m = minority_rows.len();
    if m < spec.k + 1 {
        return Err(Error::domain(format!(
            "SMOTE needs at least k + 1 = {} minority rows, found {m}",
            spec.k + 1
        )));
    }

    let numeric: Vec<usize> = features
        .iter()
        .copied()
        .filter(|&c| train.spec(c).kind == ColumnKind::Numeric)
        .collect();
    let raw: Vec<Vec<f64>> = minority_rows
        .iter()
        .map(|&r| numeric.iter().map(|&c| train.numeric(c).unwrap()[r].unwrap()).collect())
        .collect();
    // standardize on the minority subset
    let mut scaled = raw.clone();
    for j in 0..numeric.len() {
        let mean = raw.iter().map(|p| p[j]).sum::<f64>() / m as f64;
        let var = raw.iter().map(|p| (p[j] - mean).powi(2)).sum::<f64>() / (m - 1).max(1) as f64;
        let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
        scaled.iter_mut().for_each(|p| p[j] = (p[j] - mean) / sd);
    }
    let neighbours = nearest_neighbours(&scaled, spec.k);

    let mut r = rng::stream(spec.seed, "smote");
    let per_row = (spec.over_pct / 100) as usize;
    let extra = ((spec.over_pct % 100) as f64 / 100.0 * m as f64).round() as usize;
    let mut seeds: Vec<usize> = (0..m).flat_map(|i| std::iter::repeat_n(i, per_row)).collect();
    if extra > 0 {
        let mut pick: Vec<usize> = (0..m).collect();
        pick.shuffle(&mut r);
        let mut pick = pick[..extra].to_vec();
        pick.sort_unstable();
        seeds.extend(pick);
    }
    let origins: Vec<SyntheticOrigin> = seeds
        .into_iter()
        .map(|i| {
            let nb = neighbours[i][r.random_range(0..spec.k)];
            let mut gap: f64 = r.random();
            while gap == 0.0 {
                gap = r.random();
            }
            SyntheticOrigin {
                seed_row: minority_rows[i],
                neighbor_row: minority_rows[nb],
                gap,
            }
        })
        .collect();

    let n_majority = ((spec.under_pct as f64 / 100.0) * origins.len() as f64).floor() as usize;
    let majority_kept = if n_majority >= majority_rows.len() {
        majority_rows
    } else {
        let mut pool = majority_rows;
        pool.shuffle(&mut rng::stream(spec.seed, "smote/undersample"));
        let mut kept = pool[..n_majority].to_vec();
        kept.sort_unstable();
        kept
    };

    let synthetic = synthesize(train, &origins, minority_label)?;
    let mut kept_rows = majority_kept.clone();
    kept_rows.extend(&minority_rows);
    let data = Dataset::concat(&[&train.select_rows(&kept_rows), &synthetic])?;
    Ok(SmoteOutcome {
        data,
        minority_label,
        minority_rows,
        majority_kept,
        origins,
    })
}

fn synthesize(train: &Dataset, origins: &[SyntheticOrigin], minority_label: u8) -> Result<Dataset> {
    let columns = (0..train.n_cols())
        .map(|c| {
            let spec = train.spec(c);
            match train.column(c) {
                ColumnData::Numeric(v) => ColumnData::Numeric(
                    origins
                        .iter()
                        .map(|o| match spec.role {
                            Role::Feature => {
                                let p = v[o.seed_row].unwrap();
                                let q = v[o.neighbor_row].unwrap();
                                Some(p + o.gap * (q - p))
                            }
                            Role::Label => Some(f64::from(minority_label)),
                            Role::Id => None,
                            _ => v[o.seed_row],
                        })
                        .collect(),
                ),
                ColumnData::Categorical(v) => ColumnData::Categorical(
                    origins
                        .iter()
                        .map(|o| if spec.role == Role::Id { None } else { v[o.seed_row] })
                        .collect(),
                ),
            }
        })
        .collect();
    Dataset::new(train.specs().to_vec(), columns)
}
