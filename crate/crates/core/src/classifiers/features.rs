//! Feature schema recorded at training time and the encodings derived from it.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::{ColumnData, Dataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureKind {
    Numeric {
        mean: f64,
        sd: f64,
    },
    Categorical {
        vocabulary: Vec<String>,
        /// Levels seen in the training rows.
        observed: Vec<bool>,
        reference: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureInfo {
    pub name: String,
    #[serde(flatten)]
    pub kind: FeatureKind,
}

impl FeatureInfo {
    pub fn n_levels(&self) -> Option<usize> {
        match &self.kind {
            FeatureKind::Categorical { vocabulary, .. } => Some(vocabulary.len()),
            FeatureKind::Numeric { .. } => None,
        }
    }
}

/// The feature columns a model was trained on, in training order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub features: Vec<FeatureInfo>,
}

/// Raw feature values: numeric cells as-is, categorical cells as their
/// training-vocabulary code. Column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub n_rows: usize,
    pub columns: Vec<Vec<f64>>,
}

impl FeatureTable {
    pub fn select_rows(&self, rows: &[usize]) -> FeatureTable {
        FeatureTable {
            n_rows: rows.len(),
            columns: self
                .columns
                .iter()
                .map(|c| rows.iter().map(|&r| c[r]).collect())
                .collect(),
        }
    }
}

/// Dense row-major matrix with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub n_rows: usize,
    pub n_cols: usize,
    pub names: Vec<String>,
    pub values: Vec<f64>,
}

impl Design {
    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.n_cols..(r + 1) * self.n_cols]
    }
}

impl FeatureSchema {
    /// Record the feature columns of a complete training set. The reference
    /// level of each categorical feature is taken from `references` when
    /// given, otherwise it is the most frequent training level (ties go to
    /// the earlier vocabulary entry).
    pub fn from_training(data: &Dataset, references: &BTreeMap<String, String>) -> Result<Self> {
        let mut features = Vec::new();
        for c in data.feature_indices() {
            let spec = data.spec(c);
            let kind = match data.column(c) {
                ColumnData::Numeric(v) => {
                    let values: Vec<f64> = v.iter().flatten().copied().collect();
                    if values.len() != v.len() {
                        return Err(Error::domain(format!("feature `{}` has missing cells", spec.name)));
                    }
                    let n = values.len().max(1) as f64;
                    let mean = values.iter().sum::<f64>() / n;
                    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
                    FeatureKind::Numeric {
                        mean,
                        sd: if var > 0.0 { var.sqrt() } else { 1.0 },
                    }
                }
                ColumnData::Categorical(v) => {
                    let mut counts = vec![0usize; spec.vocabulary.len()];
                    for cell in v {
                        let code =
                            cell.ok_or_else(|| Error::domain(format!("feature `{}` has missing cells", spec.name)))?;
                        counts[code as usize] += 1;
                    }
                    let reference = match references.get(&spec.name) {
                        Some(level) => spec.code_of(level).ok_or_else(|| {
                            Error::domain(format!(
                                "reference level `{level}` is not in the vocabulary of `{}`",
                                spec.name
                            ))
                        })?,
                        None => most_frequent(&counts),
                    };
                    FeatureKind::Categorical {
                        vocabulary: spec.vocabulary.clone(),
                        observed: counts.iter().map(|&c| c > 0).collect(),
                        reference,
                    }
                }
            };
            features.push(FeatureInfo {
                name: spec.name.clone(),
                kind,
            });
        }
        Ok(FeatureSchema { features })
    }

    pub fn names(&self) -> Vec<&str> {
        self.features.iter().map(|f| f.name.as_str()).collect()
    }

    /// Extract this schema's features from `data` by column name. Categorical
    /// levels not seen in training are replaced by the reference level with a
    /// warning; the number of such replacements is returned alongside.
    pub fn table_with_report(&self, data: &Dataset) -> Result<(FeatureTable, usize)> {
        let mut columns = Vec::with_capacity(self.features.len());
        let mut unseen_total = 0;
        for f in &self.features {
            let c = data
                .column_index(&f.name)
                .ok_or_else(|| Error::domain(format!("prediction data lacks training feature `{}`", f.name)))?;
            let missing = |r: usize| Error::domain(format!("feature `{}` missing at row {}", f.name, r + 1));
            let values = match (&f.kind, data.column(c)) {
                (FeatureKind::Numeric { .. }, ColumnData::Numeric(v)) => v
                    .iter()
                    .enumerate()
                    .map(|(r, x)| x.ok_or_else(|| missing(r)))
                    .collect::<Result<Vec<f64>>>()?,
                (
                    FeatureKind::Categorical {
                        vocabulary,
                        observed,
                        reference,
                    },
                    ColumnData::Categorical(v),
                ) => {
                    let vocab = &data.spec(c).vocabulary;
                    let mut unseen = 0usize;
                    let out = v
                        .iter()
                        .enumerate()
                        .map(|(r, code)| {
                            let level = &vocab[code.ok_or_else(|| missing(r))? as usize];
                            match vocabulary.iter().position(|l| l == level) {
                                Some(k) if observed[k] => Ok(k as f64),
                                _ => {
                                    unseen += 1;
                                    Ok(f64::from(*reference))
                                }
                            }
                        })
                        .collect::<Result<Vec<f64>>>()?;
                    if unseen > 0 {
                        log::warn!(
                            "feature `{}`: {unseen} rows carry levels unseen in training; mapped to reference `{}`",
                            f.name,
                            vocabulary[*reference as usize]
                        );
                    }
                    unseen_total += unseen;
                    out
                }
                _ => {
                    return Err(Error::domain(format!(
                        "feature `{}` changed kind between training and prediction",
                        f.name
                    )))
                }
            };
            columns.push(values);
        }
        Ok((
            FeatureTable {
                n_rows: data.n_rows(),
                columns,
            },
            unseen_total,
        ))
    }

    pub fn table(&self, data: &Dataset) -> Result<FeatureTable> {
        self.table_with_report(data).map(|(t, _)| t)
    }

    /// Dummy-coded design: numeric features (optionally standardized with the
    /// training mean and sd), then one indicator per observed non-reference
    /// level of each categorical feature.
    pub fn design(&self, table: &FeatureTable, standardize: bool) -> Design {
        let mut names = Vec::new();
        for f in &self.features {
            match &f.kind {
                FeatureKind::Numeric { .. } => names.push(f.name.clone()),
                FeatureKind::Categorical {
                    vocabulary,
                    observed,
                    reference,
                } => {
                    for (k, level) in vocabulary.iter().enumerate() {
                        if observed[k] && k as u32 != *reference {
                            names.push(format!("{}={}", f.name, level));
                        }
                    }
                }
            }
        }
        let n_cols = names.len();
        let mut values = vec![0.0; table.n_rows * n_cols];
        let mut col = 0;
        for (f, data) in self.features.iter().zip(&table.columns) {
            match &f.kind {
                FeatureKind::Numeric { mean, sd } => {
                    for (r, &x) in data.iter().enumerate() {
                        values[r * n_cols + col] = if standardize { (x - mean) / sd } else { x };
                    }
                    col += 1;
                }
                FeatureKind::Categorical {
                    vocabulary,
                    observed,
                    reference,
                } => {
                    for k in 0..vocabulary.len() {
                        if observed[k] && k as u32 != *reference {
                            for (r, &x) in data.iter().enumerate() {
                                if x as usize == k {
                                    values[r * n_cols + col] = 1.0;
                                }
                            }
                            col += 1;
                        }
                    }
                }
            }
        }
        Design {
            n_rows: table.n_rows,
            n_cols,
            names,
            values,
        }
    }
}

pub(crate) fn most_frequent(counts: &[usize]) -> u32 {
    let mut best = 0;
    for (k, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = k;
        }
    }
    best as u32
}
