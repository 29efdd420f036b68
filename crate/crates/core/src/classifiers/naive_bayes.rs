//! Naive Bayes with Gaussian numeric and Laplace-smoothed categorical
//! class-conditional densities.

use serde::{Deserialize, Serialize};

use super::features::{FeatureKind, FeatureSchema, FeatureTable};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NbParams {
    pub variance_floor: f64,
    /// Pseudo-count added to every categorical level.
    pub laplace: f64,
}

impl Default for NbParams {
    fn default() -> Self {
        NbParams {
            variance_floor: 1e-9,
            laplace: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Conditional {
    /// Per-class (mean, variance).
    Gaussian { params: [(f64, f64); 2] },
    /// Per-class log-probability of each level.
    Discrete { log_probs: [Vec<f64>; 2] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbModel {
    pub priors: [f64; 2],
    pub conditionals: Vec<Conditional>,
}

pub fn fit_naive_bayes(
    schema: &FeatureSchema,
    table: &FeatureTable,
    labels: &[u8],
    params: &NbParams,
) -> Result<NbModel> {
    let n = table.n_rows;
    if n == 0 {
        return Err(Error::domain("cannot fit naive Bayes on zero rows"));
    }
    let counts = [
        labels.iter().filter(|&&y| y == 0).count() as f64,
        labels.iter().filter(|&&y| y == 1).count() as f64,
    ];
    let priors = [counts[0] / n as f64, counts[1] / n as f64];
    let conditionals = schema
        .features
        .iter()
        .zip(&table.columns)
        .map(|(f, x)| match &f.kind {
            FeatureKind::Numeric { .. } => {
                let mut params_out = [(0.0, 1.0); 2];
                for (c, out) in params_out.iter_mut().enumerate() {
                    let vals: Vec<f64> = x
                        .iter()
                        .zip(labels)
                        .filter(|(_, &y)| usize::from(y) == c)
                        .map(|(v, _)| *v)
                        .collect();
                    if vals.is_empty() {
                        continue;
                    }
                    let m = vals.iter().sum::<f64>() / vals.len() as f64;
                    let v = vals.iter().map(|a| (a - m).powi(2)).sum::<f64>() / vals.len() as f64;
                    *out = (m, v.max(params.variance_floor));
                }
                Conditional::Gaussian { params: params_out }
            }
            FeatureKind::Categorical { vocabulary, .. } => {
                let k = vocabulary.len();
                let mut lp = [vec![0.0; k], vec![0.0; k]];
                for (c, probs) in lp.iter_mut().enumerate() {
                    for (v, &y) in x.iter().zip(labels) {
                        if usize::from(y) == c {
                            probs[*v as usize] += 1.0;
                        }
                    }
                    let denom = counts[c] + params.laplace * k as f64;
                    for p in probs.iter_mut() {
                        *p = ((*p + params.laplace) / denom).ln();
                    }
                }
                Conditional::Discrete { log_probs: lp }
            }
        })
        .collect();
    Ok(NbModel { priors, conditionals })
}

fn gaussian_log_density(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * ((2.0 * std::f64::consts::PI * var).ln() + (x - mean).powi(2) / var)
}

impl NbModel {
    pub fn predict_row(&self, table: &FeatureTable, r: usize) -> f64 {
        if self.priors[1] == 0.0 {
            return 0.0;
        }
        if self.priors[0] == 0.0 {
            return 1.0;
        }
        let mut score = [self.priors[0].ln(), self.priors[1].ln()];
        for (cond, x) in self.conditionals.iter().zip(&table.columns) {
            let v = x[r];
            for (c, s) in score.iter_mut().enumerate() {
                *s += match cond {
                    Conditional::Gaussian { params } => gaussian_log_density(v, params[c].0, params[c].1),
                    Conditional::Discrete { log_probs } => log_probs[c][v as usize],
                };
            }
        }
        // P(1 | x) = 1 / (1 + exp(s0 - s1))
        super::logit::logistic(score[1] - score[0])
    }

    pub fn predict(&self, table: &FeatureTable) -> Vec<f64> {
        (0..table.n_rows).map(|r| self.predict_row(table, r)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::features::FeatureInfo;

    fn schema() -> FeatureSchema {
        FeatureSchema {
            features: vec![
                FeatureInfo {
                    name: "x".into(),
                    kind: FeatureKind::Numeric { mean: 0.0, sd: 1.0 },
                },
                FeatureInfo {
                    name: "s".into(),
                    kind: FeatureKind::Categorical {
                        vocabulary: vec!["a".into(), "b".into()],
                        observed: vec![true, true],
                        reference: 0,
                    },
                },
            ],
        }
    }

    #[test]
    fn hand_evaluated_posterior() {
        let x = vec![1.0, 2.0, 3.0, 4.0, 6.0];
        let s = vec![0.0, 1.0, 0.0, 1.0, 1.0];
        let y = [0, 0, 0, 1, 1];
        let table = FeatureTable {
            n_rows: 5,
            columns: vec![x, s],
        };
        let m = fit_naive_bayes(&schema(), &table, &y, &NbParams::default()).unwrap();
        let q = FeatureTable {
            n_rows: 1,
            columns: vec![vec![3.5], vec![1.0]],
        };
        // class 0: mean 2, var 2/3; levels a:2 b:1 -> P(b) = 2/5
        // class 1: mean 5, var 1;   levels b:2     -> P(b) = 3/4
        let dens =
            |x: f64, m: f64, v: f64| (-(x - m) * (x - m) / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt();
        let p0 = 0.6 * dens(3.5, 2.0, 2.0 / 3.0) * 0.4;
        let p1 = 0.4 * dens(3.5, 5.0, 1.0) * 0.75;
        let expected = p1 / (p0 + p1);
        assert!((m.predict(&q)[0] - expected).abs() < 1e-12);
    }

    #[test]
    fn uninformative_feature_returns_prior() {
        let table = FeatureTable {
            n_rows: 4,
            columns: vec![vec![1.0, 2.0, 1.0, 2.0], vec![0.0, 1.0, 0.0, 1.0]],
        };
        let m = fit_naive_bayes(&schema(), &table, &[0, 0, 1, 1], &NbParams::default()).unwrap();
        for p in m.predict(&table) {
            assert!((p - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn midpoint_is_even() {
        let schema = FeatureSchema {
            features: vec![schema().features[0].clone()],
        };
        let table = FeatureTable {
            n_rows: 4,
            columns: vec![vec![-1.0, 1.0, 3.0, 5.0]],
        };
        let m = fit_naive_bayes(&schema, &table, &[0, 0, 1, 1], &NbParams::default()).unwrap();
        let q = FeatureTable {
            n_rows: 1,
            columns: vec![vec![2.0]],
        };
        assert!((m.predict(&q)[0] - 0.5).abs() < 1e-12);
    }
}
