//! Logistic regression by Newton-Raphson with step-halving.

use serde::{Deserialize, Serialize};

use super::features::Design;
use crate::error::{Error, Result};
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogitParams {
    pub max_iter: usize,
}

impl Default for LogitParams {
    fn default() -> Self {
        LogitParams { max_iter: 50 }
    }
}

/// Coefficients on the original (unstandardized) design scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogitModel {
    pub names: Vec<String>,
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub iterations: usize,
    pub log_likelihood: f64,
}

const SEPARATION_BOUND: f64 = 15.0;

pub(crate) fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
pub(crate) fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

impl LogitModel {
    pub fn linear_predictor(&self, x: &Design) -> Vec<f64> {
        (0..x.n_rows)
            .map(|r| self.intercept + x.row(r).iter().zip(&self.coefficients).map(|(a, b)| a * b).sum::<f64>())
            .collect()
    }

    pub fn predict(&self, x: &Design) -> Vec<f64> {
        self.linear_predictor(x).into_iter().map(logistic).collect()
    }
}

fn log_likelihood(x: &[f64], n: usize, p: usize, y: &[u8], beta: &[f64]) -> f64 {
    (0..n)
        .map(|i| {
            let eta: f64 = (0..p).map(|j| x[i * p + j] * beta[j]).sum();
            f64::from(y[i]) * eta - softplus(eta)
        })
        .sum()
}

/// Fit by maximum likelihood. Columns of `x` are centred and scaled
/// internally; the separation check is applied on that scale.
pub fn fit_logit(x: &Design, labels: &[u8], params: &LogitParams) -> Result<LogitModel> {
    let n = x.n_rows;
    if n == 0 {
        return Err(Error::domain("cannot fit a logistic model on zero rows"));
    }
    let aliased = linalg::aliased_columns(&x.values, n, x.n_cols, true);
    if !aliased.is_empty() {
        return Err(Error::RankDeficient {
            columns: aliased.iter().map(|&j| x.names[j].clone()).collect(),
        });
    }
    // internal design: [1, (x_j - m_j) / s_j]
    let p = x.n_cols + 1;
    let mut centre = vec![0.0; x.n_cols];
    let mut scale = vec![1.0; x.n_cols];
    for j in 0..x.n_cols {
        let col: Vec<f64> = (0..n).map(|i| x.values[i * x.n_cols + j]).collect();
        let m = col.iter().sum::<f64>() / n as f64;
        let v = col.iter().map(|a| (a - m).powi(2)).sum::<f64>() / n as f64;
        centre[j] = m;
        scale[j] = if v > 0.0 { v.sqrt() } else { 1.0 };
    }
    let mut z = vec![0.0; n * p];
    for i in 0..n {
        z[i * p] = 1.0;
        for j in 0..x.n_cols {
            z[i * p + j + 1] = (x.values[i * x.n_cols + j] - centre[j]) / scale[j];
        }
    }

    let mut beta = vec![0.0; p];
    let mut ll = log_likelihood(&z, n, p, labels, &beta);
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=params.max_iter {
        iterations = it;
        let mut grad = vec![0.0; p];
        let mut info = vec![0.0; p * p];
        for i in 0..n {
            let row = &z[i * p..(i + 1) * p];
            let eta: f64 = row.iter().zip(&beta).map(|(a, b)| a * b).sum();
            let mu = logistic(eta);
            let w = mu * (1.0 - mu);
            let resid = f64::from(labels[i]) - mu;
            for a in 0..p {
                grad[a] += row[a] * resid;
                let wa = w * row[a];
                for b in 0..=a {
                    info[a * p + b] += wa * row[b];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                info[b * p + a] = info[a * p + b];
            }
        }
        if grad.iter().all(|g| g.abs() < 1e-8) {
            converged = true;
            break;
        }
        let step = match linalg::cholesky(&info, p) {
            Ok(l) => linalg::cholesky_solve(&l, p, &grad),
            Err(k) => {
                // information collapses when fitted probabilities hit 0 or 1
                return Err(separation_or_singular(&beta, x, k));
            }
        };
        let mut t = 1.0;
        let (next, ll_next) = loop {
            let cand: Vec<f64> = beta.iter().zip(&step).map(|(b, s)| b + t * s).collect();
            let ll_cand = log_likelihood(&z, n, p, labels, &cand);
            if ll_cand >= ll - 1e-12 * ll.abs() || t < 1e-10 {
                break (cand, ll_cand);
            }
            t *= 0.5;
        };
        if !ll_next.is_finite() {
            return Err(Error::Divergence("log-likelihood is not finite".into()));
        }
        let increased = ll_next > ll;
        let rel = (ll_next - ll).abs() / (ll.abs() + 1e-300);
        beta = next;
        ll = ll_next;
        if increased {
            if let Some(j) = (1..p)
                .filter(|&j| beta[j].abs() > SEPARATION_BOUND)
                .max_by(|&a, &b| beta[a].abs().total_cmp(&beta[b].abs()))
            {
                return Err(Error::Separation {
                    column: x.names[j - 1].clone(),
                });
            }
        }
        if rel < 1e-10 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence { iterations });
    }
    let coefficients: Vec<f64> = (0..x.n_cols).map(|j| beta[j + 1] / scale[j]).collect();
    let intercept = beta[0] - coefficients.iter().zip(&centre).map(|(b, m)| b * m).sum::<f64>();
    Ok(LogitModel {
        names: x.names.clone(),
        intercept,
        coefficients,
        iterations,
        log_likelihood: ll,
    })
}

fn separation_or_singular(beta: &[f64], x: &Design, pivot: usize) -> Error {
    let worst = (1..beta.len()).max_by(|&a, &b| beta[a].abs().total_cmp(&beta[b].abs()));
    match worst {
        Some(j) if beta[j].abs() > 5.0 => Error::Separation {
            column: x.names[j - 1].clone(),
        },
        _ => Error::Singular {
            columns: vec![if pivot == 0 {
                "(intercept)".to_string()
            } else {
                x.names[pivot - 1].clone()
            }],
        },
    }
}
