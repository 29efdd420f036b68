//! Single-hidden-layer feed-forward network with logistic units, trained
//! by full-batch gradient descent on mean cross-entropy plus an L2 penalty
//! on the connection weights (biases are not penalized).
//!
//! Parameters are kept in one flat vector laid out as
//! `[w1 (H x d, row-major) | b1 (H) | w2 (H) | b2]`.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::features::Design;
use super::logit::{logistic, softplus};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnnParams {
    pub hidden: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub weight_decay: f64,
}

impl Default for AnnParams {
    fn default() -> Self {
        AnnParams {
            hidden: 8,
            learning_rate: 0.1,
            epochs: 500,
            weight_decay: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnModel {
    pub inputs: usize,
    pub hidden: usize,
    pub params: Vec<f64>,
}

pub fn n_params(inputs: usize, hidden: usize) -> usize {
    hidden * inputs + 2 * hidden + 1
}

impl AnnModel {
    pub fn from_weights(inputs: usize, hidden: usize, params: Vec<f64>) -> Result<Self> {
        if params.len() != n_params(inputs, hidden) {
            return Err(Error::domain(format!(
                "expected {} network parameters, got {}",
                n_params(inputs, hidden),
                params.len()
            )));
        }
        Ok(AnnModel { inputs, hidden, params })
    }

    fn output_logit(&self, x: &[f64], h_buf: &mut [f64]) -> f64 {
        forward(&self.params, self.inputs, self.hidden, x, h_buf)
    }

    pub fn predict(&self, x: &Design) -> Vec<f64> {
        let mut h = vec![0.0; self.hidden];
        (0..x.n_rows)
            .map(|r| logistic(self.output_logit(x.row(r), &mut h)))
            .collect()
    }
}

/// Hidden activations into `h`; returns the output pre-activation.
fn forward(params: &[f64], d: usize, hidden: usize, x: &[f64], h: &mut [f64]) -> f64 {
    let (w1, rest) = params.split_at(hidden * d);
    let (b1, rest) = rest.split_at(hidden);
    let (w2, b2) = rest.split_at(hidden);
    let mut z = b2[0];
    for k in 0..hidden {
        let a = b1[k] + w1[k * d..(k + 1) * d].iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        h[k] = logistic(a);
        z += w2[k] * h[k];
    }
    z
}

/// Penalized mean cross-entropy and its gradient with respect to the flat
/// parameter vector.
pub fn loss_and_gradient(
    params: &[f64],
    x: &Design,
    labels: &[u8],
    hidden: usize,
    weight_decay: f64,
) -> (f64, Vec<f64>) {
    let d = x.n_cols;
    let n = x.n_rows as f64;
    let mut grad = vec![0.0; params.len()];
    let mut h = vec![0.0; hidden];
    let mut loss = 0.0;
    let w2_off = hidden * d + hidden;
    for r in 0..x.n_rows {
        let row = x.row(r);
        let z = forward(params, d, hidden, row, &mut h);
        let y = f64::from(labels[r]);
        loss += softplus(z) - y * z;
        let dz = logistic(z) - y;
        grad[w2_off + hidden] += dz;
        for k in 0..hidden {
            grad[w2_off + k] += dz * h[k];
            let da = dz * params[w2_off + k] * h[k] * (1.0 - h[k]);
            grad[hidden * d + k] += da;
            let g = &mut grad[k * d..(k + 1) * d];
            for (gj, xj) in g.iter_mut().zip(row) {
                *gj += da * xj;
            }
        }
    }
    loss /= n;
    grad.iter_mut().for_each(|g| *g /= n);
    let mut penalty = 0.0;
    for i in (0..hidden * d).chain(w2_off..w2_off + hidden) {
        penalty += params[i] * params[i];
        grad[i] += weight_decay * params[i];
    }
    (loss + 0.5 * weight_decay * penalty, grad)
}

pub fn init_params(inputs: usize, hidden: usize, seed: u64) -> Vec<f64> {
    let mut r = rng::stream(seed, "ann/init");
    (0..n_params(inputs, hidden))
        .map(|_| r.random_range(-0.5..=0.5))
        .collect()
}

pub fn fit_ann(x: &Design, labels: &[u8], params: &AnnParams, seed: u64) -> Result<AnnModel> {
    if x.n_rows == 0 {
        return Err(Error::domain("cannot train a network on zero rows"));
    }
    if params.hidden == 0 || !(params.learning_rate > 0.0) {
        return Err(Error::domain(
            "network needs at least one hidden unit and a positive learning rate",
        ));
    }
    let mut w = init_params(x.n_cols, params.hidden, seed);
    for epoch in 0..params.epochs {
        let (loss, grad) = loss_and_gradient(&w, x, labels, params.hidden, params.weight_decay);
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Divergence(format!(
                "non-finite loss at epoch {epoch}; try a smaller learning rate than {}",
                params.learning_rate
            )));
        }
        w.iter_mut()
            .zip(&grad)
            .for_each(|(a, g)| *a -= params.learning_rate * g);
    }
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergence(format!(
            "weights are not finite; try a smaller learning rate than {}",
            params.learning_rate
        )));
    }
    Ok(AnnModel {
        inputs: x.n_cols,
        hidden: params.hidden,
        params: w,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn design(rows: &[[f64; 2]]) -> Design {
        Design {
            n_rows: rows.len(),
            n_cols: 2,
            names: vec!["a".into(), "b".into()],
            values: rows.iter().flatten().copied().collect(),
        }
    }

    fn six() -> (Design, Vec<u8>) {
        (
            design(&[
                [0.1, -1.2],
                [0.7, 0.3],
                [-0.4, 0.9],
                [1.5, -0.2],
                [-1.1, -0.8],
                [0.2, 1.4],
            ]),
            vec![0, 1, 0, 1, 0, 1],
        )
    }

    #[test]
    fn zero_weights_give_half() {
        let m = AnnModel::from_weights(2, 3, vec![0.0; n_params(2, 3)]).unwrap();
        assert_eq!(m.predict(&six().0), vec![0.5; 6]);
    }

    #[test]
    fn hand_forward_pass() {
        // w1 = [[0.5, -1], [2, 0.25]], b1 = [0.1, -0.3], w2 = [1.5, -0.7], b2 = 0.2
        let p = vec![0.5, -1.0, 2.0, 0.25, 0.1, -0.3, 1.5, -0.7, 0.2];
        let m = AnnModel::from_weights(2, 2, p).unwrap();
        let (x1, x2) = (0.8, -0.6);
        let s = |z: f64| 1.0 / (1.0 + (-z).exp());
        let h1 = s(0.1 + 0.5 * x1 - 1.0 * x2);
        let h2 = s(-0.3 + 2.0 * x1 + 0.25 * x2);
        let expected = s(0.2 + 1.5 * h1 - 0.7 * h2);
        let got = m.predict(&design(&[[x1, x2]]))[0];
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let (x, y) = six();
        for seed in 0..5 {
            let w = init_params(2, 3, seed);
            let (_, g) = loss_and_gradient(&w, &x, &y, 3, 0.01);
            let eps = 1e-5;
            for i in 0..w.len() {
                let mut up = w.clone();
                let mut dn = w.clone();
                up[i] += eps;
                dn[i] -= eps;
                let fd = (loss_and_gradient(&up, &x, &y, 3, 0.01).0 - loss_and_gradient(&dn, &x, &y, 3, 0.01).0)
                    / (2.0 * eps);
                let rel = (fd - g[i]).abs() / g[i].abs().max(fd.abs()).max(1e-8);
                assert!(rel < 1e-6, "param {i}: {fd} vs {}", g[i]);
            }
        }
    }

    #[test]
    fn training_reduces_loss_and_is_seeded() {
        let (x, y) = six();
        let p = AnnParams {
            epochs: 200,
            learning_rate: 0.5,
            ..AnnParams::default()
        };
        let a = fit_ann(&x, &y, &p, 3).unwrap();
        let b = fit_ann(&x, &y, &p, 3).unwrap();
        assert_eq!(a, b);
        let before = loss_and_gradient(&init_params(2, 8, 3), &x, &y, 8, p.weight_decay).0;
        let after = loss_and_gradient(&a.params, &x, &y, 8, p.weight_decay).0;
        assert!(after < before);
    }

    #[test]
    fn huge_learning_rate_diverges() {
        let (x, y) = six();
        let p = AnnParams {
            learning_rate: 1e308,
            epochs: 5,
            ..AnnParams::default()
        };
        assert!(matches!(fit_ann(&x, &y, &p, 1), Err(Error::Divergence(_))));
    }
}
