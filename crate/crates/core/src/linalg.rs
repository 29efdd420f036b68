//! Small dense linear algebra for Newton-type solvers. Matrices are
//! row-major `Vec<f64>` with an explicit dimension.

/// Cholesky factor `L` (lower, row-major) of a symmetric positive-definite
/// matrix. On failure returns the index of the first pivot that is not
/// positive relative to its diagonal.
pub fn cholesky(a: &[f64], p: usize) -> Result<Vec<f64>, usize> {
    let mut l = vec![0.0; p * p];
    for j in 0..p {
        let mut d = a[j * p + j];
        for k in 0..j {
            d -= l[j * p + k] * l[j * p + k];
        }
        let scale = a[j * p + j].abs().max(f64::MIN_POSITIVE);
        if !(d > 1e-12 * scale) || !d.is_finite() {
            return Err(j);
        }
        let d = d.sqrt();
        l[j * p + j] = d;
        for i in j + 1..p {
            let mut s = a[i * p + j];
            for k in 0..j {
                s -= l[i * p + k] * l[j * p + k];
            }
            l[i * p + j] = s / d;
        }
    }
    Ok(l)
}

pub fn cholesky_solve(l: &[f64], p: usize, b: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; p];
    for i in 0..p {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * p + k] * y[k];
        }
        y[i] = s / l[i * p + i];
    }
    let mut x = vec![0.0; p];
    for i in (0..p).rev() {
        let mut s = y[i];
        for k in i + 1..p {
            s -= l[k * p + i] * x[k];
        }
        x[i] = s / l[i * p + i];
    }
    x
}

pub fn cholesky_inverse(l: &[f64], p: usize) -> Vec<f64> {
    let mut inv = vec![0.0; p * p];
    let mut e = vec![0.0; p];
    for j in 0..p {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[j] = 1.0;
        let col = cholesky_solve(l, p, &e);
        for i in 0..p {
            inv[i * p + j] = col[i];
        }
    }
    inv
}

/// Quadratic form `x' A x`.
pub fn quad_form(a: &[f64], p: usize, x: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..p {
        for j in 0..p {
            s += x[i] * a[i * p + j] * x[j];
        }
    }
    s
}

/// Columns of an `n x p` row-major matrix that are linear combinations of
/// earlier columns (and, when `with_constant`, of the constant vector).
/// Modified Gram-Schmidt with a relative residual tolerance.
pub fn aliased_columns(x: &[f64], n: usize, p: usize, with_constant: bool) -> Vec<usize> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    if with_constant && n > 0 {
        let c = 1.0 / (n as f64).sqrt();
        basis.push(vec![c; n]);
    }
    let mut aliased = Vec::new();
    for j in 0..p {
        let mut v: Vec<f64> = (0..n).map(|i| x[i * p + j]).collect();
        let norm0: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm0 == 0.0 {
            aliased.push(j);
            continue;
        }
        for q in &basis {
            let dot: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(q).for_each(|(a, b)| *a -= dot * b);
        }
        let norm: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm <= 1e-9 * norm0 {
            aliased.push(j);
        } else {
            v.iter_mut().for_each(|a| *a /= norm);
            basis.push(v);
        }
    }
    aliased
}
