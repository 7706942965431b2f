//! Chebyshev collocation on `[0, 1]` with barycentric resampling.

use std::f64::consts::PI;

use nalgebra::DMatrix;

/// Chebyshev extreme points on `[0, 1]`, increasing, endpoints included.
pub fn nodes(n: usize) -> Vec<f64> {
    (0..n).map(|j| 0.5 * (1.0 - (PI * j as f64 / (n - 1) as f64).cos())).collect()
}

/// Chebyshev roots on `[0, 1]`, increasing; all strictly interior.
pub fn interior_nodes(n: usize) -> Vec<f64> {
    (0..n).map(|j| 0.5 * (1.0 - (PI * (2 * j + 1) as f64 / (2 * n) as f64).cos())).collect()
}

fn weights(n: usize) -> Vec<f64> {
    (0..n)
        .map(|j| {
            let s = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == n - 1 {
                0.5 * s
            } else {
                s
            }
        })
        .collect()
}

/// First-derivative matrix on [`nodes`].
pub fn diff_matrix(n: usize) -> DMatrix<f64> {
    let t = nodes(n);
    let w = weights(n);
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i != j {
                let v = (w[j] / w[i]) / (t[i] - t[j]);
                d[(i, j)] = v;
                diag -= v;
            }
        }
        d[(i, i)] = diag;
    }
    d
}

/// Interpolation from [`nodes`]`(n)` to arbitrary targets.
pub fn resample_matrix(n: usize, targets: &[f64]) -> DMatrix<f64> {
    let t = nodes(n);
    let w = weights(n);
    let mut out = DMatrix::zeros(targets.len(), n);
    for (i, &y) in targets.iter().enumerate() {
        if let Some(j) = t.iter().position(|&x| x == y) {
            out[(i, j)] = 1.0;
            continue;
        }
        let terms: Vec<f64> = (0..n).map(|j| w[j] / (y - t[j])).collect();
        let total: f64 = terms.iter().sum();
        for j in 0..n {
            out[(i, j)] = terms[j] / total;
        }
    }
    out
}
