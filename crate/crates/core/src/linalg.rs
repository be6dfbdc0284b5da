//! Small dense/tridiagonal linear algebra kernels.
//!
//! The blocks produced by the partition are tiny (at most N-by-N), so a
//! classic QL iteration with implicit shifts is both adequate and exactly
//! reproducible. Eigenvectors are obtained by accumulating the rotations.

use crate::error::{Error, Result};

/// Eigendecomposition of a symmetric tridiagonal matrix given by its
/// diagonal `d` and subdiagonal `e` (`e.len() == d.len() - 1`).
///
/// Returns eigenvalues in ascending order and, for each, the corresponding
/// orthonormal eigenvector (columns of the accumulated rotation product).
pub fn sym_tridiag_eigen(d: &[f64], e: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = d.len();
    assert_eq!(e.len() + 1, n.max(1));
    if n == 0 {
        return Ok((vec![], vec![]));
    }
    let mut d = d.to_vec();
    // Shifted copy with a trailing zero, as in the classic QL sweep.
    let mut e: Vec<f64> = e.iter().copied().chain(std::iter::once(0.0)).collect();
    // z[i][j]: i-th component of the j-th eigenvector.
    let mut z = vec![vec![0.0; n]; n];
    for (i, row) in z.iter_mut().enumerate() {
        row[i] = 1.0;
    }

    for l in 0..n {
        let mut iter = 0;
        loop {
            // Look for a negligible subdiagonal element to split the matrix.
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 50 {
                return Err(Error::EigenNoConvergence { size: n });
            }
            // Implicit shift from the trailing 2x2.
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for row in z.iter_mut() {
                    f = row[i + 1];
                    row[i + 1] = s * row[i] + c * f;
                    row[i] = c * row[i] - s * f;
                }
            }
            if r == 0.0 && m > l + 1 {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    // Sort ascending, carrying eigenvectors along.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values: Vec<f64> = order.iter().map(|&j| d[j]).collect();
    let vectors: Vec<Vec<f64>> = order
        .iter()
        .map(|&j| (0..n).map(|i| z[i][j]).collect())
        .collect();
    Ok((values, vectors))
}

/// Dense matrix-vector product for row-major square matrices.
pub fn mat_vec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|row| row.iter().zip(x).map(|(r, v)| r * v).sum())
        .collect()
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual(d: &[f64], e: &[f64], lambda: f64, v: &[f64]) -> f64 {
        let n = d.len();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            let mut r = d[i] * v[i] - lambda * v[i];
            if i > 0 {
                r += e[i - 1] * v[i - 1];
            }
            if i + 1 < n {
                r += e[i] * v[i + 1];
            }
            worst = worst.max(r.abs());
        }
        worst
    }

    #[test]
    fn two_by_two_exact() {
        let (vals, vecs) = sym_tridiag_eigen(&[2.0, 2.0], &[-1.0]).unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-14);
        assert!((vals[1] - 3.0).abs() < 1e-14);
        for (l, v) in vals.iter().zip(&vecs) {
            assert!(residual(&[2.0, 2.0], &[-1.0], *l, v) < 1e-14);
        }
    }

    #[test]
    fn random_matrices_have_small_residuals_and_orthonormal_vectors() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for n in 1..=12 {
            for _ in 0..20 {
                let d: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
                let e: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(0.1..2.0)).collect();
                let (vals, vecs) = sym_tridiag_eigen(&d, &e).unwrap();
                let scale = vals.iter().fold(1.0f64, |a, v| a.max(v.abs()));
                for (l, v) in vals.iter().zip(&vecs) {
                    assert!(residual(&d, &e, *l, v) < 1e-12 * scale);
                    let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                    assert!((norm - 1.0).abs() < 1e-12);
                }
                for w in vals.windows(2) {
                    assert!(w[0] <= w[1]);
                }
            }
        }
    }

    #[test]
    fn slope_fit_recovers_line() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 1.5 * v - 3.0).collect();
        assert!((fit_slope(&x, &y) - 1.5).abs() < 1e-12);
    }
}
