// SPDX-License-Identifier: Apache-2.0

//! Dense symmetric eigendecomposition for the Rayleigh–Ritz step of the
//! Lanczos solver.

use nalgebra::DMatrix;

/// Eigen-decomposition of a symmetric `n × n` row-major matrix.
///
/// Returns eigenvalues in descending order and the matching eigenvectors as
/// the columns of a row-major `n × n` matrix.
pub fn symmetric_eigen(a: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(a.len(), n * n);
    if n == 0 {
        return (vec![], vec![]);
    }
    let eig = DMatrix::from_row_slice(n, n, a).symmetric_eigen();
    let d = &eig.eigenvalues;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| d[y].total_cmp(&d[x]));
    let values = order.iter().map(|&k| d[k]).collect();
    let mut vectors = vec![0.0; n * n];
    for (col, &k) in order.iter().enumerate() {
        for row in 0..n {
            vectors[row * n + col] = eig.eigenvectors[(row, k)];
        }
    }
    (values, vectors)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(a: &[f64], n: usize) {
        let (vals, vecs) = symmetric_eigen(a, n);
        assert!(vals.windows(2).all(|w| w[0] >= w[1]));
        for k in 0..n {
            for i in 0..n {
                let av: f64 = (0..n).map(|j| a[i * n + j] * vecs[j * n + k]).sum();
                assert!((av - vals[k] * vecs[i * n + k]).abs() < 1e-10, "residual");
            }
            for k2 in 0..n {
                let d: f64 = (0..n).map(|i| vecs[i * n + k] * vecs[i * n + k2]).sum();
                let want = if k == k2 { 1.0 } else { 0.0 };
                assert!((d - want).abs() < 1e-10, "orthonormality");
            }
        }
    }

    #[test]
    fn diagonal_and_small() {
        let (vals, _) = symmetric_eigen(&[3.0, 0.0, 0.0, -1.0], 2);
        assert_eq!(vals, vec![3.0, -1.0]);
        let (vals, _) = symmetric_eigen(&[2.0, 1.0, 1.0, 2.0], 2);
        assert!((vals[0] - 3.0).abs() < 1e-14 && (vals[1] - 1.0).abs() < 1e-14);
        let (vals, vecs) = symmetric_eigen(&[5.0], 1);
        assert_eq!((vals, vecs), (vec![5.0], vec![1.0]));
    }

    #[test]
    fn pseudo_random_matrices() {
        for n in [3, 7, 20, 41] {
            let mut a = vec![0.0; n * n];
            let mut s = n as u64;
            for i in 0..n {
                for j in i..n {
                    s = crate::seed::splitmix64(s);
                    let x = (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
                    a[i * n + j] = x;
                    a[j * n + i] = x;
                }
            }
            check(&a, n);
        }
    }

    #[test]
    fn repeated_eigenvalues() {
        let n = 6;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = 1.0;
            }
        }
        check(&a, n);
        let (vals, _) = symmetric_eigen(&a, n);
        assert!((vals[0] - 6.0).abs() < 1e-12);
        assert!(vals[1..].iter().all(|v| v.abs() < 1e-12));
    }
}
