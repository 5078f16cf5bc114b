//! Classical multidimensional scaling baseline.
//!
//! The reference method the embedding is benchmarked against: fill the gaps
//! of the matrix by global-median imputation, double-center it, and read
//! coordinates off the top eigenpairs. Exact on complete Euclidean input,
//! brittle under sparsity and metric violations, which is precisely the
//! contrast the benchmarks measure.

use ndarray::Array2;

use crate::engine::Configuration;
use crate::error::{Result, TopolowError};
use crate::matrix::{DissimilarityMatrix, ObservationCell};
use crate::metrics;

/// Jacobi sweeps stop when the off-diagonal Frobenius norm drops below this
/// fraction of the input norm.
const JACOBI_TOLERANCE: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Completes a sparse, possibly censored matrix into a dense symmetric one.
///
/// Censored cells are replaced by their thresholds, missing off-diagonal
/// cells by the global median of the observed exact values; the result is
/// symmetrized by averaging and gets a zero diagonal. This is the lossy
/// preprocessing classical MDS needs and the embedding engine avoids.
pub fn median_impute(d: &DissimilarityMatrix) -> Result<Array2<f64>> {
    let median = d.median_exact().ok_or_else(|| {
        TopolowError::Invalid("median imputation needs at least one exact cell".into())
    })?;
    let m = d.len();
    let mut dense = Array2::zeros((m, m));
    for (i, j, cell) in d.off_diagonal() {
        dense[(i, j)] = match cell {
            ObservationCell::Missing => median,
            ObservationCell::Exact(v) => *v,
            ObservationCell::LeftCensored(c) | ObservationCell::RightCensored(c) => *c,
        };
    }
    Ok(metrics::symmetrize(&dense))
}

/// Eigenvalues in descending order with matching eigenvector columns.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Column `k` is the unit eigenvector for `eigenvalues[k]`.
    pub eigenvectors: Array2<f64>,
}

fn frobenius(a: &Array2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn off_diagonal_norm(a: &Array2<f64>) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for p in 0..n {
        for q in (p + 1)..n {
            s += 2.0 * a[(p, q)] * a[(p, q)];
        }
    }
    s.sqrt()
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Each sweep zeroes every off-diagonal entry once; the rotations accumulate
/// into the eigenvector matrix. Convergence is declared when the remaining
/// off-diagonal mass falls below `1e-12` times the input norm, which a
/// symmetric matrix reaches in a handful of sweeps thanks to the method's
/// quadratic tail.
pub fn symmetric_eigen(b: &Array2<f64>) -> Result<EigenDecomposition> {
    let n = b.nrows();
    if b.ncols() != n || n == 0 {
        return Err(TopolowError::Invalid(format!(
            "eigendecomposition needs a square non-empty matrix, got {}x{}",
            b.nrows(),
            b.ncols()
        )));
    }
    let max_abs = b.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    for i in 0..n {
        for j in (i + 1)..n {
            if (b[(i, j)] - b[(j, i)]).abs() > 1e-10 * max_abs.max(1.0) {
                return Err(TopolowError::Invalid(format!(
                    "matrix is not symmetric at ({i}, {j}): {} vs {}",
                    b[(i, j)],
                    b[(j, i)]
                )));
            }
        }
    }

    let norm = frobenius(b);
    let mut a = Array2::zeros((n, n));
    for i in 0..n {
        a[(i, i)] = b[(i, i)];
        for j in (i + 1)..n {
            let v = 0.5 * (b[(i, j)] + b[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    let mut v: Array2<f64> = Array2::eye(n);

    if norm > 0.0 {
        let target = JACOBI_TOLERANCE * norm;
        let mut converged = false;
        for _sweep in 0..JACOBI_MAX_SWEEPS {
            if off_diagonal_norm(&a) <= target {
                converged = true;
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    if apq == 0.0 {
                        continue;
                    }
                    let h = a[(q, q)] - a[(p, p)];
                    // tan of the rotation angle; the small-angle branch
                    // avoids overflow in theta^2 when |apq| << |h|.
                    let t = if apq.abs() < h.abs() * 1e-36 {
                        apq / h
                    } else {
                        let theta = 0.5 * h / apq;
                        let t = 1.0 / (theta.abs() + (1.0 + theta * theta).sqrt());
                        if theta < 0.0 {
                            -t
                        } else {
                            t
                        }
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    let tau = s / (1.0 + c);
                    let app = a[(p, p)];
                    let aqq = a[(q, q)];
                    a[(p, p)] = app - t * apq;
                    a[(q, q)] = aqq + t * apq;
                    a[(p, q)] = 0.0;
                    a[(q, p)] = 0.0;
                    for i in 0..n {
                        if i != p && i != q {
                            let aip = a[(i, p)];
                            let aiq = a[(i, q)];
                            a[(i, p)] = aip - s * (aiq + tau * aip);
                            a[(p, i)] = a[(i, p)];
                            a[(i, q)] = aiq + s * (aip - tau * aiq);
                            a[(q, i)] = a[(i, q)];
                        }
                    }
                    for i in 0..n {
                        let vip = v[(i, p)];
                        let viq = v[(i, q)];
                        v[(i, p)] = vip - s * (viq + tau * vip);
                        v[(i, q)] = viq + s * (vip - tau * viq);
                    }
                }
            }
        }
        if !converged && off_diagonal_norm(&a) > target {
            return Err(TopolowError::Numeric(format!(
                "Jacobi eigensolver failed to converge in {JACOBI_MAX_SWEEPS} sweeps"
            )));
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].partial_cmp(&a[(i, i)]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[(i, i)]).collect();
    let mut eigenvectors = Array2::zeros((n, n));
    for (new_col, &old_col) in order.iter().enumerate() {
        for i in 0..n {
            eigenvectors[(i, new_col)] = v[(i, old_col)];
        }
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Classical (Torgerson) MDS of a complete dissimilarity matrix.
///
/// Coordinates are the top eigenvectors of the double-centered Gram matrix,
/// scaled by the square roots of their eigenvalues. Only eigenvalues above
/// `1e-9` of the spectral radius count as positive; the requested dimension
/// is clamped to their number. Eigenvector signs are canonicalized (first
/// non-negligible component positive) so the output is deterministic.
pub fn classical_mds(complete: &Array2<f64>, dimension: usize) -> Result<Configuration> {
    if dimension == 0 {
        return Err(TopolowError::Invalid("dimension must be at least 1".into()));
    }
    let b = metrics::gram_matrix(complete)?;
    let eig = symmetric_eigen(&b)?;
    let max_abs = eig
        .eigenvalues
        .iter()
        .fold(0.0f64, |acc, v| acc.max(v.abs()));
    let tau = 1e-9 * max_abs;
    let n_positive = eig.eigenvalues.iter().filter(|&&l| l > tau).count();
    if n_positive == 0 {
        return Err(TopolowError::Invalid(
            "Gram matrix has no positive eigenvalues; input is degenerate".into(),
        ));
    }
    let k = dimension.min(n_positive);
    let m = complete.nrows();
    let mut coords = Array2::zeros((m, k));
    for col in 0..k {
        let scale = eig.eigenvalues[col].sqrt();
        let mut sign = 1.0;
        for i in 0..m {
            let v = eig.eigenvectors[(i, col)];
            if v.abs() > 1e-12 {
                sign = if v < 0.0 { -1.0 } else { 1.0 };
                break;
            }
        }
        for i in 0..m {
            coords[(i, col)] = sign * eig.eigenvectors[(i, col)] * scale;
        }
    }
    Configuration::from_coords(coords)
}
