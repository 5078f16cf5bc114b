//! Embedding quality metrics.
//!
//! All metrics compare a complete reference matrix against embedded
//! distances. Asymmetric references are symmetrized by averaging the two
//! directions first, since a single embedded distance has to answer for
//! both.

use ndarray::Array2;
use serde::Serialize;

use crate::error::{Result, TopolowError};
use crate::mds;

/// Averages a matrix with its transpose.
pub fn symmetrize(d: &Array2<f64>) -> Array2<f64> {
    let m = d.nrows();
    let mut out = Array2::zeros((m, m));
    for i in 0..m {
        for j in 0..m {
            out[(i, j)] = 0.5 * (d[(i, j)] + d[(j, i)]);
        }
    }
    out
}

fn check_square(d: &Array2<f64>, what: &str) -> Result<()> {
    if d.nrows() != d.ncols() || d.nrows() == 0 {
        return Err(TopolowError::Invalid(format!(
            "{what} must be square and non-empty, got {}x{}",
            d.nrows(),
            d.ncols()
        )));
    }
    if let Some(v) = d.iter().find(|v| !v.is_finite()) {
        return Err(TopolowError::Invalid(format!(
            "{what} holds non-finite value {v}"
        )));
    }
    Ok(())
}

fn check_same_shape(a: &Array2<f64>, b: &Array2<f64>) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(TopolowError::Invalid(format!(
            "shape mismatch: {:?} vs {:?}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(())
}

/// Normalized stress between a reference matrix and embedded distances:
/// `sqrt(sum_{i<j} (M_ij - D_ij)^2 / sum_{i<j} M_ij^2)`.
///
/// Zero means exact reproduction; an all-zero reference is rejected.
/// The score is invariant under a common positive rescaling of both inputs.
pub fn normalized_stress(reference: &Array2<f64>, embedded: &Array2<f64>) -> Result<f64> {
    check_square(reference, "reference matrix")?;
    check_square(embedded, "embedded distance matrix")?;
    check_same_shape(reference, embedded)?;
    let m_sym = symmetrize(reference);
    let d_sym = symmetrize(embedded);
    let m = m_sym.nrows();
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..m {
        for j in (i + 1)..m {
            let diff = m_sym[(i, j)] - d_sym[(i, j)];
            num += diff * diff;
            den += m_sym[(i, j)] * m_sym[(i, j)];
        }
    }
    if den == 0.0 {
        return Err(TopolowError::Invalid(
            "reference matrix is all zero; stress is undefined".into(),
        ));
    }
    Ok((num / den).sqrt())
}

/// One point of a Shepard diagram.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ShepardPair {
    pub true_dissimilarity: f64,
    pub embedded_distance: f64,
}

/// Shepard diagram data: one `(reference, embedded)` point per unordered
/// pair, in row-major `i < j` order.
#[derive(Debug, Clone)]
pub struct ShepardPairs(pub Vec<ShepardPair>);

impl ShepardPairs {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Extracts Shepard pairs from a reference matrix and embedded distances.
pub fn shepard_pairs(reference: &Array2<f64>, embedded: &Array2<f64>) -> Result<ShepardPairs> {
    check_square(reference, "reference matrix")?;
    check_square(embedded, "embedded distance matrix")?;
    check_same_shape(reference, embedded)?;
    let m_sym = symmetrize(reference);
    let d_sym = symmetrize(embedded);
    let m = m_sym.nrows();
    let mut pairs = Vec::with_capacity(m * (m - 1) / 2);
    for i in 0..m {
        for j in (i + 1)..m {
            pairs.push(ShepardPair {
                true_dissimilarity: m_sym[(i, j)],
                embedded_distance: d_sym[(i, j)],
            });
        }
    }
    Ok(ShepardPairs(pairs))
}

/// Pearson correlation and coefficient of determination between reference
/// dissimilarities and embedded distances.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CorrelationStats {
    pub pearson_r: f64,
    pub r_squared: f64,
}

/// Errors when fewer than two pairs are given or either coordinate has zero
/// variance.
pub fn correlation_stats(pairs: &ShepardPairs) -> Result<CorrelationStats> {
    let n = pairs.len();
    if n < 2 {
        return Err(TopolowError::Invalid(format!(
            "correlation needs at least 2 pairs, got {n}"
        )));
    }
    let nf = n as f64;
    let mean_x = pairs.0.iter().map(|p| p.true_dissimilarity).sum::<f64>() / nf;
    let mean_y = pairs.0.iter().map(|p| p.embedded_distance).sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for p in &pairs.0 {
        let dx = p.true_dissimilarity - mean_x;
        let dy = p.embedded_distance - mean_y;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(TopolowError::Invalid(
            "correlation is undefined for constant inputs".into(),
        ));
    }
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    Ok(CorrelationStats {
        pearson_r: r,
        r_squared: r * r,
    })
}

/// Double-centered Gram matrix of a dissimilarity matrix:
/// `B = -1/2 J (D o D) J` with `J = I - (1/m) 1 1^T`.
///
/// Rows and columns of the result sum to zero; the input is symmetrized
/// first. For distances realized by points in Euclidean space, B is the
/// Gram matrix of the centered point set and therefore positive
/// semidefinite; negative eigenvalues measure departure from Euclidean
/// geometry.
pub fn gram_matrix(d: &Array2<f64>) -> Result<Array2<f64>> {
    check_square(d, "dissimilarity matrix")?;
    let sym = symmetrize(d);
    let m = sym.nrows();
    let sq = sym.mapv(|x| x * x);
    let mut row_mean = vec![0.0f64; m];
    for i in 0..m {
        let mut s = 0.0;
        for j in 0..m {
            s += sq[(i, j)];
        }
        row_mean[i] = s / m as f64;
    }
    let grand = row_mean.iter().sum::<f64>() / m as f64;
    let mut b = Array2::zeros((m, m));
    for i in 0..m {
        for j in i..m {
            let v = -0.5 * (sq[(i, j)] - row_mean[i] - row_mean[j] + grand);
            b[(i, j)] = v;
            b[(j, i)] = v;
        }
    }
    Ok(b)
}

/// Non-Euclidean deviation score: the total negative eigenvalue mass of the
/// Gram matrix relative to its positive mass,
/// `sum |lambda < -tau| / sum (lambda > tau)` with `tau = 1e-9 max |lambda|`.
///
/// Zero for genuinely Euclidean data; grows with the severity of metric
/// violations. Errors when no positive eigenvalue remains.
pub fn deviation_score(d: &Array2<f64>) -> Result<f64> {
    let b = gram_matrix(d)?;
    let eig = mds::symmetric_eigen(&b)?;
    let max_abs = eig
        .eigenvalues
        .iter()
        .fold(0.0f64, |acc, v| acc.max(v.abs()));
    let tau = 1e-9 * max_abs;
    let mut pos = 0.0;
    let mut neg = 0.0;
    for &l in &eig.eigenvalues {
        if l > tau {
            pos += l;
        } else if l < -tau {
            neg += -l;
        }
    }
    if pos == 0.0 {
        return Err(TopolowError::Invalid(
            "Gram matrix has no positive eigenvalues; deviation is undefined".into(),
        ));
    }
    Ok(neg / pos)
}

/// Bundle of the headline metrics for one embedding run.
#[derive(Debug, Clone, Serialize)]
pub struct EvaluationReport {
    pub normalized_stress: f64,
    pub pearson_r: f64,
    pub r_squared: f64,
    /// Deviation score of the reference matrix, not of the embedding.
    pub deviation_score: f64,
    pub n_pairs: usize,
}

/// Evaluates embedded distances against a complete reference matrix.
pub fn evaluate_embedding(
    reference: &Array2<f64>,
    embedded: &Array2<f64>,
) -> Result<EvaluationReport> {
    let stress = normalized_stress(reference, embedded)?;
    let pairs = shepard_pairs(reference, embedded)?;
    let corr = correlation_stats(&pairs)?;
    let deviation = deviation_score(reference)?;
    Ok(EvaluationReport {
        normalized_stress: stress,
        pearson_r: corr.pearson_r,
        r_squared: corr.r_squared,
        deviation_score: deviation,
        n_pairs: pairs.len(),
    })
}
