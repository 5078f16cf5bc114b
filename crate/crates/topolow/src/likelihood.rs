//! Laplace error model and fit likelihoods.
//!
//! Residuals between observed dissimilarities and embedded distances are
//! modelled as Laplace(0, b). With the scale plugged in as the mean absolute
//! error of the fit, the exact-cell log-likelihood collapses to the closed
//! form `-n * ln(2 * MAE) - n`, which is what hyperparameter search
//! maximizes. Censored cells contribute through the CDF (left-censored) or
//! the survivor function (right-censored) instead of the density.

use crate::engine::Configuration;
use crate::error::{Result, TopolowError};
use crate::matrix::{DissimilarityMatrix, ObservationCell};

/// MAE is floored at this value wherever a log of it is taken, so perfect
/// fits produce a large finite likelihood instead of infinity.
pub const MAE_FLOOR: f64 = 1e-10;

/// Floor applied to censored-cell probabilities before taking logs.
pub const PROB_FLOOR: f64 = 1e-300;

/// Scale parameter of the Laplace error model; strictly positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceScale(f64);

impl LaplaceScale {
    pub fn new(b: f64) -> Result<Self> {
        if !b.is_finite() || b <= 0.0 {
            return Err(TopolowError::Invalid(format!(
                "Laplace scale must be positive and finite, got {b}"
            )));
        }
        Ok(LaplaceScale(b))
    }

    /// Plug-in estimate from a fit: the exact-cell MAE, floored.
    pub fn from_fit(config: &Configuration, d: &DissimilarityMatrix) -> Result<Self> {
        Ok(LaplaceScale(mae(config, d)?.max(MAE_FLOOR)))
    }

    pub fn get(&self) -> f64 {
        self.0
    }
}

/// Mean absolute error between embedded distances and exact observed cells.
///
/// Every off-diagonal exact cell counts as one observation, so both
/// directions of an asymmetric pair contribute. Errors when the matrix has
/// no exact cells.
pub fn mae(config: &Configuration, d: &DissimilarityMatrix) -> Result<f64> {
    check_shapes(config, d)?;
    let mut sum = 0.0;
    let mut n = 0usize;
    for (i, j, cell) in d.off_diagonal() {
        if let ObservationCell::Exact(v) = cell {
            sum += (v - config.distance(i, j)).abs();
            n += 1;
        }
    }
    if n == 0 {
        return Err(TopolowError::Invalid(
            "matrix has no exact cells; MAE is undefined".into(),
        ));
    }
    Ok(sum / n as f64)
}

/// CDF of Laplace(0, b).
pub fn laplace_cdf(z: f64, b: f64) -> f64 {
    if z < 0.0 {
        0.5 * (z / b).exp()
    } else {
        1.0 - 0.5 * (-z / b).exp()
    }
}

/// Survivor function `1 - F(z)`; the pair sums to one exactly.
pub fn laplace_survivor(z: f64, b: f64) -> f64 {
    1.0 - laplace_cdf(z, b)
}

/// `-n * ln(2 * mae) - n` with the MAE floored at [`MAE_FLOOR`].
pub fn log_likelihood_from_mae(mae: f64, n: usize) -> f64 {
    let n = n as f64;
    -n * (2.0 * mae.max(MAE_FLOOR)).ln() - n
}

/// Exact-cell log-likelihood of a fit: `-n * ln(2 * MAE) - n` with the MAE
/// floored at [`MAE_FLOOR`] and `n` the number of exact cells.
pub fn log_likelihood_exact(config: &Configuration, d: &DissimilarityMatrix) -> Result<f64> {
    Ok(log_likelihood_from_mae(mae(config, d)?, d.exact_count()))
}

/// Per-term breakdown of the censored-data log-likelihood.
#[derive(Debug, Clone, serde::Serialize)]
pub struct LikelihoodBreakdown {
    pub exact_term: f64,
    pub left_censored_term: f64,
    pub right_censored_term: f64,
    pub total: f64,
    pub n_exact: usize,
    pub n_left_censored: usize,
    pub n_right_censored: usize,
    pub scale: f64,
}

/// Full log-likelihood under Laplace(0, b) residuals.
///
/// Exact cells contribute the log density of their residual. A left-censored
/// cell with threshold c contributes `ln F(c - r)` (the value lies below c),
/// a right-censored cell `ln S(c - r)` (the value lies above c), with r the
/// embedded distance. Probabilities are floored at [`PROB_FLOOR`] before the
/// log, so the result is always finite.
pub fn log_likelihood_censored(
    config: &Configuration,
    d: &DissimilarityMatrix,
    scale: LaplaceScale,
) -> Result<LikelihoodBreakdown> {
    check_shapes(config, d)?;
    let b = scale.get();
    let log_floor = PROB_FLOOR.ln();
    let mut exact_term = 0.0;
    let mut left_term = 0.0;
    let mut right_term = 0.0;
    let (mut n_exact, mut n_left, mut n_right) = (0usize, 0usize, 0usize);
    for (i, j, cell) in d.off_diagonal() {
        let r = config.distance(i, j);
        match cell {
            ObservationCell::Missing => {}
            ObservationCell::Exact(v) => {
                exact_term += -(2.0 * b).ln() - (v - r).abs() / b;
                n_exact += 1;
            }
            ObservationCell::LeftCensored(c) => {
                left_term += laplace_cdf(c - r, b).max(PROB_FLOOR).ln().max(log_floor);
                n_left += 1;
            }
            ObservationCell::RightCensored(c) => {
                right_term += laplace_survivor(c - r, b).max(PROB_FLOOR).ln().max(log_floor);
                n_right += 1;
            }
        }
    }
    Ok(LikelihoodBreakdown {
        exact_term,
        left_censored_term: left_term,
        right_censored_term: right_term,
        total: exact_term + left_term + right_term,
        n_exact,
        n_left_censored: n_left,
        n_right_censored: n_right,
        scale: b,
    })
}

fn check_shapes(config: &Configuration, d: &DissimilarityMatrix) -> Result<()> {
    if config.len() != d.len() {
        return Err(TopolowError::Invalid(format!(
            "configuration has {} points but matrix has {} objects",
            config.len(),
            d.len()
        )));
    }
    Ok(())
}
