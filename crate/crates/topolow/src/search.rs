//! Likelihood-guided hyperparameter selection: Latin hypercube exploration,
//! k-fold cross-validated scoring, and adaptive Monte Carlo refinement.

use rand::distr::weighted::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{fit, Configuration, FitOptions, Hyperparameters};
use crate::likelihood::log_likelihood_from_mae;
use crate::matrix::{count_components, DissimilarityMatrix, ObservationCell};
use crate::seeding::derive;
use crate::{Result, TopolowError};

/// How a parameter's range is traversed during sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scale {
    Linear,
    /// Sampled uniformly in log space; bounds must be positive.
    Logarithmic,
}

/// One parameter's search interval.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ParamRange {
    pub lower: f64,
    pub upper: f64,
    pub scale: Scale,
    /// Sampled values are rounded to the nearest integer and clamped.
    pub integer: bool,
}

impl ParamRange {
    pub fn new(lower: f64, upper: f64, scale: Scale, integer: bool) -> Result<Self> {
        let range = ParamRange {
            lower,
            upper,
            scale,
            integer,
        };
        range.validate()?;
        Ok(range)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lower.is_finite() && self.upper.is_finite() && self.lower < self.upper) {
            return Err(TopolowError::Invalid(format!(
                "range bounds must be finite with lower < upper, got [{}, {}]",
                self.lower, self.upper
            )));
        }
        if self.scale == Scale::Logarithmic && self.lower <= 0.0 {
            return Err(TopolowError::Invalid(format!(
                "logarithmic range needs positive bounds, got lower {}",
                self.lower
            )));
        }
        if self.integer && (self.lower.fract() != 0.0 || self.upper.fract() != 0.0) {
            return Err(TopolowError::Invalid(format!(
                "integer range bounds must be whole numbers, got [{}, {}]",
                self.lower, self.upper
            )));
        }
        Ok(())
    }

    /// Maps a value into the sampling coordinate (log space for log scale).
    pub fn transform(&self, x: f64) -> f64 {
        match self.scale {
            Scale::Linear => x,
            Scale::Logarithmic => x.ln(),
        }
    }

    /// Inverse of [`ParamRange::transform`].
    pub fn restore(&self, t: f64) -> f64 {
        match self.scale {
            Scale::Linear => t,
            Scale::Logarithmic => t.exp(),
        }
    }

    fn transformed_bounds(&self) -> (f64, f64) {
        (self.transform(self.lower), self.transform(self.upper))
    }

    /// Width of the range in the sampling coordinate.
    pub fn transformed_width(&self) -> f64 {
        let (lo, hi) = self.transformed_bounds();
        hi - lo
    }

    /// Value at unit coordinate `u` in [0, 1].
    pub fn value_at(&self, u: f64) -> f64 {
        let (lo, hi) = self.transformed_bounds();
        self.finish(self.restore(lo + u * (hi - lo)))
    }

    fn finish(&self, x: f64) -> f64 {
        let x = if self.integer { x.round() } else { x };
        x.clamp(self.lower, self.upper)
    }
}

/// Search domain for the four hyperparameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ParameterRanges {
    pub dimension: ParamRange,
    pub spring_constant: ParamRange,
    pub repulsion_constant: ParamRange,
    pub cooling_rate: ParamRange,
}

impl Default for ParameterRanges {
    /// Dimension in {2,…,10}; spring in [0.1, 10], repulsion and cooling in
    /// [0.001, 0.1], the three continuous ranges log-uniform.
    fn default() -> Self {
        ParameterRanges {
            dimension: ParamRange {
                lower: 2.0,
                upper: 10.0,
                scale: Scale::Linear,
                integer: true,
            },
            spring_constant: ParamRange {
                lower: 0.1,
                upper: 10.0,
                scale: Scale::Logarithmic,
                integer: false,
            },
            repulsion_constant: ParamRange {
                lower: 0.001,
                upper: 0.1,
                scale: Scale::Logarithmic,
                integer: false,
            },
            cooling_rate: ParamRange {
                lower: 0.001,
                upper: 0.1,
                scale: Scale::Logarithmic,
                integer: false,
            },
        }
    }
}

impl ParameterRanges {
    pub fn validate(&self) -> Result<()> {
        self.dimension.validate()?;
        self.spring_constant.validate()?;
        self.repulsion_constant.validate()?;
        self.cooling_rate.validate()?;
        if !self.dimension.integer || self.dimension.lower < 1.0 {
            return Err(TopolowError::Invalid(
                "dimension range must be integral with lower bound at least 1".into(),
            ));
        }
        if self.spring_constant.lower <= 0.0 || self.repulsion_constant.lower <= 0.0 {
            return Err(TopolowError::Invalid(
                "spring and repulsion ranges must be positive".into(),
            ));
        }
        if self.cooling_rate.lower <= 0.0 || self.cooling_rate.upper >= 1.0 {
            return Err(TopolowError::Invalid(format!(
                "cooling range must lie inside (0, 1), got [{}, {}]",
                self.cooling_rate.lower, self.cooling_rate.upper
            )));
        }
        Ok(())
    }

    fn as_array(&self) -> [ParamRange; 4] {
        [
            self.dimension,
            self.spring_constant,
            self.repulsion_constant,
            self.cooling_rate,
        ]
    }

    fn params_from_unit(&self, u: [f64; 4]) -> Hyperparameters {
        Hyperparameters {
            dimension: self.dimension.value_at(u[0]) as usize,
            spring_constant: self.spring_constant.value_at(u[1]),
            repulsion_constant: self.repulsion_constant.value_at(u[2]),
            cooling_rate: self.cooling_rate.value_at(u[3]),
        }
    }

    fn to_vector(&self, p: &Hyperparameters) -> [f64; 4] {
        [
            self.dimension.transform(p.dimension as f64),
            self.spring_constant.transform(p.spring_constant),
            self.repulsion_constant.transform(p.repulsion_constant),
            self.cooling_rate.transform(p.cooling_rate),
        ]
    }

    fn from_vector(&self, v: [f64; 4]) -> Hyperparameters {
        let dims = self.as_array();
        let restore = |k: usize| dims[k].finish(dims[k].restore(v[k]));
        Hyperparameters {
            dimension: restore(0) as usize,
            spring_constant: restore(1),
            repulsion_constant: restore(2),
            cooling_rate: restore(3),
        }
    }

    /// Whether the continuous coordinates lie inside their transformed
    /// bounds. The integer dimension is exempt: it is rounded and clamped on
    /// restore instead of rejected.
    fn continuous_within(&self, v: &[f64; 4]) -> bool {
        self.as_array().iter().zip(v).all(|(range, t)| {
            if range.integer {
                true
            } else {
                let (lo, hi) = range.transformed_bounds();
                *t >= lo && *t <= hi
            }
        })
    }

    fn clamp_vector(&self, v: &mut [f64; 4]) {
        for (range, t) in self.as_array().iter().zip(v.iter_mut()) {
            let (lo, hi) = range.transformed_bounds();
            *t = t.clamp(lo, hi);
        }
    }
}

/// Stratified sample: each parameter's (transformed) range is cut into `n`
/// equal strata, one draw per stratum with uniform jitter, and the
/// stratum-to-sample assignment is shuffled independently per parameter.
pub fn lhs_sample(
    ranges: &ParameterRanges,
    n: usize,
    seed: u64,
) -> Result<Vec<Hyperparameters>> {
    ranges.validate()?;
    if n == 0 {
        return Err(TopolowError::Invalid(
            "sample count must be at least 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut unit = vec![[0.0f64; 4]; n];
    for dim in 0..4 {
        let mut strata: Vec<usize> = (0..n).collect();
        strata.shuffle(&mut rng);
        for (sample, stratum) in strata.into_iter().enumerate() {
            unit[sample][dim] = (stratum as f64 + rng.random::<f64>()) / n as f64;
        }
    }
    Ok(unit.into_iter().map(|u| ranges.params_from_unit(u)).collect())
}

/// One scored candidate.
#[derive(Debug, Clone, Serialize)]
pub struct SearchSample {
    pub params: Hyperparameters,
    /// Sum of the per-fold validation log-likelihoods.
    pub cv_log_likelihood: f64,
    /// Validation MAE per fold; NaN marks a skipped fold.
    pub fold_maes: Vec<f64>,
    /// Held-out exact-cell count per fold; 0 marks a skipped fold.
    pub fold_counts: Vec<usize>,
}

impl SearchSample {
    pub fn skipped_folds(&self) -> usize {
        self.fold_counts.iter().filter(|&&c| c == 0).count()
    }
}

/// Splits the observed unordered pairs into `folds` disjoint validation
/// sets of near-equal size (shuffled, then dealt round-robin).
pub fn partition_pairs(
    d: &DissimilarityMatrix,
    folds: usize,
    seed: u64,
) -> Result<Vec<Vec<(usize, usize)>>> {
    if folds < 2 {
        return Err(TopolowError::Invalid(format!(
            "need at least 2 folds, got {folds}"
        )));
    }
    let mut pairs = d.observed_pairs();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pairs.shuffle(&mut rng);
    let mut out = vec![Vec::new(); folds];
    for (i, pair) in pairs.into_iter().enumerate() {
        out[i % folds].push(pair);
    }
    Ok(out)
}

fn validation_mae(
    config: &Configuration,
    d: &DissimilarityMatrix,
    held_out: &[(usize, usize)],
) -> (f64, usize) {
    let mut sum = 0.0;
    let mut n = 0usize;
    for &(a, b) in held_out {
        for (i, j) in [(a, b), (b, a)] {
            if let ObservationCell::Exact(v) = d.cells()[(i, j)] {
                sum += (v - config.distance(i, j)).abs();
                n += 1;
            }
        }
    }
    if n == 0 {
        (f64::NAN, 0)
    } else {
        (sum / n as f64, n)
    }
}

/// Scores a parameter set by k-fold cross-validation.
///
/// Each fold's pairs are masked to Missing in both directions, the fit runs
/// on the remainder, and the held-out exact cells are scored by
/// `-n * ln(2 * MAE) - n`. A fold is skipped (NaN MAE, zero count) when its
/// training graph disconnects or its validation set holds no exact cell;
/// surviving folds' log-likelihoods are summed. All folds skipped is an
/// error. Fit failures propagate and fail the whole candidate.
pub fn cv_log_likelihood(
    d: &DissimilarityMatrix,
    params: &Hyperparameters,
    folds: usize,
    seed: u64,
    options: &FitOptions,
) -> Result<SearchSample> {
    let partition = partition_pairs(d, folds, derive(seed, 0))?;
    let mut fold_maes = vec![f64::NAN; folds];
    let mut fold_counts = vec![0usize; folds];
    let mut total = 0.0;
    let mut evaluated = 0usize;
    for (f, held_out) in partition.iter().enumerate() {
        if held_out.is_empty() {
            continue;
        }
        let train = d.with_pairs_masked(held_out);
        if count_components(train.len(), train.observed_pairs().into_iter()) > 1 {
            continue;
        }
        if train.exact_count() == 0 {
            continue;
        }
        let result = fit(&train, params, derive(seed, 1 + f as u64), options)?;
        let (mae_val, n) = validation_mae(&result.configuration, d, held_out);
        if n == 0 {
            continue;
        }
        fold_maes[f] = mae_val;
        fold_counts[f] = n;
        total += log_likelihood_from_mae(mae_val, n);
        evaluated += 1;
    }
    if evaluated == 0 {
        return Err(TopolowError::Invalid(format!(
            "all {folds} folds were skipped; the observation graph is too sparse \
             for {folds}-fold validation"
        )));
    }
    Ok(SearchSample {
        params: *params,
        cv_log_likelihood: total,
        fold_maes,
        fold_counts,
    })
}

/// Draws a refinement batch from a weighted Gaussian KDE over the history.
///
/// History points are weighted by `exp(cv_logL - max cv_logL)` and smoothed
/// per transformed dimension with a Silverman bandwidth
/// (`1.06 * sd * n^(-1/5)`) floored at 1% of the range width. Candidates
/// falling outside the continuous ranges are redrawn (up to 1000 attempts,
/// then clamped), so every returned value lies inside; the integer dimension
/// is rounded and clamped on restore. A history whose samples are all
/// identical falls back to [`lhs_sample`] with the same seed.
pub fn amc_refine(
    history: &[SearchSample],
    ranges: &ParameterRanges,
    batch: usize,
    seed: u64,
) -> Result<Vec<Hyperparameters>> {
    ranges.validate()?;
    if history.is_empty() {
        return Err(TopolowError::Invalid(
            "refinement needs a non-empty history".into(),
        ));
    }
    if batch == 0 {
        return Err(TopolowError::Invalid("batch size must be at least 1".into()));
    }
    let points: Vec<[f64; 4]> = history.iter().map(|s| ranges.to_vector(&s.params)).collect();
    if points.iter().all(|p| *p == points[0]) {
        return lhs_sample(ranges, batch, seed);
    }

    let max_l = history
        .iter()
        .map(|s| s.cv_log_likelihood)
        .fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = history
        .iter()
        .map(|s| (s.cv_log_likelihood - max_l).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();

    let n = points.len() as f64;
    let dims = ranges.as_array();
    let mut bandwidth = [0.0f64; 4];
    for k in 0..4 {
        let mean: f64 = points.iter().zip(&weights).map(|(p, w)| w * p[k]).sum();
        let var: f64 = points
            .iter()
            .zip(&weights)
            .map(|(p, w)| w * (p[k] - mean) * (p[k] - mean))
            .sum();
        let silverman = 1.06 * var.max(0.0).sqrt() * n.powf(-0.2);
        bandwidth[k] = silverman.max(0.01 * dims[k].transformed_width());
    }

    let component = WeightedIndex::new(&weights)
        .map_err(|e| TopolowError::Numeric(format!("KDE weights are unusable: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(batch);
    for _ in 0..batch {
        let mut v = [0.0f64; 4];
        let mut inside = false;
        for _ in 0..1000 {
            let center = points[component.sample(&mut rng)];
            for k in 0..4 {
                let z: f64 = rng.sample(StandardNormal);
                v[k] = center[k] + bandwidth[k] * z;
            }
            if ranges.continuous_within(&v) {
                inside = true;
                break;
            }
        }
        if !inside {
            ranges.clamp_vector(&mut v);
        }
        out.push(ranges.from_vector(v));
    }
    Ok(out)
}

/// Evaluation budget for [`search`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SearchBudget {
    pub initial_samples: usize,
    pub amc_rounds: usize,
    pub batch_size: usize,
    pub folds: usize,
    pub fit_options: FitOptions,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            initial_samples: 30,
            amc_rounds: 5,
            batch_size: 10,
            folds: 5,
            fit_options: FitOptions::default(),
        }
    }
}

impl SearchBudget {
    pub fn validate(&self) -> Result<()> {
        if self.initial_samples == 0 {
            return Err(TopolowError::Invalid(
                "initial sample count must be at least 1".into(),
            ));
        }
        if self.batch_size == 0 {
            return Err(TopolowError::Invalid("batch size must be at least 1".into()));
        }
        if self.folds < 2 {
            return Err(TopolowError::Invalid(format!(
                "need at least 2 folds, got {}",
                self.folds
            )));
        }
        self.fit_options.validate()
    }
}

/// Outcome of a hyperparameter search.
#[derive(Debug, Clone)]
pub struct SearchResult {
    /// The sample attaining the maximum cross-validated log-likelihood.
    pub best: SearchSample,
    /// Every scored candidate in evaluation order; failed candidates are
    /// dropped.
    pub samples: Vec<SearchSample>,
    pub seed: u64,
}

const LHS_STREAM: u64 = u64::MAX - 1;
const ROUND_STREAM: u64 = 1 << 63;

fn evaluate_batch(
    d: &DissimilarityMatrix,
    candidates: &[Hyperparameters],
    budget: &SearchBudget,
    seed: u64,
    first_index: u64,
    samples: &mut Vec<SearchSample>,
    last_error: &mut Option<TopolowError>,
) {
    let scored: Vec<Result<SearchSample>> = candidates
        .par_iter()
        .enumerate()
        .map(|(i, params)| {
            cv_log_likelihood(
                d,
                params,
                budget.folds,
                derive(seed, first_index + i as u64),
                &budget.fit_options,
            )
        })
        .collect();
    for result in scored {
        match result {
            Ok(sample) => samples.push(sample),
            Err(e) => *last_error = Some(e),
        }
    }
}

/// Two-stage likelihood search: a Latin hypercube exploration pass followed
/// by adaptive Monte Carlo refinement rounds.
///
/// Every candidate is scored by [`cv_log_likelihood`] under its own seed
/// stream derived from the search seed and the candidate's global index.
/// Batches evaluate in parallel and merge in index order, so the result is
/// identical regardless of thread count. Candidates that fail to evaluate
/// are dropped; the search errors only when every candidate failed. Should
/// an entire stage fail, later rounds fall back to fresh Latin hypercube
/// exploration until some candidate succeeds.
pub fn search(
    d: &DissimilarityMatrix,
    ranges: &ParameterRanges,
    budget: &SearchBudget,
    seed: u64,
) -> Result<SearchResult> {
    ranges.validate()?;
    budget.validate()?;

    let mut samples: Vec<SearchSample> = Vec::new();
    let mut last_error: Option<TopolowError> = None;
    let mut attempted: u64 = 0;

    let initial = lhs_sample(ranges, budget.initial_samples, derive(seed, LHS_STREAM))?;
    evaluate_batch(
        d,
        &initial,
        budget,
        seed,
        attempted,
        &mut samples,
        &mut last_error,
    );
    attempted += initial.len() as u64;

    for round in 0..budget.amc_rounds {
        let round_seed = derive(seed, ROUND_STREAM + round as u64);
        let candidates = if samples.is_empty() {
            lhs_sample(ranges, budget.batch_size, round_seed)?
        } else {
            amc_refine(&samples, ranges, budget.batch_size, round_seed)?
        };
        evaluate_batch(
            d,
            &candidates,
            budget,
            seed,
            attempted,
            &mut samples,
            &mut last_error,
        );
        attempted += candidates.len() as u64;
    }

    match samples
        .iter()
        .max_by(|a, b| a.cv_log_likelihood.partial_cmp(&b.cv_log_likelihood).unwrap())
        .cloned()
    {
        Some(best) => Ok(SearchResult {
            best,
            samples,
            seed,
        }),
        None => Err(last_error.unwrap_or_else(|| {
            TopolowError::Invalid("no candidate could be evaluated".into())
        })),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::auto_labels;
    use ndarray::Array2;

    fn euclid_matrix(m: usize, dim: usize, seed: u64) -> DissimilarityMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..dim).map(|_| rng.random::<f64>() * 10.0).collect())
            .collect();
        let mut values = Array2::zeros((m, m));
        for i in 0..m {
            for j in 0..m {
                let s: f64 = (0..dim)
                    .map(|k| (pts[i][k] - pts[j][k]) * (pts[i][k] - pts[j][k]))
                    .sum();
                values[(i, j)] = s.sqrt();
            }
        }
        DissimilarityMatrix::from_exact_dense(auto_labels(m), &values).unwrap()
    }

    fn stratum_of(range: &ParamRange, value: f64, n: usize) -> usize {
        let (lo, hi) = (range.transform(range.lower), range.transform(range.upper));
        let u = (range.transform(value) - lo) / (hi - lo);
        ((u * n as f64) as usize).min(n - 1)
    }

    #[test]
    fn lhs_fills_every_stratum_exactly_once() {
        let ranges = ParameterRanges::default();
        for seed in 0..5 {
            let n = 8;
            let samples = lhs_sample(&ranges, n, seed).unwrap();
            for (pick, range) in [
                (
                    samples
                        .iter()
                        .map(|p| p.spring_constant)
                        .collect::<Vec<_>>(),
                    &ranges.spring_constant,
                ),
                (
                    samples
                        .iter()
                        .map(|p| p.repulsion_constant)
                        .collect::<Vec<_>>(),
                    &ranges.repulsion_constant,
                ),
                (
                    samples.iter().map(|p| p.cooling_rate).collect::<Vec<_>>(),
                    &ranges.cooling_rate,
                ),
            ] {
                let mut seen: Vec<usize> =
                    pick.iter().map(|v| stratum_of(range, *v, n)).collect();
                seen.sort_unstable();
                assert_eq!(seen, (0..n).collect::<Vec<_>>());
            }
        }
    }

    #[test]
    fn lhs_single_sample_lies_in_range() {
        let ranges = ParameterRanges::default();
        let samples = lhs_sample(&ranges, 1, 9).unwrap();
        assert_eq!(samples.len(), 1);
        let p = samples[0];
        p.validate().unwrap();
        assert!((2..=10).contains(&p.dimension));
        assert!(p.spring_constant >= 0.1 && p.spring_constant <= 10.0);
        assert!(p.repulsion_constant >= 0.001 && p.repulsion_constant <= 0.1);
        assert!(p.cooling_rate >= 0.001 && p.cooling_rate <= 0.1);
    }

    #[test]
    fn lhs_integer_dimension_rounds_and_covers() {
        let ranges = ParameterRanges::default();
        let mut passes = 0;
        for seed in 0..50 {
            let samples = lhs_sample(&ranges, 9, seed).unwrap();
            let dims: Vec<usize> = samples.iter().map(|p| p.dimension).collect();
            assert!(dims.iter().all(|d| (2..=10).contains(d)));
            let mut counts = [0usize; 11];
            for d in &dims {
                counts[*d] += 1;
            }
            let distinct = counts.iter().filter(|&&c| c > 0).count();
            let max_count = counts.iter().max().copied().unwrap();
            if distinct >= 5 && max_count <= 2 {
                passes += 1;
            }
        }
        assert!(passes >= 45, "stratified rounding held in {passes}/50 seeds");
    }

    #[test]
    fn partition_is_a_true_partition() {
        let d = euclid_matrix(12, 3, 1);
        let folds = partition_pairs(&d, 5, 11).unwrap();
        let mut all: Vec<(usize, usize)> = folds.iter().flatten().copied().collect();
        let sizes: Vec<usize> = folds.iter().map(|f| f.len()).collect();
        assert_eq!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap(), 1);
        all.sort_unstable();
        let mut expected = d.observed_pairs();
        expected.sort_unstable();
        assert_eq!(all, expected);
    }

    #[test]
    fn masked_training_hides_exactly_the_fold() {
        let d = euclid_matrix(8, 2, 2);
        let folds = partition_pairs(&d, 4, 3).unwrap();
        let train = d.with_pairs_masked(&folds[0]);
        for &(a, b) in &folds[0] {
            assert!(train.cells()[(a, b)].is_missing());
            assert!(train.cells()[(b, a)].is_missing());
        }
        let hidden: usize = d.observed_count() - train.observed_count();
        assert_eq!(hidden, 2 * folds[0].len());
    }

    #[test]
    fn cv_scores_a_complete_matrix_without_skips() {
        let d = euclid_matrix(10, 2, 4);
        let params = Hyperparameters {
            dimension: 2,
            spring_constant: 1.0,
            repulsion_constant: 0.01,
            cooling_rate: 0.01,
        };
        let options = FitOptions {
            max_iterations: 80,
            ..FitOptions::default()
        };
        let sample = cv_log_likelihood(&d, &params, 2, 5, &options).unwrap();
        assert_eq!(sample.skipped_folds(), 0);
        assert_eq!(sample.fold_maes.len(), 2);
        let mut recomputed = 0.0;
        for (mae, n) in sample.fold_maes.iter().zip(&sample.fold_counts) {
            assert!(mae.is_finite());
            assert!(*n > 0);
            recomputed += log_likelihood_from_mae(*mae, *n);
        }
        let rel = (recomputed - sample.cv_log_likelihood).abs()
            / sample.cv_log_likelihood.abs().max(1.0);
        assert!(rel < 1e-12);
    }

    #[test]
    fn cv_errors_when_every_fold_disconnects() {
        // A 4-object path graph: removing any observed edge splits it.
        let mut cells = Array2::from_elem((4, 4), ObservationCell::Missing);
        for (a, b) in [(0usize, 1usize), (1, 2), (2, 3)] {
            cells[(a, b)] = ObservationCell::Exact(1.0);
            cells[(b, a)] = ObservationCell::Exact(1.0);
        }
        let d = DissimilarityMatrix::new(auto_labels(4), cells).unwrap();
        let params = Hyperparameters {
            dimension: 2,
            spring_constant: 1.0,
            repulsion_constant: 0.01,
            cooling_rate: 0.01,
        };
        let err = cv_log_likelihood(&d, &params, 3, 6, &FitOptions::default()).unwrap_err();
        assert!(err.to_string().contains("skipped"), "{err}");
    }

    fn spread_history(ranges: &ParameterRanges, n: usize, seed: u64) -> Vec<SearchSample> {
        lhs_sample(ranges, n, seed)
            .unwrap()
            .into_iter()
            .map(|params| SearchSample {
                params,
                cv_log_likelihood: -50.0,
                fold_maes: vec![1.0],
                fold_counts: vec![10],
            })
            .collect()
    }

    #[test]
    fn amc_concentrates_on_a_dominant_sample() {
        let ranges = ParameterRanges::default();
        let mut history = spread_history(&ranges, 10, 21);
        for s in history.iter_mut().skip(1) {
            s.cv_log_likelihood = -1050.0;
        }
        let candidates = amc_refine(&history, &ranges, 40, 22).unwrap();
        let target = ranges.to_vector(&history[0].params);
        let dims = [
            ranges.dimension,
            ranges.spring_constant,
            ranges.repulsion_constant,
            ranges.cooling_rate,
        ];
        for k in 0..4 {
            let mut deviations: Vec<f64> = candidates
                .iter()
                .map(|c| (ranges.to_vector(c)[k] - target[k]).abs())
                .collect();
            deviations.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mad = deviations[deviations.len() / 2];
            assert!(
                mad < 0.5 * dims[k].transformed_width(),
                "dimension {k}: median deviation {mad}"
            );
        }
    }

    #[test]
    fn amc_equal_weights_keep_the_history_spread() {
        let ranges = ParameterRanges::default();
        let history = spread_history(&ranges, 20, 31);
        let candidates = amc_refine(&history, &ranges, 60, 32).unwrap();
        let spread = |points: &[[f64; 4]], k: usize| {
            let mean: f64 = points.iter().map(|p| p[k]).sum::<f64>() / points.len() as f64;
            (points.iter().map(|p| (p[k] - mean) * (p[k] - mean)).sum::<f64>()
                / points.len() as f64)
                .sqrt()
        };
        let hist_pts: Vec<[f64; 4]> =
            history.iter().map(|s| ranges.to_vector(&s.params)).collect();
        let cand_pts: Vec<[f64; 4]> = candidates.iter().map(|c| ranges.to_vector(c)).collect();
        for k in 1..4 {
            let h = spread(&hist_pts, k);
            let c = spread(&cand_pts, k);
            assert!(c > 0.2 * h && c < 3.0 * h, "dimension {k}: {c} vs {h}");
        }
    }

    #[test]
    fn amc_never_leaves_the_ranges() {
        let ranges = ParameterRanges::default();
        // Push all the weight onto a corner sample so draws press the bounds.
        let mut history = spread_history(&ranges, 6, 41);
        history[0].params = Hyperparameters {
            dimension: 10,
            spring_constant: 10.0,
            repulsion_constant: 0.001,
            cooling_rate: 0.1,
        };
        history[0].cv_log_likelihood = 0.0;
        let candidates = amc_refine(&history, &ranges, 200, 42).unwrap();
        for c in &candidates {
            c.validate().unwrap();
            assert!((2..=10).contains(&c.dimension));
            assert!(c.spring_constant >= 0.1 && c.spring_constant <= 10.0);
            assert!(c.repulsion_constant >= 0.001 && c.repulsion_constant <= 0.1);
            assert!(c.cooling_rate >= 0.001 && c.cooling_rate <= 0.1);
        }
    }

    #[test]
    fn amc_identical_history_falls_back_to_stratified_sampling() {
        let ranges = ParameterRanges::default();
        let params = Hyperparameters {
            dimension: 4,
            spring_constant: 1.0,
            repulsion_constant: 0.01,
            cooling_rate: 0.05,
        };
        let history: Vec<SearchSample> = (0..5)
            .map(|_| SearchSample {
                params,
                cv_log_likelihood: -10.0,
                fold_maes: vec![1.0],
                fold_counts: vec![5],
            })
            .collect();
        let fallback = amc_refine(&history, &ranges, 6, 77).unwrap();
        let direct = lhs_sample(&ranges, 6, 77).unwrap();
        assert_eq!(fallback, direct);
    }

    #[test]
    fn search_is_deterministic_with_full_bookkeeping() {
        let d = euclid_matrix(10, 2, 8);
        let budget = SearchBudget {
            initial_samples: 3,
            amc_rounds: 2,
            batch_size: 2,
            folds: 2,
            fit_options: FitOptions {
                max_iterations: 60,
                ..FitOptions::default()
            },
        };
        let ranges = ParameterRanges::default();
        let a = search(&d, &ranges, &budget, 123).unwrap();
        let b = search(&d, &ranges, &budget, 123).unwrap();
        assert_eq!(a.samples.len(), 7);
        assert_eq!(a.samples.len(), b.samples.len());
        for (x, y) in a.samples.iter().zip(&b.samples) {
            assert_eq!(x.params, y.params);
            assert_eq!(x.cv_log_likelihood.to_bits(), y.cv_log_likelihood.to_bits());
        }
        let max = a
            .samples
            .iter()
            .map(|s| s.cv_log_likelihood)
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(a.best.cv_log_likelihood, max);
    }

    #[test]
    fn search_with_lone_sample_budget_returns_it() {
        let d = euclid_matrix(8, 2, 9);
        let budget = SearchBudget {
            initial_samples: 1,
            amc_rounds: 0,
            batch_size: 1,
            folds: 2,
            fit_options: FitOptions {
                max_iterations: 40,
                ..FitOptions::default()
            },
        };
        let result = search(&d, &ParameterRanges::default(), &budget, 5).unwrap();
        assert_eq!(result.samples.len(), 1);
        assert_eq!(result.best.params, result.samples[0].params);
        assert_eq!(result.seed, 5);
    }

    #[test]
    fn search_prefers_sufficient_dimension_on_spatial_data() {
        let d = euclid_matrix(14, 3, 10);
        let ranges = ParameterRanges {
            dimension: ParamRange::new(1.0, 5.0, Scale::Linear, true).unwrap(),
            ..ParameterRanges::default()
        };
        let budget = SearchBudget {
            initial_samples: 10,
            amc_rounds: 1,
            batch_size: 4,
            folds: 2,
            fit_options: FitOptions {
                max_iterations: 150,
                ..FitOptions::default()
            },
        };
        let result = search(&d, &ranges, &budget, 11).unwrap();
        let mean_of = |dim: usize| {
            let picked: Vec<f64> = result
                .samples
                .iter()
                .filter(|s| s.params.dimension == dim)
                .map(|s| s.cv_log_likelihood)
                .collect();
            (!picked.is_empty()).then(|| picked.iter().sum::<f64>() / picked.len() as f64)
        };
        if let (Some(low), Some(high)) = (mean_of(1), mean_of(3)) {
            assert!(
                high > low,
                "3-dimensional fits should beat 1-dimensional: {high} vs {low}"
            );
        }
        assert!(result.best.params.dimension >= 2);
    }
}
