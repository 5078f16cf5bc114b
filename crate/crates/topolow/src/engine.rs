//! Force-directed embedding engine.
//!
//! Objects are particles in N-dimensional space. Each observed dissimilarity
//! acts as a spring whose rest length is the observed value; each missing
//! pair exerts a weak inverse-square repulsion that pushes unobserved pairs
//! apart instead of letting them collapse. One iteration visits every
//! unordered pair once in a fresh random order and moves just that pair,
//! holding everything else fixed, so no gradient of a global objective is
//! ever formed. Spring and repulsion strengths cool geometrically between
//! iterations.
//!
//! The spring displacement applied to particle `a` at distance `r` from its
//! partner, toward rest length `rest`, is
//!
//! ```text
//! d = 2 k (r - rest) / (4 m_a + k)
//! ```
//!
//! where the effective mass `m_a` counts the unordered observed pairs that
//! involve `a`. Well-measured objects are heavy and barely move; poorly
//! measured ones swing freely. Positive `d` moves `a` toward its partner.
//! The same step with `m_b` moves the partner. Repulsion for a missing pair
//! displaces each particle by `c / (2 m r^2)` away from the other.
//!
//! Censored observations become one-sided springs: a cell known to exceed a
//! threshold pushes the pair apart only while it sits closer than the
//! threshold, and a cell known to lie below one pulls the pair together only
//! while it sits farther, so satisfied constraints exert exactly no force.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TopolowError};
use crate::likelihood;
use crate::matrix::{DissimilarityMatrix, ObservationCell};

/// Pairs closer than this are treated as overlapping: the update direction
/// is drawn at random and this value stands in for the distance.
pub const OVERLAP_DISTANCE: f64 = 1e-9;

/// Per-particle displacement is capped at this fraction of the largest
/// observed dissimilarity.
pub const DISPLACEMENT_CAP_FACTOR: f64 = 0.5;

/// Repulsion magnitude for an overlapping pair is capped at this fraction of
/// the largest observed dissimilarity.
pub const OVERLAP_REPULSION_CAP_FACTOR: f64 = 0.1;

/// The four knobs of the embedding: target dimension, initial spring and
/// repulsion constants, and the geometric cooling rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub dimension: usize,
    pub spring_constant: f64,
    pub repulsion_constant: f64,
    pub cooling_rate: f64,
}

impl Hyperparameters {
    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 {
            return Err(TopolowError::Invalid("dimension must be at least 1".into()));
        }
        if !self.spring_constant.is_finite() || self.spring_constant <= 0.0 {
            return Err(TopolowError::Invalid(format!(
                "spring constant must be positive, got {}",
                self.spring_constant
            )));
        }
        if !self.repulsion_constant.is_finite() || self.repulsion_constant <= 0.0 {
            return Err(TopolowError::Invalid(format!(
                "repulsion constant must be positive, got {}",
                self.repulsion_constant
            )));
        }
        if !(self.cooling_rate > 0.0 && self.cooling_rate < 1.0) {
            return Err(TopolowError::Invalid(format!(
                "cooling rate must lie in (0, 1), got {}",
                self.cooling_rate
            )));
        }
        Ok(())
    }
}

/// Iteration budget and convergence settings for [`fit`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Convergence threshold on the relative change of the iteration MAE.
    pub rel_tolerance: f64,
    /// Consecutive below-threshold iterations required to declare convergence.
    pub patience: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iterations: 1000,
            rel_tolerance: 1e-4,
            patience: 5,
        }
    }
}

impl FitOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 || self.patience == 0 {
            return Err(TopolowError::Invalid(
                "max_iterations and patience must be at least 1".into(),
            ));
        }
        if !self.rel_tolerance.is_finite() || self.rel_tolerance <= 0.0 {
            return Err(TopolowError::Invalid(format!(
                "rel_tolerance must be positive, got {}",
                self.rel_tolerance
            )));
        }
        Ok(())
    }
}

/// Positions of the m embedded points, one row per object.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    coords: Array2<f64>,
}

impl Configuration {
    pub fn from_coords(coords: Array2<f64>) -> Result<Self> {
        if coords.nrows() == 0 || coords.ncols() == 0 {
            return Err(TopolowError::Invalid(
                "configuration needs at least one point and one dimension".into(),
            ));
        }
        if let Some(v) = coords.iter().find(|v| !v.is_finite()) {
            return Err(TopolowError::Numeric(format!(
                "non-finite coordinate {v}"
            )));
        }
        Ok(Configuration { coords })
    }

    pub fn len(&self) -> usize {
        self.coords.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.nrows() == 0
    }

    pub fn dimension(&self) -> usize {
        self.coords.ncols()
    }

    pub fn coords(&self) -> &Array2<f64> {
        &self.coords
    }

    /// Euclidean distance between points `i` and `j`.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let n = self.coords.ncols();
        let mut s = 0.0;
        for k in 0..n {
            let d = self.coords[(i, k)] - self.coords[(j, k)];
            s += d * d;
        }
        s.sqrt()
    }

    /// Full symmetric distance matrix with zero diagonal.
    pub fn distance_matrix(&self) -> Array2<f64> {
        let m = self.len();
        let mut out = Array2::zeros((m, m));
        for i in 0..m {
            for j in (i + 1)..m {
                let r = self.distance(i, j);
                out[(i, j)] = r;
                out[(j, i)] = r;
            }
        }
        out
    }

    fn row_is_finite(&self, i: usize) -> bool {
        (0..self.coords.ncols()).all(|k| self.coords[(i, k)].is_finite())
    }
}

/// Effective mass per object: the number of observed unordered pairs it
/// participates in, floored at one.
#[derive(Debug, Clone)]
pub struct EffectiveMasses(Vec<f64>);

impl EffectiveMasses {
    pub fn compute(d: &DissimilarityMatrix) -> Self {
        let m = d.len();
        let mut counts = vec![0.0f64; m];
        for (i, j) in d.observed_pairs() {
            counts[i] += 1.0;
            counts[j] += 1.0;
        }
        for c in &mut counts {
            *c = c.max(1.0);
        }
        EffectiveMasses(counts)
    }

    pub fn get(&self, a: usize) -> f64 {
        self.0[a]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Effective mass of a single object; see [`EffectiveMasses`].
pub fn effective_mass(d: &DissimilarityMatrix, a: usize) -> f64 {
    let m = d.len();
    let mut count = 0.0f64;
    for j in 0..m {
        if j != a && (d.cell(a, j).is_observed() || d.cell(j, a).is_observed()) {
            count += 1.0;
        }
    }
    count.max(1.0)
}

/// Spring displacement of a particle with mass `mass` sitting at distance
/// `r` from its partner, for rest length `rest` and spring constant `k`.
/// Positive values move the particle toward its partner.
pub fn spring_displacement(r: f64, rest: f64, k: f64, mass: f64) -> f64 {
    2.0 * k * (r - rest) / (4.0 * mass + k)
}

/// Repulsive displacement magnitude for a missing pair at distance `r`.
pub fn repulsive_displacement(r: f64, c: f64, mass: f64) -> f64 {
    c / (2.0 * mass * r * r)
}

/// Spring and repulsion constants after `t` geometric cooling steps.
pub fn cool(k0: f64, c0: f64, alpha: f64, t: usize) -> (f64, f64) {
    let factor = (1.0 - alpha).powi(t as i32);
    (k0 * factor, c0 * factor)
}

/// Shared state for one pair update: the cooled constants, the masses, and
/// the data's length scale (largest observed dissimilarity).
#[derive(Debug, Clone, Copy)]
pub struct PairUpdateContext<'a> {
    pub spring_k: f64,
    pub repulsion_c: f64,
    pub masses: &'a EffectiveMasses,
    pub scale: f64,
}

/// Moves the two particles of one pair according to its observation cell,
/// holding all other particles fixed. Missing cells repel; exact cells act
/// as two-sided springs; censored cells act as one-sided springs toward
/// their threshold and exert no force once satisfied.
pub fn apply_pair_update<R: Rng + ?Sized>(
    config: &mut Configuration,
    a: usize,
    b: usize,
    cell: &ObservationCell,
    ctx: &PairUpdateContext<'_>,
    rng: &mut R,
) {
    let r = config.distance(a, b);
    let overlapping = r < OVERLAP_DISTANCE;
    let r_eff = if overlapping { OVERLAP_DISTANCE } else { r };
    let n = config.dimension();

    // Unit vector from a toward b; drawn at random when the pair overlaps.
    let mut axis = vec![0.0f64; n];
    if overlapping {
        loop {
            let mut norm = 0.0;
            for v in axis.iter_mut() {
                *v = rng.sample(StandardNormal);
                norm += *v * *v;
            }
            norm = norm.sqrt();
            if norm > 1e-12 {
                for v in axis.iter_mut() {
                    *v /= norm;
                }
                break;
            }
        }
    } else {
        for (k, v) in axis.iter_mut().enumerate() {
            *v = (config.coords[(b, k)] - config.coords[(a, k)]) / r;
        }
    }

    let cap = DISPLACEMENT_CAP_FACTOR * ctx.scale;
    // `toward` is the displacement of each particle toward its partner;
    // negative values separate the pair.
    let mut moves: Option<(f64, f64)> = None;
    match cell {
        ObservationCell::Missing => {
            let mut mag_a = repulsive_displacement(r_eff, ctx.repulsion_c, ctx.masses.get(a));
            let mut mag_b = repulsive_displacement(r_eff, ctx.repulsion_c, ctx.masses.get(b));
            if overlapping {
                let overlap_cap = OVERLAP_REPULSION_CAP_FACTOR * ctx.scale;
                mag_a = mag_a.min(overlap_cap);
                mag_b = mag_b.min(overlap_cap);
            }
            moves = Some((-mag_a, -mag_b));
        }
        ObservationCell::Exact(rest) => {
            moves = Some((
                spring_displacement(r_eff, *rest, ctx.spring_k, ctx.masses.get(a)),
                spring_displacement(r_eff, *rest, ctx.spring_k, ctx.masses.get(b)),
            ));
        }
        ObservationCell::LeftCensored(c) => {
            // Known to lie below c: pull together only while too far apart.
            if r > *c {
                moves = Some((
                    spring_displacement(r_eff, *c, ctx.spring_k, ctx.masses.get(a)),
                    spring_displacement(r_eff, *c, ctx.spring_k, ctx.masses.get(b)),
                ));
            }
        }
        ObservationCell::RightCensored(c) => {
            // Known to lie above c: push apart only while too close.
            if r < *c {
                moves = Some((
                    spring_displacement(r_eff, *c, ctx.spring_k, ctx.masses.get(a)),
                    spring_displacement(r_eff, *c, ctx.spring_k, ctx.masses.get(b)),
                ));
            }
        }
    }

    let Some((toward_a, toward_b)) = moves else {
        return;
    };
    let toward_a = toward_a.clamp(-cap, cap);
    let toward_b = toward_b.clamp(-cap, cap);
    for k in 0..n {
        config.coords[(a, k)] += toward_a * axis[k];
        config.coords[(b, k)] -= toward_b * axis[k];
    }
}

/// Seeded starting configuration.
///
/// Coordinates are uniform over `[0, s)` per axis, with `s` the largest
/// observed dissimilarity; the first coordinate is then overwritten with a
/// value proportional to the object's position in the dissimilarity-driven
/// ordering of [`DissimilarityMatrix::spectral_order`], so the most mutually
/// distant objects start near opposite faces of the box.
pub fn initialize(d: &DissimilarityMatrix, dimension: usize, seed: u64) -> Result<Configuration> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    initialize_with_rng(d, dimension, &mut rng)
}

fn initialize_with_rng<R: Rng + ?Sized>(
    d: &DissimilarityMatrix,
    dimension: usize,
    rng: &mut R,
) -> Result<Configuration> {
    if dimension == 0 {
        return Err(TopolowError::Invalid("dimension must be at least 1".into()));
    }
    let s = d.max_observed().ok_or_else(|| {
        TopolowError::Invalid("matrix has no observed cells; nothing to embed".into())
    })?;
    let m = d.len();
    let mut coords = Array2::zeros((m, dimension));
    for i in 0..m {
        for k in 0..dimension {
            coords[(i, k)] = rng.random::<f64>() * s;
        }
    }
    let order = d.spectral_order();
    for (pos, &obj) in order.iter().enumerate() {
        coords[(obj, 0)] = s * pos as f64 / (m - 1) as f64;
    }
    Configuration::from_coords(coords)
}

/// Outcome of [`fit`].
#[derive(Debug, Clone)]
pub struct FitResult {
    pub configuration: Configuration,
    /// Exact-cell MAE recorded after each iteration; one entry per iteration
    /// actually run.
    pub mae_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub final_log_likelihood: f64,
    pub seed: u64,
}

impl FitResult {
    pub fn final_mae(&self) -> f64 {
        *self.mae_trace.last().expect("fit always runs at least one iteration")
    }
}

/// Embeds the matrix with the given hyperparameters.
///
/// Each iteration shuffles the unordered pairs with the seeded generator,
/// applies [`apply_pair_update`] to each in turn, cools the constants, and
/// records the exact-cell MAE. The run stops once the relative MAE change
/// stays below `options.rel_tolerance` for `options.patience` consecutive
/// iterations, or after `options.max_iterations`.
///
/// Runs with equal inputs and seed are bit-identical.
pub fn fit(
    d: &DissimilarityMatrix,
    params: &Hyperparameters,
    seed: u64,
    options: &FitOptions,
) -> Result<FitResult> {
    params.validate()?;
    options.validate()?;
    for (i, j, c) in d.off_diagonal() {
        if let Some(v) = c.magnitude() {
            if !v.is_finite() || v < 0.0 {
                return Err(TopolowError::Invalid(format!(
                    "cell ({}, {}) holds invalid value {v}",
                    d.labels()[i],
                    d.labels()[j]
                )));
            }
        }
    }
    if d.exact_count() == 0 {
        return Err(TopolowError::Invalid(
            "matrix has no exact cells; the fit trace needs at least one".into(),
        ));
    }

    let scale = d.max_observed().expect("exact cells exist");
    let masses = EffectiveMasses::compute(d);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut config = initialize_with_rng(d, params.dimension, &mut rng)?;

    let m = d.len();
    let mut pairs: Vec<(usize, usize, ObservationCell)> = Vec::with_capacity(m * (m - 1) / 2);
    for i in 0..m {
        for j in (i + 1)..m {
            pairs.push((i, j, d.pair_cell(i, j)));
        }
    }

    let mut mae_trace = Vec::new();
    let mut converged = false;
    let mut streak = 0usize;
    let mut prev = f64::NAN;
    let mut iterations = 0usize;
    for t in 0..options.max_iterations {
        let (k_t, c_t) = cool(
            params.spring_constant,
            params.repulsion_constant,
            params.cooling_rate,
            t,
        );
        let ctx = PairUpdateContext {
            spring_k: k_t,
            repulsion_c: c_t,
            masses: &masses,
            scale,
        };
        pairs.shuffle(&mut rng);
        for &(a, b, ref cell) in &pairs {
            apply_pair_update(&mut config, a, b, cell, &ctx, &mut rng);
            if !(config.row_is_finite(a) && config.row_is_finite(b)) {
                return Err(TopolowError::Numeric(format!(
                    "non-finite coordinate after updating pair ({}, {}) in iteration {}",
                    d.labels()[a],
                    d.labels()[b],
                    t + 1
                )));
            }
        }
        let mae_t = likelihood::mae(&config, d)?;
        mae_trace.push(mae_t);
        iterations = t + 1;
        if t > 0 {
            let rel = if prev > 0.0 {
                (mae_t - prev).abs() / prev
            } else if mae_t == prev {
                0.0
            } else {
                f64::INFINITY
            };
            if rel < options.rel_tolerance {
                streak += 1;
            } else {
                streak = 0;
            }
            if streak >= options.patience {
                converged = true;
            }
        }
        prev = mae_t;
        if converged {
            break;
        }
    }

    let final_log_likelihood = likelihood::log_likelihood_exact(&config, d)?;
    Ok(FitResult {
        configuration: config,
        mae_trace,
        iterations,
        converged,
        final_log_likelihood,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::auto_labels;
    use ndarray::arr2;
    use proptest::prelude::*;

    fn complete_matrix(values: &[&[f64]]) -> DissimilarityMatrix {
        let m = values.len();
        let mut cells = Array2::from_elem((m, m), ObservationCell::Missing);
        for i in 0..m {
            for j in 0..m {
                cells[(i, j)] = ObservationCell::Exact(values[i][j]);
            }
        }
        DissimilarityMatrix::new(auto_labels(m), cells).unwrap()
    }

    #[test]
    fn spring_displacement_worked_values() {
        // Overstretched pair: positive, i.e. toward the partner.
        let d = spring_displacement(2.0, 1.0, 1.0, 1.0);
        assert!((d - 0.4).abs() < 1e-15, "got {d}");
        // Compressed pair: negative, pushes away.
        let d = spring_displacement(1.0, 4.0, 2.0, 3.0);
        assert!((d + 6.0 / 7.0).abs() < 1e-15, "got {d}");
    }

    #[test]
    fn repulsive_displacement_worked_value() {
        let d = repulsive_displacement(1.0, 1.0, 1.0);
        assert!((d - 0.5).abs() < 1e-15);
    }

    #[test]
    fn effective_mass_counts_unordered_pairs() {
        let d = complete_matrix(&[
            &[0.0, 1.0, 2.0],
            &[1.0, 0.0, 3.0],
            &[2.0, 3.0, 0.0],
        ]);
        for a in 0..3 {
            assert_eq!(effective_mass(&d, a), 2.0);
        }
        let masses = EffectiveMasses::compute(&d);
        for a in 0..3 {
            assert_eq!(masses.get(a), effective_mass(&d, a));
        }

        // A pair observed in one direction only still counts once, and an
        // isolated object is floored at mass 1.
        let mut cells = Array2::from_elem((3, 3), ObservationCell::Missing);
        for i in 0..3 {
            cells[(i, i)] = ObservationCell::Exact(0.0);
        }
        cells[(0, 1)] = ObservationCell::Exact(2.0);
        let sparse = DissimilarityMatrix::new(auto_labels(3), cells).unwrap();
        assert_eq!(effective_mass(&sparse, 0), 1.0);
        assert_eq!(effective_mass(&sparse, 1), 1.0);
        assert_eq!(effective_mass(&sparse, 2), 1.0, "floor applies");
    }

    #[test]
    fn cooling_is_geometric() {
        let (k, c) = cool(1.0, 0.1, 0.01, 100);
        assert!((k - 0.99f64.powi(100)).abs() < 1e-15);
        assert!((c - 0.1 * 0.99f64.powi(100)).abs() < 1e-15);
        // Strictly decreasing in t.
        let mut prev = f64::INFINITY;
        for t in 0..50 {
            let (k_t, c_t) = cool(2.0, 0.05, 0.03, t);
            assert!(k_t < prev);
            assert!(c_t < k_t * 0.05 / 2.0 + 1e-15);
            prev = k_t;
        }
    }

    #[test]
    fn repulsion_separates_a_missing_pair() {
        let mut config = Configuration::from_coords(arr2(&[[0.0], [1.0]])).unwrap();
        let masses = EffectiveMasses(vec![1.0, 1.0]);
        let ctx = PairUpdateContext {
            spring_k: 1.0,
            repulsion_c: 1.0,
            masses: &masses,
            scale: 2.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        apply_pair_update(
            &mut config,
            0,
            1,
            &ObservationCell::Missing,
            &ctx,
            &mut rng,
        );
        // Each particle moves 0.5 away from the other.
        assert!((config.distance(0, 1) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn pair_update_touches_only_its_two_rows() {
        let mut config = Configuration::from_coords(arr2(&[
            [0.0, 0.0],
            [3.0, 0.0],
            [1.0, 5.0],
            [2.0, 2.0],
        ]))
        .unwrap();
        let before = config.clone();
        let d = complete_matrix(&[
            &[0.0, 1.0, 1.0, 1.0],
            &[1.0, 0.0, 1.0, 1.0],
            &[1.0, 1.0, 0.0, 1.0],
            &[1.0, 1.0, 1.0, 0.0],
        ]);
        let masses = EffectiveMasses::compute(&d);
        let ctx = PairUpdateContext {
            spring_k: 1.0,
            repulsion_c: 0.01,
            masses: &masses,
            scale: 1.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        apply_pair_update(
            &mut config,
            1,
            3,
            &ObservationCell::Exact(1.0),
            &ctx,
            &mut rng,
        );
        for i in [0usize, 2] {
            for k in 0..2 {
                assert_eq!(config.coords()[(i, k)], before.coords()[(i, k)]);
            }
        }
        assert_ne!(config.coords()[(1, 0)], before.coords()[(1, 0)]);
    }

    #[test]
    fn satisfied_censored_cells_exert_no_force() {
        let d = complete_matrix(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let masses = EffectiveMasses::compute(&d);
        let ctx = PairUpdateContext {
            spring_k: 2.0,
            repulsion_c: 0.1,
            masses: &masses,
            scale: 10.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(2);

        // Distance 6 already exceeds the "> 4" threshold.
        let mut config = Configuration::from_coords(arr2(&[[0.0], [6.0]])).unwrap();
        let before = config.clone();
        apply_pair_update(
            &mut config,
            0,
            1,
            &ObservationCell::RightCensored(4.0),
            &ctx,
            &mut rng,
        );
        assert_eq!(config, before, "satisfied right-censored cell must not move anything");

        // Distance 3 already sits below the "< 5" threshold.
        let mut config = Configuration::from_coords(arr2(&[[0.0], [3.0]])).unwrap();
        let before = config.clone();
        apply_pair_update(
            &mut config,
            0,
            1,
            &ObservationCell::LeftCensored(5.0),
            &ctx,
            &mut rng,
        );
        assert_eq!(config, before, "satisfied left-censored cell must not move anything");
    }

    #[test]
    fn violated_censored_cells_push_toward_their_threshold() {
        let d = complete_matrix(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let masses = EffectiveMasses::compute(&d);
        let ctx = PairUpdateContext {
            spring_k: 1.0,
            repulsion_c: 0.1,
            masses: &masses,
            scale: 10.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);

        // Too close for "> 4": the pair must separate.
        let mut config = Configuration::from_coords(arr2(&[[0.0], [1.0]])).unwrap();
        apply_pair_update(
            &mut config,
            0,
            1,
            &ObservationCell::RightCensored(4.0),
            &ctx,
            &mut rng,
        );
        assert!(config.distance(0, 1) > 1.0);

        // Too far for "< 2": the pair must contract.
        let mut config = Configuration::from_coords(arr2(&[[0.0], [7.0]])).unwrap();
        apply_pair_update(
            &mut config,
            0,
            1,
            &ObservationCell::LeftCensored(2.0),
            &ctx,
            &mut rng,
        );
        assert!(config.distance(0, 1) < 7.0);
    }

    #[test]
    fn overlapping_pair_separates_along_a_random_axis() {
        let mut config =
            Configuration::from_coords(arr2(&[[1.0, 1.0], [1.0, 1.0]])).unwrap();
        let d = complete_matrix(&[&[0.0, 3.0], &[3.0, 0.0]]);
        let masses = EffectiveMasses::compute(&d);
        let ctx = PairUpdateContext {
            spring_k: 1.0,
            repulsion_c: 0.1,
            masses: &masses,
            scale: 3.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        apply_pair_update(
            &mut config,
            0,
            1,
            &ObservationCell::Exact(3.0),
            &ctx,
            &mut rng,
        );
        let r = config.distance(0, 1);
        assert!(r > 0.0, "overlap must break");
        assert!(r <= 2.0 * DISPLACEMENT_CAP_FACTOR * 3.0 + 1e-12);
    }

    #[test]
    fn initialization_is_seeded_and_scaled() {
        let d = complete_matrix(&[
            &[0.0, 4.0, 2.0],
            &[4.0, 0.0, 1.0],
            &[2.0, 1.0, 0.0],
        ]);
        let a = initialize(&d, 3, 9).unwrap();
        let b = initialize(&d, 3, 9).unwrap();
        assert_eq!(a, b, "same seed, same start");
        let c = initialize(&d, 3, 10).unwrap();
        assert_ne!(a, c, "different seed, different start");
        let s = d.max_observed().unwrap();
        for v in a.coords().iter() {
            assert!((0.0..=s).contains(v));
        }
    }

    #[test]
    fn initialization_spreads_two_objects_across_the_scale() {
        let d = complete_matrix(&[&[0.0, 5.0], &[5.0, 0.0]]);
        let config = initialize(&d, 4, 0).unwrap();
        let gap = (config.coords()[(0, 0)] - config.coords()[(1, 0)]).abs();
        assert!((gap - 5.0).abs() < 1e-12, "first coordinates span [0, s]");
    }

    #[test]
    fn fit_two_points_recovers_their_distance() {
        let d = complete_matrix(&[&[0.0, 5.0], &[5.0, 0.0]]);
        let params = Hyperparameters {
            dimension: 2,
            spring_constant: 1.0,
            repulsion_constant: 0.01,
            cooling_rate: 0.01,
        };
        let result = fit(&d, &params, 7, &FitOptions::default()).unwrap();
        let r = result.configuration.distance(0, 1);
        assert!((r - 5.0).abs() <= 1e-3, "got {r}");
        assert_eq!(result.mae_trace.len(), result.iterations);
    }

    #[test]
    fn fit_recovers_a_planar_triangle() {
        let d = complete_matrix(&[
            &[0.0, 3.0, 4.0],
            &[3.0, 0.0, 5.0],
            &[4.0, 5.0, 0.0],
        ]);
        let params = Hyperparameters {
            dimension: 2,
            spring_constant: 1.0,
            repulsion_constant: 0.01,
            cooling_rate: 0.01,
        };
        let result = fit(&d, &params, 3, &FitOptions::default()).unwrap();
        assert!(result.converged);
        assert!(result.final_mae() < 0.01, "MAE {}", result.final_mae());
    }

    #[test]
    fn fit_handles_a_triangle_violation_gracefully() {
        // Sides 1, 1, 3 cannot be embedded; the fit must still settle.
        let d = complete_matrix(&[
            &[0.0, 1.0, 1.0],
            &[1.0, 0.0, 3.0],
            &[1.0, 3.0, 0.0],
        ]);
        let params = Hyperparameters {
            dimension: 2,
            spring_constant: 1.0,
            repulsion_constant: 0.01,
            cooling_rate: 0.01,
        };
        let result = fit(&d, &params, 11, &FitOptions::default()).unwrap();
        assert!(result.configuration.coords().iter().all(|v| v.is_finite()));
        assert!(result.final_mae() < 3.0);
    }

    #[test]
    fn fit_is_bit_identical_for_equal_seeds() {
        let d = complete_matrix(&[
            &[0.0, 3.0, 4.0, 6.0],
            &[3.0, 0.0, 5.0, 2.0],
            &[4.0, 5.0, 0.0, 3.0],
            &[6.0, 2.0, 3.0, 0.0],
        ]);
        let params = Hyperparameters {
            dimension: 3,
            spring_constant: 2.0,
            repulsion_constant: 0.02,
            cooling_rate: 0.02,
        };
        let opts = FitOptions {
            max_iterations: 50,
            ..FitOptions::default()
        };
        let a = fit(&d, &params, 123, &opts).unwrap();
        let b = fit(&d, &params, 123, &opts).unwrap();
        for (x, y) in a
            .configuration
            .coords()
            .iter()
            .zip(b.configuration.coords().iter())
        {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        assert_eq!(a.mae_trace, b.mae_trace);
    }

    #[test]
    fn fit_reports_final_likelihood_consistently() {
        let d = complete_matrix(&[
            &[0.0, 2.0, 3.0],
            &[2.0, 0.0, 4.0],
            &[3.0, 4.0, 0.0],
        ]);
        let params = Hyperparameters {
            dimension: 2,
            spring_constant: 1.0,
            repulsion_constant: 0.01,
            cooling_rate: 0.02,
        };
        let result = fit(&d, &params, 5, &FitOptions::default()).unwrap();
        let direct = likelihood::log_likelihood_exact(&result.configuration, &d).unwrap();
        let rel = (result.final_log_likelihood - direct).abs() / direct.abs().max(1.0);
        assert!(rel < 1e-12);
    }

    #[test]
    fn relaxed_configuration_stays_relaxed_under_small_springs() {
        // Statistical check: from a converged state, extra passes with a tiny
        // frozen spring constant must not degrade the MAE on average.
        let d = complete_matrix(&[
            &[0.0, 3.0, 4.0],
            &[3.0, 0.0, 5.0],
            &[4.0, 5.0, 0.0],
        ]);
        let params = Hyperparameters {
            dimension: 2,
            spring_constant: 1.0,
            repulsion_constant: 0.01,
            cooling_rate: 0.01,
        };
        let masses = EffectiveMasses::compute(&d);
        let mut before_sum = 0.0;
        let mut after_sum = 0.0;
        for seed in 0..10u64 {
            let result = fit(&d, &params, seed, &FitOptions::default()).unwrap();
            let mut config = result.configuration.clone();
            before_sum += result.final_mae();
            let ctx = PairUpdateContext {
                spring_k: 1e-3,
                repulsion_c: 0.0,
                masses: &masses,
                scale: 5.0,
            };
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);
            let mut pairs = vec![(0usize, 1usize), (0, 2), (1, 2)];
            for _ in 0..20 {
                pairs.shuffle(&mut rng);
                for &(a, b) in &pairs {
                    let cell = d.pair_cell(a, b);
                    apply_pair_update(&mut config, a, b, &cell, &ctx, &mut rng);
                }
            }
            after_sum += likelihood::mae(&config, &d).unwrap();
        }
        assert!(
            after_sum <= before_sum + 1e-6,
            "mean MAE grew from {} to {}",
            before_sum / 10.0,
            after_sum / 10.0
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn displacement_algebra_identity(
            k in 1e-3..100.0f64,
            mass in 1.0..1000.0f64,
            r in 1e-6..100.0f64,
            rest in 0.0..100.0f64,
        ) {
            // The static balance behind the update rule: k (2X - d) = 4 m d
            // with X the residual r - rest.
            let x = r - rest;
            let d = spring_displacement(r, rest, k, mass);
            let lhs = k * (2.0 * x - d);
            let rhs = 4.0 * mass * d;
            let scale = lhs.abs().max(rhs.abs()).max(1e-300);
            prop_assert!((lhs - rhs).abs() / scale < 1e-12);
        }

        #[test]
        fn spring_update_contracts_the_residual(
            k in 1e-3..10.0f64,
            mass in 1.0..50.0f64,
            r in 0.1..50.0f64,
            rest in 0.0..50.0f64,
        ) {
            prop_assume!(k < 4.0 * mass);
            // Partner held fixed: moving one particle by d scales the
            // residual by 1 - 2k/(4m + k), strictly inside (-1, 1).
            let d = spring_displacement(r, rest, k, mass);
            let factor = 1.0 - 2.0 * k / (4.0 * mass + k);
            prop_assert!(factor.abs() < 1.0);
            let new_residual = (r - d) - rest;
            let old_residual = r - rest;
            prop_assert!((new_residual - factor * old_residual).abs() < 1e-9);
        }

        #[test]
        fn pair_updates_respect_the_displacement_cap(
            x0 in -20.0..20.0f64,
            x1 in -20.0..20.0f64,
            k in 0.1..50.0f64,
            c in 0.001..10.0f64,
            rest in 0.0..10.0f64,
            missing in proptest::bool::ANY,
            seed in 0u64..1000,
        ) {
            let dmat = complete_matrix(&[&[0.0, 1.0], &[1.0, 0.0]]);
            let masses = EffectiveMasses::compute(&dmat);
            let scale = 4.0;
            let ctx = PairUpdateContext { spring_k: k, repulsion_c: c, masses: &masses, scale };
            let mut config = Configuration::from_coords(arr2(&[[x0], [x1]])).unwrap();
            let before = config.clone();
            let cell = if missing { ObservationCell::Missing } else { ObservationCell::Exact(rest) };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            apply_pair_update(&mut config, 0, 1, &cell, &ctx, &mut rng);
            let cap = DISPLACEMENT_CAP_FACTOR * scale + 1e-12;
            for i in 0..2 {
                let moved = (config.coords()[(i, 0)] - before.coords()[(i, 0)]).abs();
                prop_assert!(moved <= cap, "particle {i} moved {moved}, cap {cap}");
            }
        }
    }
}
