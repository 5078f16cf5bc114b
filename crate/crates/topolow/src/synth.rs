//! Synthetic dissimilarity data with controlled pathologies.
//!
//! The generator builds clustered points in a 10-dimensional latent space,
//! then deliberately damages their pairwise distances: a piecewise power map
//! bends short and long distances differently (breaking the triangle
//! inequality), and independent multiplicative noise per direction makes the
//! matrix asymmetric. Masking hides a chosen fraction of unordered pairs
//! while keeping the observation graph connected. The undamaged generator
//! coordinates and the complete distorted matrix are kept alongside the
//! sparse input so benchmarks can score reconstructions against the truth.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TopolowError};
use crate::matrix::{auto_labels, count_components, DissimilarityMatrix, ObservationCell};
use crate::seeding;

/// Latent space dimension of the generator.
pub const LATENT_DIMENSION: usize = 10;
/// Cluster centers are uniform over `[0, CENTER_BOX]` per coordinate.
pub const CENTER_BOX: f64 = 10.0;
/// Isotropic standard deviation of points around their center.
pub const CLUSTER_SIGMA: f64 = 1.0;
/// Exponents applied to the lower, middle, and upper tercile of distances.
pub const DISTORTION_POWERS: [f64; 3] = [0.5, 1.0, 1.5];
/// Multiplicative noise is `1 + u` with `u` uniform on `[0, NOISE_MAX)`.
pub const NOISE_MAX: f64 = 0.2;
/// Masking retries before giving up on a connected observation graph.
pub const MASK_ATTEMPTS: usize = 100;

/// Latent cluster structure behind a synthetic dataset.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    /// m x 10 point coordinates.
    pub coords: Array2<f64>,
    /// clusters x 10 cluster centers.
    pub centers: Array2<f64>,
    /// Cluster index per object (round-robin).
    pub assignments: Vec<usize>,
}

/// Clustered Gaussian points in the latent space.
pub fn generate_ground_truth(m: usize, clusters: usize, seed: u64) -> Result<GroundTruth> {
    if m < 2 {
        return Err(TopolowError::Invalid(format!(
            "need at least 2 objects, got {m}"
        )));
    }
    if clusters == 0 {
        return Err(TopolowError::Invalid("need at least 1 cluster".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = Array2::zeros((clusters, LATENT_DIMENSION));
    for c in 0..clusters {
        for k in 0..LATENT_DIMENSION {
            centers[(c, k)] = rng.random::<f64>() * CENTER_BOX;
        }
    }
    let assignments: Vec<usize> = (0..m).map(|i| i % clusters).collect();
    let mut coords = Array2::zeros((m, LATENT_DIMENSION));
    for i in 0..m {
        let c = assignments[i];
        for k in 0..LATENT_DIMENSION {
            let offset: f64 = rng.sample(StandardNormal);
            coords[(i, k)] = centers[(c, k)] + CLUSTER_SIGMA * offset;
        }
    }
    Ok(GroundTruth {
        coords,
        centers,
        assignments,
    })
}

/// The measured tercile boundaries a distortion was built around.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DistortionRecord {
    pub tercile_low: f64,
    pub tercile_high: f64,
    pub max_distance: f64,
}

impl DistortionRecord {
    /// The per-band power map: distances below the lower tercile are bent by
    /// exponent 0.5, the middle band is left alone, the top band is raised
    /// to 1.5. The bands disagree at the seams on purpose; those jumps plus
    /// the convex stretch of the top band are the non-metricity mechanism
    /// (near-tied distances land in different bands and violate triangle
    /// inequalities). Zero maps to zero and order is kept within each band.
    pub fn apply(&self, x: f64) -> f64 {
        let p = if x < self.tercile_low {
            DISTORTION_POWERS[0]
        } else if x < self.tercile_high {
            DISTORTION_POWERS[1]
        } else {
            DISTORTION_POWERS[2]
        };
        x.powf(p)
    }
}

/// Damages Euclidean distances into a complete, asymmetric, non-metric
/// dissimilarity matrix.
///
/// Distances pass through the tercile power map of [`DistortionRecord`], then
/// each directed cell is scaled by an independent `1 + U[0, NOISE_MAX)`
/// factor, so the two directions of a pair disagree. The diagonal stays
/// zero and no value goes negative.
pub fn distort(coords: &Array2<f64>, seed: u64) -> Result<(Array2<f64>, DistortionRecord)> {
    let m = coords.nrows();
    if m < 2 {
        return Err(TopolowError::Invalid(format!(
            "need at least 2 points, got {m}"
        )));
    }
    let mut euclid = Array2::zeros((m, m));
    for i in 0..m {
        for j in (i + 1)..m {
            let mut s = 0.0;
            for k in 0..coords.ncols() {
                let d = coords[(i, k)] - coords[(j, k)];
                s += d * d;
            }
            let r = s.sqrt();
            euclid[(i, j)] = r;
            euclid[(j, i)] = r;
        }
    }

    let mut sorted: Vec<f64> = Vec::with_capacity(m * (m - 1) / 2);
    for i in 0..m {
        for j in (i + 1)..m {
            sorted.push(euclid[(i, j)]);
        }
    }
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    let record = DistortionRecord {
        tercile_low: sorted[(n / 3).min(n - 1)],
        tercile_high: sorted[(2 * n / 3).min(n - 1)],
        max_distance: sorted[n - 1],
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Array2::zeros((m, m));
    for i in 0..m {
        for j in 0..m {
            if i == j {
                continue;
            }
            let bent = record.apply(euclid[(i, j)]);
            let noise = 1.0 + rng.random::<f64>() * NOISE_MAX;
            out[(i, j)] = (bent * noise).max(0.0);
        }
    }
    Ok((out, record))
}

/// Hides `floor(fraction * P)` of the P unordered pairs (both directions) of
/// a complete matrix, resampling up to [`MASK_ATTEMPTS`] times until the
/// observation graph stays connected.
pub fn mask(truth: &Array2<f64>, fraction: f64, seed: u64) -> Result<DissimilarityMatrix> {
    let m = truth.nrows();
    if truth.ncols() != m || m < 2 {
        return Err(TopolowError::Invalid(format!(
            "truth matrix must be square with at least 2 objects, got {}x{}",
            m,
            truth.ncols()
        )));
    }
    if !(0.0..1.0).contains(&fraction) {
        return Err(TopolowError::Invalid(format!(
            "mask fraction must lie in [0, 1), got {fraction}"
        )));
    }
    let mut all_pairs: Vec<(usize, usize)> = Vec::with_capacity(m * (m - 1) / 2);
    for i in 0..m {
        for j in (i + 1)..m {
            all_pairs.push((i, j));
        }
    }
    let total = all_pairs.len();
    let to_mask = (fraction * total as f64).floor() as usize;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MASK_ATTEMPTS {
        all_pairs.shuffle(&mut rng);
        let masked = &all_pairs[..to_mask];
        let kept = &all_pairs[to_mask..];
        if count_components(m, kept.iter().copied()) != 1 {
            continue;
        }
        let mut cells = Array2::from_elem((m, m), ObservationCell::Missing);
        for i in 0..m {
            cells[(i, i)] = ObservationCell::Exact(0.0);
        }
        for &(i, j) in kept {
            cells[(i, j)] = ObservationCell::Exact(truth[(i, j)]);
            cells[(j, i)] = ObservationCell::Exact(truth[(j, i)]);
        }
        let _ = masked; // both directions of masked pairs stay Missing
        return DissimilarityMatrix::new(auto_labels(m), cells);
    }
    Err(TopolowError::Invalid(format!(
        "masking left the observation graph disconnected in {MASK_ATTEMPTS} attempts; \
         lower the mask fraction (got {fraction})"
    )))
}

/// Converts the largest observed exact values of a matrix into
/// right-censored cells: values above the `(1 - top_fraction)` quantile are
/// replaced by `RightCensored(threshold)`.
pub fn censor_top(d: &DissimilarityMatrix, top_fraction: f64) -> Result<DissimilarityMatrix> {
    if !(0.0 < top_fraction && top_fraction < 1.0) {
        return Err(TopolowError::Invalid(format!(
            "censor fraction must lie in (0, 1), got {top_fraction}"
        )));
    }
    let mut values: Vec<f64> = d
        .off_diagonal()
        .filter_map(|(_, _, c)| match c {
            ObservationCell::Exact(v) => Some(*v),
            _ => None,
        })
        .collect();
    if values.is_empty() {
        return Err(TopolowError::Invalid(
            "censoring needs at least one exact cell".into(),
        ));
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let idx = (((1.0 - top_fraction) * values.len() as f64).floor() as usize)
        .min(values.len() - 1);
    let threshold = values[idx];
    let mut cells = d.cells().clone();
    for ((i, j), cell) in cells.indexed_iter_mut() {
        if i == j {
            continue;
        }
        if let ObservationCell::Exact(v) = cell {
            if *v > threshold {
                *cell = ObservationCell::RightCensored(threshold);
            }
        }
    }
    Ok(DissimilarityMatrix::from_cells_unchecked(
        d.labels().to_vec(),
        cells,
    ))
}

/// Everything the generator knows about one dataset, serialized alongside it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub objects: usize,
    pub clusters: usize,
    pub mask_fraction: f64,
    pub seed: u64,
    pub latent_dimension: usize,
    pub center_box: f64,
    pub cluster_sigma: f64,
    pub distortion_powers: [f64; 3],
    pub distortion: DistortionRecord,
    pub noise_max: f64,
    pub censor_top_fraction: Option<f64>,
}

/// A complete synthetic benchmark dataset.
#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub ground_truth: GroundTruth,
    /// Complete distorted matrix: the reference each method is scored against.
    pub truth_matrix: Array2<f64>,
    /// Sparse (and optionally censored) matrix handed to the methods.
    pub input: DissimilarityMatrix,
    pub params: GeneratorParams,
}

/// Full pipeline: clustered points, distortion, masking, optional censoring.
/// Deterministic in all arguments; stage seeds are derived from `seed`.
pub fn generate(
    m: usize,
    clusters: usize,
    mask_fraction: f64,
    seed: u64,
    censor_top_fraction: Option<f64>,
) -> Result<SyntheticDataset> {
    let ground_truth = generate_ground_truth(m, clusters, seeding::derive(seed, 1))?;
    let (truth_matrix, distortion) = distort(&ground_truth.coords, seeding::derive(seed, 2))?;
    let mut input = mask(&truth_matrix, mask_fraction, seeding::derive(seed, 3))?;
    if let Some(q) = censor_top_fraction {
        input = censor_top(&input, q)?;
    }
    Ok(SyntheticDataset {
        ground_truth,
        truth_matrix,
        input,
        params: GeneratorParams {
            objects: m,
            clusters,
            mask_fraction,
            seed,
            latent_dimension: LATENT_DIMENSION,
            center_box: CENTER_BOX,
            cluster_sigma: CLUSTER_SIGMA,
            distortion_powers: DISTORTION_POWERS,
            distortion,
            noise_max: NOISE_MAX,
            censor_top_fraction,
        },
    })
}
