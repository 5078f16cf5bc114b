//! Classical multidimensional scaling (double centering plus an
//! eigendecomposition) is the reference baseline. On clean Euclidean input
//! it is exact to machine precision; on non-metric input its core
//! assumption fails and the error becomes visible immediately. Missing
//! cells are median-imputed, so sparsity hurts it too.

use ndarray::Array2;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use topolow::matrix::DissimilarityMatrix;
use topolow::mds::{classical_mds, median_impute};
use topolow::matrix::auto_labels;
use topolow::metrics::{deviation_score, evaluate_embedding};
use topolow::synth;

fn main() -> topolow::Result<()> {
    // Clean case: 12 random points in the plane, all distances known.
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let m = 12;
    let mut truth = Array2::zeros((m, m));
    let pts: Vec<(f64, f64)> = (0..m)
        .map(|_| (4.0 * rng.random::<f64>(), 4.0 * rng.random::<f64>()))
        .collect();
    for i in 0..m {
        for j in 0..m {
            truth[(i, j)] = ((pts[i].0 - pts[j].0).powi(2) + (pts[i].1 - pts[j].1).powi(2)).sqrt();
        }
    }
    let config = classical_mds(&truth, 2)?;
    let clean = evaluate_embedding(&truth, &config.distance_matrix())?;
    println!(
        "Euclidean input:  deviation {:.2e}, stress {:.2e} (exact recovery)",
        deviation_score(&truth)?,
        clean.normalized_stress
    );

    // Non-metric case: the synthetic generator's distorted matrix.
    let dataset = synth::generate(12, 3, 0.0, 3, None)?;
    let config = classical_mds(&dataset.truth_matrix, 2)?;
    let bent = evaluate_embedding(&dataset.truth_matrix, &config.distance_matrix())?;
    println!(
        "distorted input:  deviation {:.2}, stress {:.3}",
        deviation_score(&dataset.truth_matrix)?,
        bent.normalized_stress
    );

    // Sparse case: median imputation fills the holes before centering.
    let masked = synth::mask(&dataset.truth_matrix, 0.4, 9)?;
    let filled = median_impute(&masked)?;
    let config = classical_mds(&filled, 2)?;
    let sparse = evaluate_embedding(&dataset.truth_matrix, &config.distance_matrix())?;
    println!("40% masked:       stress {:.3}", sparse.normalized_stress);

    // Sanity: imputation leaves observed symmetrized values alone.
    let d = DissimilarityMatrix::from_exact_dense(auto_labels(m), &truth)?;
    let untouched = median_impute(&d)?;
    assert_eq!(untouched, truth);
    Ok(())
}
