//! Similarity scores (bigger = more alike) become dissimilarities before
//! embedding. Scores from two-fold dilution assays live on a log2 scale, so
//! the conversion measures how many dilution steps a score sits below its
//! column's best: D[i][j] = log2(max_k S[k][j]) - log2(S[i][j]).

use ndarray::Array2;
use topolow::engine::{fit, FitOptions, Hyperparameters};
use topolow::matrix::{SimilarityMatrix, SimilarityTransform};

fn main() -> topolow::Result<()> {
    let labels: Vec<String> = ["w", "x", "y", "z"].iter().map(|s| s.to_string()).collect();

    // Titer-style panel: diagonal holds each column's homologous (highest)
    // score; one cell was never assayed.
    let raw = [
        [1280.0, 320.0, 80.0, 40.0],
        [640.0, 1280.0, 160.0, 80.0],
        [80.0, 160.0, 640.0, 320.0],
        [40.0, 80.0, 320.0, 1280.0],
    ];
    let mut values: Array2<Option<f64>> = Array2::from_elem((4, 4), None);
    for i in 0..4 {
        for j in 0..4 {
            values[(i, j)] = Some(raw[i][j]);
        }
    }
    values[(0, 3)] = None;

    let s = SimilarityMatrix::new(labels, values)?;
    let d = s.to_dissimilarity(SimilarityTransform::Log { base: 2.0 })?;

    println!("dissimilarities (dilution steps below the column max):");
    for i in 0..4 {
        let row: Vec<String> = (0..4)
            .map(|j| match d.cell(i, j).magnitude() {
                Some(v) => format!("{v:4.1}"),
                None => "  NA".to_string(),
            })
            .collect();
        println!("  {} [{}]", d.labels()[i], row.join(" "));
    }

    let params = Hyperparameters {
        dimension: 2,
        spring_constant: 1.0,
        repulsion_constant: 0.01,
        cooling_rate: 0.02,
    };
    let result = fit(&d, &params, 7, &FitOptions::default())?;
    println!("embedded at MAE {:.3}:", result.final_mae());
    for (label, row) in d.labels().iter().zip(result.configuration.coords().rows()) {
        println!("  {label}: ({:+.3}, {:+.3})", row[0], row[1]);
    }
    Ok(())
}
