//! Minimal end-to-end fit: six objects on a ring, one pair measured
//! asymmetrically, one pair not measured at all.

use ndarray::Array2;
use topolow::engine::{fit, FitOptions, Hyperparameters};
use topolow::matrix::{DissimilarityMatrix, ObservationCell};
use topolow::metrics;

fn main() -> topolow::Result<()> {
    let labels: Vec<String> = ["a", "b", "c", "d", "e", "f"]
        .iter()
        .map(|s| s.to_string())
        .collect();

    // True layout: a hexagon of radius 3.
    let point = |i: usize| {
        let t = i as f64 / 6.0 * std::f64::consts::TAU;
        (3.0 * t.cos(), 3.0 * t.sin())
    };
    let mut truth = Array2::zeros((6, 6));
    let mut cells = Array2::from_elem((6, 6), ObservationCell::Missing);
    for i in 0..6 {
        for j in 0..6 {
            if i == j {
                continue;
            }
            let (xi, yi) = point(i);
            let (xj, yj) = point(j);
            let d = ((xi - xj).powi(2) + (yi - yj).powi(2)).sqrt();
            truth[(i, j)] = d;
            cells[(i, j)] = ObservationCell::Exact(d);
        }
    }
    // The a->b reading came back 20% high; b->a is fine. The solver treats
    // the two directions as independent observations of one spring.
    if let ObservationCell::Exact(v) = cells[(0, 1)] {
        cells[(0, 1)] = ObservationCell::Exact(1.2 * v);
    }
    // c and f were never measured against each other.
    cells[(2, 5)] = ObservationCell::Missing;
    cells[(5, 2)] = ObservationCell::Missing;

    let d = DissimilarityMatrix::new(labels, cells)?;
    // Gentle cooling gives the layout time to untangle; aggressive rates
    // freeze early folds in place. The hyperparameter_search example picks
    // these values automatically.
    let params = Hyperparameters {
        dimension: 2,
        spring_constant: 3.0,
        repulsion_constant: 0.001,
        cooling_rate: 0.005,
    };
    let options = FitOptions {
        max_iterations: 3000,
        ..FitOptions::default()
    };
    let result = fit(&d, &params, 42, &options)?;

    println!(
        "converged: {} after {} iterations, final MAE {:.4}",
        result.converged,
        result.iterations,
        result.final_mae()
    );
    for (label, row) in d.labels().iter().zip(result.configuration.coords().rows()) {
        println!("  {label}: ({:+.3}, {:+.3})", row[0], row[1]);
    }

    let report = metrics::evaluate_embedding(&truth, &result.configuration.distance_matrix())?;
    println!(
        "vs the clean hexagon: stress {:.4}, r^2 {:.4}",
        report.normalized_stress, report.r_squared
    );
    Ok(())
}
