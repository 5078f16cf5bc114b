//! Measurements that saturated at a detection limit are thresholds, not
//! values. A reading of ">4" only pushes two objects apart while they sit
//! closer than 4; once past the threshold it goes quiet. The likelihood
//! accounts for these cells through the Laplace tail probabilities.

use ndarray::Array2;
use topolow::engine::{fit, FitOptions, Hyperparameters};
use topolow::likelihood::{log_likelihood_censored, LaplaceScale};
use topolow::matrix::{DissimilarityMatrix, ObservationCell};

fn main() -> topolow::Result<()> {
    // Four points on a line at 0, 1, 2, 6. The 0-6 pair maxed out the
    // instrument at 4; every other pair was measured exactly.
    let positions: [f64; 4] = [0.0, 1.0, 2.0, 6.0];
    let labels: Vec<String> = ["p", "q", "r", "s"].iter().map(|s| s.to_string()).collect();
    let mut cells = Array2::from_elem((4, 4), ObservationCell::Missing);
    for i in 0..4 {
        for j in 0..4 {
            if i != j {
                cells[(i, j)] = ObservationCell::Exact((positions[i] - positions[j]).abs());
            }
        }
    }
    cells[(0, 3)] = ObservationCell::RightCensored(4.0);
    cells[(3, 0)] = ObservationCell::RightCensored(4.0);

    let d = DissimilarityMatrix::new(labels, cells)?;
    let params = Hyperparameters {
        dimension: 1,
        spring_constant: 1.0,
        repulsion_constant: 0.005,
        cooling_rate: 0.02,
    };
    let result = fit(&d, &params, 11, &FitOptions::default())?;

    let dist = result.configuration.distance_matrix();
    println!("embedded distances (true p-s gap is 6, reported only as >4):");
    println!("  p-q {:.3}  (true 1)", dist[(0, 1)]);
    println!("  q-r {:.3}  (true 1)", dist[(1, 2)]);
    println!("  r-s {:.3}  (true 4)", dist[(2, 3)]);
    println!("  p-s {:.3}  (threshold 4)", dist[(0, 3)]);
    assert!(
        dist[(0, 3)] > 4.0 - 0.1,
        "the censored pair must not land below its threshold"
    );

    let scale = LaplaceScale::from_fit(&result.configuration, &d)?;
    let breakdown = log_likelihood_censored(&result.configuration, &d, scale)?;
    println!(
        "log-likelihood {:.3} = exact {:.3} + right-censored {:.3} \
         ({} exact cells, {} censored)",
        breakdown.total,
        breakdown.exact_term,
        breakdown.right_censored_term,
        breakdown.n_exact,
        breakdown.n_right_censored
    );
    Ok(())
}
