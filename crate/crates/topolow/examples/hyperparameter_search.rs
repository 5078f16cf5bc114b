//! Cross-validated hyperparameter search on a synthetic dataset. Latin
//! hypercube samples seed the space, then adaptive refinement rounds draw
//! new candidates near the likelihood mass found so far. The embedding
//! dimension is searched like any other parameter.

use topolow::engine::FitOptions;
use topolow::search::{self, ParamRange, ParameterRanges, Scale, SearchBudget};
use topolow::synth;

fn main() -> topolow::Result<()> {
    // 18 objects in 3 clusters, 20% of pairs hidden.
    let dataset = synth::generate(18, 3, 0.2, 5, None)?;

    let ranges = ParameterRanges {
        dimension: ParamRange::new(2.0, 6.0, Scale::Linear, true)?,
        ..ParameterRanges::default()
    };
    let budget = SearchBudget {
        initial_samples: 10,
        amc_rounds: 2,
        batch_size: 5,
        folds: 4,
        fit_options: FitOptions {
            max_iterations: 250,
            ..FitOptions::default()
        },
    };
    let result = search::search(&dataset.input, &ranges, &budget, 42)?;

    println!("scored {} candidates; the best five:", result.samples.len());
    let mut ranked: Vec<_> = result.samples.iter().collect();
    ranked.sort_by(|a, b| b.cv_log_likelihood.partial_cmp(&a.cv_log_likelihood).unwrap());
    println!("    N      k0        c0     alpha   cv logL");
    for s in ranked.iter().take(5) {
        println!(
            "    {}  {:7.3}  {:8.5}  {:8.5}  {:8.1}",
            s.params.dimension,
            s.params.spring_constant,
            s.params.repulsion_constant,
            s.params.cooling_rate,
            s.cv_log_likelihood
        );
    }
    let best = &result.best;
    println!(
        "selected N={} (k0={:.3}, c0={:.5}, alpha={:.5})",
        best.params.dimension,
        best.params.spring_constant,
        best.params.repulsion_constant,
        best.params.cooling_rate
    );
    if best.skipped_folds() > 0 {
        println!(
            "note: {} of {} folds were skipped for the winner (disconnected \
             training graph or empty validation set)",
            best.skipped_folds(),
            best.fold_maes.len()
        );
    }
    Ok(())
}
