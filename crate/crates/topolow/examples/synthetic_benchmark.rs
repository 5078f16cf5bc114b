//! A miniature method comparison: one synthetic dataset variant, both
//! methods, a handful of replicates. The harness searches hyperparameters
//! once per variant, reruns only the fit per replicate, and scores
//! everything against the complete pre-masking matrix.

use topolow::bench::{run_plan, ExperimentPlan};
use topolow::engine::FitOptions;
use topolow::search::SearchBudget;

fn main() -> topolow::Result<()> {
    let plan = ExperimentPlan {
        sizes: vec![15],
        fractions: vec![0.3],
        replicates: 3,
        base_seed: 7,
        search_budget: SearchBudget {
            initial_samples: 6,
            amc_rounds: 1,
            batch_size: 3,
            folds: 4,
            fit_options: FitOptions {
                max_iterations: 250,
                ..FitOptions::default()
            },
        },
        ..ExperimentPlan::default()
    };

    let report = run_plan(&plan)?;
    for v in &report.variants {
        println!(
            "variant m={} fraction={}: deviation {:.2}, searched N={:?}",
            v.m,
            v.fraction,
            v.deviation_score,
            v.searched_params.map(|p| p.dimension)
        );
    }
    println!("method          mean stress   sd        mean r^2");
    for s in &report.summaries {
        println!(
            "{:<14}  {:>10.4}  {:>8.5}  {:>8.4}",
            s.method.name(),
            s.mean_stress,
            s.stress_sd,
            s.mean_r_squared
        );
    }
    // The deterministic baseline repeats one solution across replicates.
    let mds = report
        .summaries
        .iter()
        .find(|s| s.method.name() == "classical_mds")
        .expect("baseline summary present");
    assert_eq!(mds.stress_sd, 0.0);
    Ok(())
}
