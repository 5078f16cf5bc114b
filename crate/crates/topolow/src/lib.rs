//! Embeds sparse, noisy, asymmetric, or censored dissimilarity matrices
//! into low-dimensional Euclidean space with a physics-inspired,
//! gradient-free solver: observed pairs pull on springs, unobserved pairs
//! repel, and the force constants cool until the layout settles.
//! Hyperparameters, the embedding dimension included, are picked by
//! cross-validated likelihood search, and a classical multidimensional
//! scaling baseline plus a synthetic non-metric data generator round out a
//! complete benchmarking loop.
//!
//! The fastest way in is the examples directory; each file is a runnable
//! walkthrough of one capability:
//!
//! - `embed_basic` - fit a small hand-written matrix with fixed parameters
//! - `similarity_to_distance` - convert assay-style similarity scores first
//! - `censored_observations` - threshold readings steer distances past them
//! - `hyperparameter_search` - cross-validated search, dimension included
//! - `classical_mds_baseline` - where double centering wins and breaks
//! - `synthetic_benchmark` - generate non-metric data, compare both methods
//! - `sparse_reconstruction` - recover geometry from a mostly masked matrix
//!
//! ```bash
//! cargo run --release -p topolow --example embed_basic
//! ```
//!
//! The same capabilities are scriptable through the `topolow` binary
//! (`euclidify`, `search`, `evaluate`, `simulate`, `bench`), which adds CSV
//! and JSON file formats, deterministic seeding, and replayable run
//! manifests on top of this API.
//!
//! Module map: [`matrix`] holds the observation types and matrix
//! containers, [`engine`] the embedding solver, [`likelihood`] the
//! Laplace-error model, [`search`] the hyperparameter search, [`mds`] the
//! baseline, [`metrics`] the evaluation measures, [`synth`] the data
//! generator, [`bench`] the experiment harness, [`io`] the file formats,
//! and [`cli`] the binary's front end.

pub mod bench;
pub mod cli;
pub mod engine;
pub mod error;
pub mod io;
pub mod likelihood;
pub mod matrix;
pub mod mds;
pub mod metrics;
pub mod search;
pub mod seeding;
pub mod synth;

pub use error::{Result, TopolowError};
