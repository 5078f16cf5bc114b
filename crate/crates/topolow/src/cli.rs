//! Command-line front end: one binary, five subcommands, deterministic
//! file-based workflows. Each subcommand honors `--seed` (falling back to
//! the `EUCLIDIFY_SEED` environment variable, then to a fixed default) and
//! writes a run manifest whose resolved argument vector replays the run
//! byte-identically, timings aside.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::bench::{self, ExperimentPlan, Method};
use crate::engine::{Configuration, FitOptions, FitResult, Hyperparameters};
use crate::io;
use crate::likelihood::{self, LaplaceScale, LikelihoodBreakdown};
use crate::matrix::{DissimilarityMatrix, ObservationCell, SimilarityTransform};
use crate::metrics;
use crate::search::{self, ParamRange, ParameterRanges, Scale, SearchBudget};
use crate::seeding;
use crate::synth;
use crate::{Result, TopolowError};

/// Seed used when neither `--seed` nor the environment provides one.
pub const DEFAULT_SEED: u64 = 42;

/// Environment variable consulted when `--seed` is absent.
pub const SEED_ENV_VAR: &str = "EUCLIDIFY_SEED";

// Distinct streams so the search and the final fit never share a generator.
const SEARCH_SEED_STREAM: u64 = 1;
const FIT_SEED_STREAM: u64 = 2;

/// Record of one successful run, written as `manifest.json` next to the
/// outputs. `argv` holds every option fully resolved; rerunning it
/// reproduces the outputs byte for byte, `wall_clock_seconds` aside.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    /// Resolved argument vector, without the program name.
    pub argv: Vec<String>,
    pub seeds: Vec<u64>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub tool_version: String,
    pub wall_clock_seconds: f64,
}

#[derive(Parser)]
#[command(
    name = "topolow",
    version,
    about = "Embed sparse, noisy, asymmetric, or censored dissimilarities into Euclidean space"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Cap on concurrent evaluations (default: all cores).
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    jobs: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Embed a dissimilarity matrix; searches hyperparameters unless all
    /// four are given.
    Euclidify(EuclidifyArgs),
    /// Cross-validated hyperparameter and dimension search.
    Search(SearchArgs),
    /// Score an embedding against a complete reference matrix.
    Evaluate(EvaluateArgs),
    /// Generate a synthetic non-metric benchmark dataset.
    Simulate(SimulateArgs),
    /// Run a benchmark plan comparing methods over a dataset grid.
    Bench(BenchArgs),
}

#[derive(Args)]
struct BudgetArgs {
    /// Initial Latin hypercube samples.
    #[arg(long, default_value_t = SearchBudget::default().initial_samples)]
    initial: usize,
    /// Adaptive refinement rounds after the initial batch.
    #[arg(long = "amc-rounds", default_value_t = SearchBudget::default().amc_rounds)]
    amc_rounds: usize,
    /// Candidates per refinement round.
    #[arg(long, default_value_t = SearchBudget::default().batch_size)]
    batch: usize,
    /// Cross-validation folds.
    #[arg(long, default_value_t = SearchBudget::default().folds)]
    folds: usize,
    /// Iteration cap per fit.
    #[arg(long = "max-iterations", default_value_t = FitOptions::default().max_iterations)]
    max_iterations: usize,
}

impl BudgetArgs {
    fn to_budget(&self) -> SearchBudget {
        SearchBudget {
            initial_samples: self.initial,
            amc_rounds: self.amc_rounds,
            batch_size: self.batch,
            folds: self.folds,
            fit_options: FitOptions {
                max_iterations: self.max_iterations,
                ..FitOptions::default()
            },
        }
    }

    fn push_argv(&self, argv: &mut Vec<String>) {
        push_flag(argv, "--initial", self.initial);
        push_flag(argv, "--amc-rounds", self.amc_rounds);
        push_flag(argv, "--batch", self.batch);
        push_flag(argv, "--folds", self.folds);
        push_flag(argv, "--max-iterations", self.max_iterations);
    }
}

#[derive(Args)]
struct RangeArgs {
    /// Smallest dimension to consider.
    #[arg(long = "min-dim", default_value_t = 2)]
    min_dim: usize,
    /// Largest dimension to consider.
    #[arg(long = "max-dim", default_value_t = 10)]
    max_dim: usize,
    /// Spring-constant bounds as LO:HI (log-uniform).
    #[arg(long = "k0-range", default_value = "0.1:10", value_parser = parse_bounds)]
    k0_range: (f64, f64),
    /// Repulsion-constant bounds as LO:HI (log-uniform).
    #[arg(long = "c0-range", default_value = "0.001:0.1", value_parser = parse_bounds)]
    c0_range: (f64, f64),
    /// Cooling-rate bounds as LO:HI (log-uniform).
    #[arg(long = "alpha-range", default_value = "0.001:0.1", value_parser = parse_bounds)]
    alpha_range: (f64, f64),
}

impl RangeArgs {
    fn to_ranges(&self) -> Result<ParameterRanges> {
        Ok(ParameterRanges {
            dimension: ParamRange::new(
                self.min_dim as f64,
                self.max_dim as f64,
                Scale::Linear,
                true,
            )?,
            spring_constant: ParamRange::new(
                self.k0_range.0,
                self.k0_range.1,
                Scale::Logarithmic,
                false,
            )?,
            repulsion_constant: ParamRange::new(
                self.c0_range.0,
                self.c0_range.1,
                Scale::Logarithmic,
                false,
            )?,
            cooling_rate: ParamRange::new(
                self.alpha_range.0,
                self.alpha_range.1,
                Scale::Logarithmic,
                false,
            )?,
        })
    }

    fn push_argv(&self, argv: &mut Vec<String>) {
        push_flag(argv, "--min-dim", self.min_dim);
        push_flag(argv, "--max-dim", self.max_dim);
        push_flag(argv, "--k0-range", format_bounds(self.k0_range));
        push_flag(argv, "--c0-range", format_bounds(self.c0_range));
        push_flag(argv, "--alpha-range", format_bounds(self.alpha_range));
    }
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct EuclidifyArgs {
    /// Input matrix, long or wide CSV.
    input: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Embedding dimension; with --k0, --c0, and --alpha skips the search.
    #[arg(long, requires_all = ["k0", "c0", "alpha"])]
    dim: Option<usize>,
    /// Initial spring constant.
    #[arg(long, requires_all = ["dim", "c0", "alpha"])]
    k0: Option<f64>,
    /// Initial repulsion constant.
    #[arg(long, requires_all = ["dim", "k0", "alpha"])]
    c0: Option<f64>,
    /// Cooling rate.
    #[arg(long, requires_all = ["dim", "k0", "c0"])]
    alpha: Option<f64>,
    /// Treat the input as similarities and convert before embedding.
    #[arg(long)]
    similarity: bool,
    /// Similarity transform: identity, ln, log2, log10, or log:<base>.
    #[arg(long, default_value = "identity", value_parser = parse_transform, requires = "similarity")]
    transform: SimilarityTransform,
    #[command(flatten)]
    budget: BudgetArgs,
    #[command(flatten)]
    ranges: RangeArgs,
}

#[derive(Args)]
struct SearchArgs {
    /// Input dissimilarity matrix, long or wide CSV.
    input: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    budget: BudgetArgs,
    #[command(flatten)]
    ranges: RangeArgs,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Complete reference dissimilarity matrix CSV.
    truth: PathBuf,
    /// Embedding coordinates CSV (label,dim_1,...).
    #[arg(long, required_unless_present = "embedded", conflicts_with = "embedded")]
    coords: Option<PathBuf>,
    /// Complete embedded-distance matrix CSV.
    #[arg(long)]
    embedded: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Also render a minimal Shepard scatter.
    #[arg(long)]
    svg: bool,
    /// Method name recorded in the report.
    #[arg(long, default_value = "embedding")]
    method: String,
    /// Dataset name recorded in the report (default: truth file stem).
    #[arg(long)]
    dataset: Option<String>,
    /// Replicate index recorded in the report.
    #[arg(long, default_value_t = 0)]
    replicate: usize,
}

#[derive(Args)]
struct SimulateArgs {
    /// Number of objects.
    #[arg(long)]
    m: usize,
    /// Number of latent clusters.
    #[arg(long, default_value_t = 5)]
    clusters: usize,
    /// Fraction of unordered pairs to mask.
    #[arg(long, default_value_t = 0.3)]
    fraction: f64,
    #[arg(long)]
    seed: Option<u64>,
    /// Right-censor this fraction of the largest observed values.
    #[arg(long = "censor-top")]
    censor_top: Option<f64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Preset {
    /// Mask fractions 0.3, 0.6, 0.9 on one geometry per size.
    Sparsity,
    /// Sizes 25, 50, 100 at mask fraction 0.3.
    Scale,
}

impl Preset {
    fn name(self) -> &'static str {
        match self {
            Preset::Sparsity => "sparsity",
            Preset::Scale => "scale",
        }
    }
}

#[derive(Args)]
struct BenchArgs {
    /// Plan JSON; every grid flag below is then ignored.
    #[arg(long)]
    plan: Option<PathBuf>,
    /// Named experiment preset; overrides the corresponding grid axis.
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// Object counts, comma separated.
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    /// Mask fractions, comma separated.
    #[arg(long, value_delimiter = ',')]
    fractions: Option<Vec<f64>>,
    #[arg(long, default_value_t = 5)]
    clusters: usize,
    /// Stochastic-method repeats per dataset variant.
    #[arg(long)]
    replicates: Option<usize>,
    /// Methods to run, comma separated (topolow, classical_mds).
    #[arg(long, value_delimiter = ',', value_parser = parse_method)]
    methods: Option<Vec<Method>>,
    #[arg(long)]
    seed: Option<u64>,
    /// Fixed dimension for classical MDS (default: borrow the searched one).
    #[arg(long = "mds-dim")]
    mds_dim: Option<usize>,
    #[command(flatten)]
    budget: BudgetArgs,
    /// Output root; results land in a subdirectory named by the plan hash.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn parse_bounds(s: &str) -> std::result::Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| format!("expected LO:HI, got {s:?}"))?;
    let lo: f64 = lo
        .trim()
        .parse()
        .map_err(|_| format!("bad lower bound {lo:?}"))?;
    let hi: f64 = hi
        .trim()
        .parse()
        .map_err(|_| format!("bad upper bound {hi:?}"))?;
    Ok((lo, hi))
}

fn format_bounds(b: (f64, f64)) -> String {
    format!("{}:{}", b.0, b.1)
}

fn parse_transform(s: &str) -> std::result::Result<SimilarityTransform, String> {
    s.parse().map_err(|e: TopolowError| e.to_string())
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse().map_err(|e: TopolowError| e.to_string())
}

fn push_flag(argv: &mut Vec<String>, flag: &str, value: impl ToString) {
    argv.push(flag.to_string());
    argv.push(value.to_string());
}

fn resolve_seed(flag: Option<u64>) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_ENV_VAR) {
        Ok(text) => text.trim().parse::<u64>().map_err(|_| {
            TopolowError::parse(
                SEED_ENV_VAR,
                format!("expected an unsigned integer seed, got {text:?}"),
            )
        }),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn create_out_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path)?;
    Ok(())
}

/// Converts a fully exact matrix into dense values; anything missing or
/// censored is a validation error.
fn dense_from_complete(d: &DissimilarityMatrix, what: &str) -> Result<Array2<f64>> {
    let m = d.len();
    let mut out = Array2::zeros((m, m));
    for (i, j, cell) in d.off_diagonal() {
        match cell {
            ObservationCell::Exact(v) => out[(i, j)] = *v,
            _ => {
                return Err(TopolowError::Invalid(format!(
                    "{what} must be complete with exact values; cell ({}, {}) is not",
                    d.labels()[i],
                    d.labels()[j]
                )))
            }
        }
    }
    Ok(out)
}

fn check_embeddable(d: &DissimilarityMatrix) -> Result<()> {
    let report = d.validate();
    if !report.is_connected() {
        return Err(TopolowError::Invalid(format!(
            "observation graph splits into {} components; every object needs \
             an observed path to every other",
            report.components
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct FitMetadata {
    seed: u64,
    fit_seed: u64,
    params: Hyperparameters,
    searched: bool,
    iterations: usize,
    converged: bool,
    final_mae: f64,
    final_log_likelihood: f64,
    likelihood: LikelihoodBreakdown,
}

fn fit_metadata(
    fit: &FitResult,
    d: &DissimilarityMatrix,
    seed: u64,
    searched: bool,
    params: Hyperparameters,
) -> Result<FitMetadata> {
    let scale = LaplaceScale::from_fit(&fit.configuration, d)?;
    let breakdown = likelihood::log_likelihood_censored(&fit.configuration, d, scale)?;
    Ok(FitMetadata {
        seed,
        fit_seed: fit.seed,
        params,
        searched,
        iterations: fit.iterations,
        converged: fit.converged,
        final_mae: fit.final_mae(),
        final_log_likelihood: fit.final_log_likelihood,
        likelihood: breakdown,
    })
}

fn write_manifest(
    out_dir: &Path,
    subcommand: &str,
    argv: Vec<String>,
    seeds: Vec<u64>,
    inputs: Vec<String>,
    outputs: Vec<String>,
    started: Instant,
) -> Result<()> {
    let manifest = RunManifest {
        subcommand: subcommand.to_string(),
        argv,
        seeds,
        inputs,
        outputs,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    io::write_json(&out_dir.join("manifest.json"), &manifest)
}

fn cmd_euclidify(args: &EuclidifyArgs, jobs: Option<u64>) -> Result<()> {
    let started = Instant::now();
    let seed = resolve_seed(args.seed)?;
    let d = if args.similarity {
        io::read_similarity(&args.input)?.to_dissimilarity(args.transform)?
    } else {
        io::read_dissimilarity(&args.input)?
    };
    check_embeddable(&d)?;
    create_out_dir(&args.out)?;

    let budget = args.budget.to_budget();
    let mut outputs = Vec::new();
    let (params, searched) = match (args.dim, args.k0, args.c0, args.alpha) {
        (Some(dim), Some(k0), Some(c0), Some(alpha)) => (
            Hyperparameters {
                dimension: dim,
                spring_constant: k0,
                repulsion_constant: c0,
                cooling_rate: alpha,
            },
            false,
        ),
        _ => {
            let ranges = args.ranges.to_ranges()?;
            let result = search::search(&d, &ranges, &budget, seeding::derive(seed, SEARCH_SEED_STREAM))?;
            let history_path = args.out.join("history.csv");
            io::write_history_csv(&history_path, &result.samples)?;
            outputs.push(path_str(&history_path));
            (result.best.params, true)
        }
    };

    let fit = crate::engine::fit(
        &d,
        &params,
        seeding::derive(seed, FIT_SEED_STREAM),
        &budget.fit_options,
    )?;

    let coords_path = args.out.join("coordinates.csv");
    io::write_coordinates(&coords_path, d.labels(), fit.configuration.coords())?;
    outputs.push(path_str(&coords_path));

    let metadata = fit_metadata(&fit, &d, seed, searched, params)?;
    let metadata_path = args.out.join("metadata.json");
    io::write_json(&metadata_path, &metadata)?;
    outputs.push(path_str(&metadata_path));

    let mut argv = vec!["euclidify".to_string(), path_str(&args.input)];
    push_flag(&mut argv, "--out", path_str(&args.out));
    push_flag(&mut argv, "--seed", seed);
    if !searched {
        push_flag(&mut argv, "--dim", params.dimension);
        push_flag(&mut argv, "--k0", params.spring_constant);
        push_flag(&mut argv, "--c0", params.repulsion_constant);
        push_flag(&mut argv, "--alpha", params.cooling_rate);
    }
    if args.similarity {
        argv.push("--similarity".to_string());
        let transform = match args.transform {
            SimilarityTransform::Identity => "identity".to_string(),
            SimilarityTransform::Log { base } => format!("log:{base}"),
        };
        push_flag(&mut argv, "--transform", transform);
    }
    args.budget.push_argv(&mut argv);
    args.ranges.push_argv(&mut argv);
    if let Some(j) = jobs {
        push_flag(&mut argv, "--jobs", j);
    }
    write_manifest(
        &args.out,
        "euclidify",
        argv,
        vec![seed],
        vec![path_str(&args.input)],
        outputs,
        started,
    )
}

fn cmd_search(args: &SearchArgs, jobs: Option<u64>) -> Result<()> {
    let started = Instant::now();
    let seed = resolve_seed(args.seed)?;
    let d = io::read_dissimilarity(&args.input)?;
    check_embeddable(&d)?;
    create_out_dir(&args.out)?;

    let ranges = args.ranges.to_ranges()?;
    let budget = args.budget.to_budget();
    let result = search::search(&d, &ranges, &budget, seeding::derive(seed, SEARCH_SEED_STREAM))?;

    let history_path = args.out.join("history.csv");
    io::write_history_csv(&history_path, &result.samples)?;
    let best_path = args.out.join("best.json");
    io::write_json(&best_path, &result.best)?;

    let mut argv = vec!["search".to_string(), path_str(&args.input)];
    push_flag(&mut argv, "--out", path_str(&args.out));
    push_flag(&mut argv, "--seed", seed);
    args.budget.push_argv(&mut argv);
    args.ranges.push_argv(&mut argv);
    if let Some(j) = jobs {
        push_flag(&mut argv, "--jobs", j);
    }
    write_manifest(
        &args.out,
        "search",
        argv,
        vec![seed],
        vec![path_str(&args.input)],
        vec![path_str(&history_path), path_str(&best_path)],
        started,
    )
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<()> {
    let started = Instant::now();
    let truth = io::read_dissimilarity(&args.truth)?;
    let reference = dense_from_complete(&truth, "reference matrix")?;

    let embedded = match (&args.coords, &args.embedded) {
        (Some(coords_path), None) => {
            let (labels, coords) = io::read_coordinates(coords_path)?;
            if labels != truth.labels() {
                return Err(TopolowError::Invalid(format!(
                    "coordinate labels do not match the reference matrix \
                     ({} vs {} objects, or differing order)",
                    labels.len(),
                    truth.len()
                )));
            }
            Configuration::from_coords(coords)?.distance_matrix()
        }
        (None, Some(embedded_path)) => {
            let d = io::read_dissimilarity(embedded_path)?;
            if d.labels() != truth.labels() {
                return Err(TopolowError::Invalid(
                    "embedded matrix labels do not match the reference matrix".into(),
                ));
            }
            dense_from_complete(&d, "embedded matrix")?
        }
        _ => unreachable!("clap enforces exactly one of --coords/--embedded"),
    };

    create_out_dir(&args.out)?;
    let report = metrics::evaluate_embedding(&reference, &embedded)?;
    let pairs = metrics::shepard_pairs(&reference, &embedded)?;
    let dataset = args.dataset.clone().unwrap_or_else(|| {
        args.truth
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".to_string())
    });

    let report_path = args.out.join("report.csv");
    io::write_report_csv(&report_path, &report, &args.method, &dataset, args.replicate)?;
    let shepard_path = args.out.join("shepard.csv");
    io::write_shepard_csv(&shepard_path, &pairs, &args.method)?;
    let mut outputs = vec![path_str(&report_path), path_str(&shepard_path)];
    if args.svg {
        let svg_path = args.out.join("shepard.svg");
        io::write_shepard_svg(&svg_path, &pairs)?;
        outputs.push(path_str(&svg_path));
    }

    let mut argv = vec!["evaluate".to_string(), path_str(&args.truth)];
    let mut inputs = vec![path_str(&args.truth)];
    if let Some(p) = &args.coords {
        push_flag(&mut argv, "--coords", path_str(p));
        inputs.push(path_str(p));
    }
    if let Some(p) = &args.embedded {
        push_flag(&mut argv, "--embedded", path_str(p));
        inputs.push(path_str(p));
    }
    push_flag(&mut argv, "--out", path_str(&args.out));
    if args.svg {
        argv.push("--svg".to_string());
    }
    push_flag(&mut argv, "--method", &args.method);
    push_flag(&mut argv, "--dataset", &dataset);
    push_flag(&mut argv, "--replicate", args.replicate);
    write_manifest(&args.out, "evaluate", argv, vec![], inputs, outputs, started)
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let started = Instant::now();
    let seed = resolve_seed(args.seed)?;
    let dataset = synth::generate(args.m, args.clusters, args.fraction, seed, args.censor_top)?;
    create_out_dir(&args.out)?;

    let labels = dataset.input.labels().to_vec();
    let truth_path = args.out.join("truth.csv");
    io::write_wide_dense(&truth_path, &labels, &dataset.truth_matrix)?;
    let input_path = args.out.join("input.csv");
    io::write_wide_csv(&input_path, &dataset.input)?;
    let coords_path = args.out.join("coords.csv");
    io::write_coordinates(&coords_path, &labels, &dataset.ground_truth.coords)?;
    let params_path = args.out.join("params.json");
    io::write_json(&params_path, &dataset.params)?;

    let mut argv = vec!["simulate".to_string()];
    push_flag(&mut argv, "--m", args.m);
    push_flag(&mut argv, "--clusters", args.clusters);
    push_flag(&mut argv, "--fraction", args.fraction);
    push_flag(&mut argv, "--seed", seed);
    if let Some(q) = args.censor_top {
        push_flag(&mut argv, "--censor-top", q);
    }
    push_flag(&mut argv, "--out", path_str(&args.out));
    write_manifest(
        &args.out,
        "simulate",
        argv,
        vec![seed],
        vec![],
        vec![
            path_str(&truth_path),
            path_str(&input_path),
            path_str(&coords_path),
            path_str(&params_path),
        ],
        started,
    )
}

fn cmd_bench(args: &BenchArgs, jobs: Option<u64>) -> Result<()> {
    let started = Instant::now();
    let seed = resolve_seed(args.seed)?;

    let (plan, from_file) = match &args.plan {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            let plan: ExperimentPlan = serde_json::from_str(&text)?;
            (plan, true)
        }
        None => {
            let mut plan = ExperimentPlan {
                base_seed: seed,
                clusters: args.clusters,
                search_budget: args.budget.to_budget(),
                mds_dimension: args.mds_dim,
                ..ExperimentPlan::default()
            };
            if let Some(sizes) = &args.sizes {
                plan.sizes = sizes.clone();
            }
            if let Some(fractions) = &args.fractions {
                plan.fractions = fractions.clone();
            }
            if let Some(replicates) = args.replicates {
                plan.replicates = replicates;
            }
            if let Some(methods) = &args.methods {
                plan.methods = methods.clone();
            }
            (plan, false)
        }
    };

    let report = match args.preset {
        Some(Preset::Sparsity) => bench::sparsity_sweep(&plan)?,
        Some(Preset::Scale) => bench::scale_sweep(&plan)?,
        None => bench::run_plan(&plan)?,
    };
    if report.rows.iter().all(|r| r.status == bench::RunStatus::Failed) {
        return Err(TopolowError::Numeric(
            "every benchmark run failed; see the per-row errors".into(),
        ));
    }

    let run_dir = args.out.join(bench::plan_hash(&report.plan));
    create_out_dir(&run_dir)?;
    let plan_path = run_dir.join("plan.json");
    io::write_json(&plan_path, &report.plan)?;
    let variants_path = run_dir.join("variants.json");
    io::write_json(&variants_path, &report.variants)?;
    let results_path = run_dir.join("results.csv");
    io::write_results_csv(&results_path, &report.rows)?;
    let summary_path = run_dir.join("summary.csv");
    io::write_summary_csv(&summary_path, &report.summaries)?;

    let mut argv = vec!["bench".to_string()];
    let mut inputs = Vec::new();
    if from_file {
        let path = args.plan.as_ref().expect("plan path present");
        push_flag(&mut argv, "--plan", path_str(path));
        inputs.push(path_str(path));
    } else {
        if let Some(preset) = args.preset {
            push_flag(&mut argv, "--preset", preset.name());
        }
        push_flag(
            &mut argv,
            "--sizes",
            plan.sizes
                .iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        push_flag(
            &mut argv,
            "--fractions",
            plan.fractions
                .iter()
                .map(|f| f.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        push_flag(&mut argv, "--clusters", plan.clusters);
        push_flag(&mut argv, "--replicates", plan.replicates);
        push_flag(
            &mut argv,
            "--methods",
            plan.methods
                .iter()
                .map(|m| m.name().to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        push_flag(&mut argv, "--seed", seed);
        if let Some(dim) = plan.mds_dimension {
            push_flag(&mut argv, "--mds-dim", dim);
        }
        args.budget.push_argv(&mut argv);
    }
    push_flag(&mut argv, "--out", path_str(&args.out));
    if let Some(j) = jobs {
        push_flag(&mut argv, "--jobs", j);
    }
    write_manifest(
        &run_dir,
        "bench",
        argv,
        vec![report.plan.base_seed],
        inputs,
        vec![
            path_str(&plan_path),
            path_str(&variants_path),
            path_str(&results_path),
            path_str(&summary_path),
        ],
        started,
    )
}

fn dispatch(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        // Ignores the error when a pool already exists (repeat in-process
        // calls); the cap then simply stays at its previous value.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs as usize)
            .build_global();
    }
    match &cli.command {
        Command::Euclidify(args) => cmd_euclidify(args, cli.jobs),
        Command::Search(args) => cmd_search(args, cli.jobs),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Bench(args) => cmd_bench(args, cli.jobs),
    }
}

/// Entry point for the binary: parses the process arguments and returns the
/// exit code (0 success, 2 input or parse error, 3 validation error, 4
/// runtime failure).
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}
