//! Experiment orchestration: method comparison on synthetic datasets,
//! sparsity and scale sweeps, and stability statistics.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{fit, Configuration, Hyperparameters};
use crate::mds;
use crate::metrics;
use crate::search::{search, ParameterRanges, SearchBudget};
use crate::seeding::derive;
use crate::synth;
use crate::{Result, TopolowError};

/// Embedding method under comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Topolow,
    ClassicalMds,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Topolow => "topolow",
            Method::ClassicalMds => "classical_mds",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = TopolowError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "topolow" => Ok(Method::Topolow),
            "classical_mds" | "classical-mds" | "mds" => Ok(Method::ClassicalMds),
            other => Err(TopolowError::Invalid(format!(
                "unknown method '{other}'; expected topolow or classical_mds"
            ))),
        }
    }
}

/// Fallback embedding dimension for classical MDS when no Topolow search
/// result is available to borrow from.
pub const DEFAULT_MDS_DIMENSION: usize = 5;

/// What to run: the dataset grid, the methods, and the budgets.
///
/// Every (size, fraction) cell of the grid is one dataset variant. Sizes
/// share nothing; fractions of the same size share one ground truth and
/// differ only in the mask, so sparsity trends are measured on identical
/// geometry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub sizes: Vec<usize>,
    pub clusters: usize,
    pub fractions: Vec<f64>,
    pub methods: Vec<Method>,
    /// Stochastic-method repeats per variant; each varies only the fit seed.
    pub replicates: usize,
    pub base_seed: u64,
    pub search_budget: SearchBudget,
    pub parameter_ranges: ParameterRanges,
    /// Dimension handed to classical MDS; None borrows the searched Topolow
    /// dimension of the same variant (or [`DEFAULT_MDS_DIMENSION`] when no
    /// search ran).
    pub mds_dimension: Option<usize>,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        ExperimentPlan {
            sizes: vec![50],
            clusters: 5,
            fractions: vec![0.3],
            methods: vec![Method::Topolow, Method::ClassicalMds],
            replicates: 10,
            base_seed: 42,
            search_budget: SearchBudget::default(),
            parameter_ranges: ParameterRanges::default(),
            mds_dimension: None,
        }
    }
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() {
            return Err(TopolowError::Invalid("plan needs at least one size".into()));
        }
        if self.fractions.is_empty() {
            return Err(TopolowError::Invalid(
                "plan needs at least one mask fraction".into(),
            ));
        }
        if self.methods.is_empty() {
            return Err(TopolowError::Invalid(
                "plan needs at least one method".into(),
            ));
        }
        if self.replicates == 0 {
            return Err(TopolowError::Invalid(
                "replicates must be at least 1".into(),
            ));
        }
        if self.clusters == 0 {
            return Err(TopolowError::Invalid("clusters must be at least 1".into()));
        }
        for &m in &self.sizes {
            if m < 2 {
                return Err(TopolowError::Invalid(format!(
                    "dataset size must be at least 2, got {m}"
                )));
            }
            if m < self.clusters {
                return Err(TopolowError::Invalid(format!(
                    "size {m} is smaller than the cluster count {}",
                    self.clusters
                )));
            }
        }
        for &f in &self.fractions {
            if !(0.0..1.0).contains(&f) {
                return Err(TopolowError::Invalid(format!(
                    "mask fraction must lie in [0, 1), got {f}"
                )));
            }
        }
        self.search_budget.validate()?;
        self.parameter_ranges.validate()
    }
}

/// Whether a benchmark run produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Failed,
}

/// One benchmark run: a method on a dataset variant with one replicate seed.
#[derive(Debug, Clone, Serialize)]
pub struct ResultRow {
    pub method: Method,
    pub m: usize,
    pub fraction: f64,
    pub replicate: usize,
    /// Fit seed for stochastic methods; the variant's dataset seed for
    /// deterministic ones.
    pub seed: u64,
    pub normalized_stress: f64,
    pub pearson_r: f64,
    pub r_squared: f64,
    /// Wall-clock time of the run; the one column exempt from determinism.
    pub runtime_seconds: f64,
    pub status: RunStatus,
    pub error: Option<String>,
}

impl ResultRow {
    fn failed(
        method: Method,
        m: usize,
        fraction: f64,
        replicate: usize,
        seed: u64,
        error: String,
    ) -> Self {
        ResultRow {
            method,
            m,
            fraction,
            replicate,
            seed,
            normalized_stress: f64::NAN,
            pearson_r: f64::NAN,
            r_squared: f64::NAN,
            runtime_seconds: 0.0,
            status: RunStatus::Failed,
            error: Some(error),
        }
    }
}

/// Mean and spread of a method's stress on one dataset variant.
#[derive(Debug, Clone, Serialize)]
pub struct MethodSummary {
    pub method: Method,
    pub m: usize,
    pub fraction: f64,
    pub mean_stress: f64,
    /// Sample standard deviation over successful runs; 0 when fewer than 2.
    pub stress_sd: f64,
    pub mean_r_squared: f64,
    pub runs: usize,
    pub failures: usize,
}

/// Per-variant provenance: the dataset's seed and difficulty, and the
/// hyperparameters the variant's runs shared.
#[derive(Debug, Clone, Serialize)]
pub struct VariantRecord {
    pub m: usize,
    pub fraction: f64,
    pub dataset_seed: u64,
    pub deviation_score: f64,
    pub searched_params: Option<Hyperparameters>,
    pub mds_dimension: Option<usize>,
}

/// Everything a plan run produced.
#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub plan: ExperimentPlan,
    pub variants: Vec<VariantRecord>,
    pub rows: Vec<ResultRow>,
    pub summaries: Vec<MethodSummary>,
}

const SEARCH_STREAM: u64 = 1 << 32;
const FIT_STREAM: u64 = 1 << 33;

/// Runs every (size, fraction, method, replicate) cell of the plan.
///
/// Per variant: the dataset is generated from a seed derived off the base
/// seed, hyperparameters are searched once on its masked input, and the
/// replicates rerun only the fit with fresh seeds. Classical MDS computes
/// once per variant and its row is repeated per replicate so summary
/// statistics line up. Per-run failures become failed rows instead of
/// aborting the plan; evaluation always scores against the variant's
/// complete truth matrix. Identical plans reproduce identical rows except
/// for `runtime_seconds`.
pub fn run_plan(plan: &ExperimentPlan) -> Result<BenchReport> {
    plan.validate()?;
    let mut rows = Vec::new();
    let mut variants = Vec::new();

    for (size_index, &m) in plan.sizes.iter().enumerate() {
        let size_seed = derive(plan.base_seed, size_index as u64);
        let truth = synth::generate_ground_truth(m, plan.clusters, derive(size_seed, 1))
            .and_then(|gt| synth::distort(&gt.coords, derive(size_seed, 2)));

        for (fraction_index, &fraction) in plan.fractions.iter().enumerate() {
            let work_seed = derive(size_seed, SEARCH_STREAM + fraction_index as u64);
            let dataset = truth.as_ref().map_err(|e| e.to_string()).and_then(|(t, _)| {
                synth::mask(t, fraction, derive(size_seed, 3 + fraction_index as u64))
                    .map(|input| (t, input))
                    .map_err(|e| e.to_string())
            });

            let (truth_matrix, input) = match dataset {
                Ok(pair) => pair,
                Err(message) => {
                    for &method in &plan.methods {
                        for r in 0..plan.replicates {
                            rows.push(ResultRow::failed(
                                method,
                                m,
                                fraction,
                                r,
                                size_seed,
                                message.clone(),
                            ));
                        }
                    }
                    variants.push(VariantRecord {
                        m,
                        fraction,
                        dataset_seed: size_seed,
                        deviation_score: f64::NAN,
                        searched_params: None,
                        mds_dimension: None,
                    });
                    continue;
                }
            };

            let deviation = metrics::deviation_score(truth_matrix).unwrap_or(f64::NAN);
            let needs_search = plan.methods.contains(&Method::Topolow)
                || (plan.methods.contains(&Method::ClassicalMds)
                    && plan.mds_dimension.is_none());
            let searched = if needs_search {
                search(
                    &input,
                    &plan.parameter_ranges,
                    &plan.search_budget,
                    derive(work_seed, 0),
                )
                .map(|r| r.best.params)
            } else {
                Err(TopolowError::Invalid("search not requested".into()))
            };

            let mds_dimension = plan.methods.contains(&Method::ClassicalMds).then(|| {
                plan.mds_dimension.unwrap_or_else(|| {
                    searched
                        .as_ref()
                        .map(|p| p.dimension)
                        .unwrap_or(DEFAULT_MDS_DIMENSION)
                })
            });

            variants.push(VariantRecord {
                m,
                fraction,
                dataset_seed: size_seed,
                deviation_score: deviation,
                searched_params: searched.as_ref().ok().copied(),
                mds_dimension,
            });

            for &method in &plan.methods {
                match method {
                    Method::Topolow => {
                        let params = match &searched {
                            Ok(p) => *p,
                            Err(e) => {
                                let message = format!("hyperparameter search failed: {e}");
                                for r in 0..plan.replicates {
                                    rows.push(ResultRow::failed(
                                        method,
                                        m,
                                        fraction,
                                        r,
                                        derive(work_seed, FIT_STREAM + r as u64),
                                        message.clone(),
                                    ));
                                }
                                continue;
                            }
                        };
                        let replicate_rows: Vec<ResultRow> = (0..plan.replicates)
                            .into_par_iter()
                            .map(|r| {
                                let fit_seed = derive(work_seed, FIT_STREAM + r as u64);
                                let start = Instant::now();
                                let outcome = fit(
                                    &input,
                                    &params,
                                    fit_seed,
                                    &plan.search_budget.fit_options,
                                )
                                .and_then(|res| {
                                    score_configuration(truth_matrix, &res.configuration)
                                });
                                finish_row(
                                    method, m, fraction, r, fit_seed, start, outcome,
                                )
                            })
                            .collect();
                        rows.extend(replicate_rows);
                    }
                    Method::ClassicalMds => {
                        let dimension = mds_dimension.unwrap_or(DEFAULT_MDS_DIMENSION);
                        let start = Instant::now();
                        let outcome = mds::median_impute(&input)
                            .and_then(|complete| mds::classical_mds(&complete, dimension))
                            .and_then(|config| score_configuration(truth_matrix, &config));
                        let row =
                            finish_row(method, m, fraction, 0, size_seed, start, outcome);
                        for r in 0..plan.replicates {
                            let mut copy = row.clone();
                            copy.replicate = r;
                            rows.push(copy);
                        }
                    }
                }
            }
        }
    }

    let summaries = summarize(&rows);
    Ok(BenchReport {
        plan: plan.clone(),
        variants,
        rows,
        summaries,
    })
}

fn score_configuration(
    truth: &ndarray::Array2<f64>,
    config: &Configuration,
) -> Result<(f64, f64, f64)> {
    let report = metrics::evaluate_embedding(truth, &config.distance_matrix())?;
    Ok((
        report.normalized_stress,
        report.pearson_r,
        report.r_squared,
    ))
}

fn finish_row(
    method: Method,
    m: usize,
    fraction: f64,
    replicate: usize,
    seed: u64,
    start: Instant,
    outcome: Result<(f64, f64, f64)>,
) -> ResultRow {
    let runtime_seconds = start.elapsed().as_secs_f64();
    match outcome {
        Ok((normalized_stress, pearson_r, r_squared)) => ResultRow {
            method,
            m,
            fraction,
            replicate,
            seed,
            normalized_stress,
            pearson_r,
            r_squared,
            runtime_seconds,
            status: RunStatus::Ok,
            error: None,
        },
        Err(e) => {
            let mut row = ResultRow::failed(method, m, fraction, replicate, seed, e.to_string());
            row.runtime_seconds = runtime_seconds;
            row
        }
    }
}

/// Table-1-style comparison: every method on every variant of the plan.
pub fn compare_methods(plan: &ExperimentPlan) -> Result<BenchReport> {
    run_plan(plan)
}

/// Sparsity trend: the plan's fractions are replaced by {0.3, 0.6, 0.9};
/// all three share each size's ground truth.
pub fn sparsity_sweep(plan: &ExperimentPlan) -> Result<BenchReport> {
    let mut plan = plan.clone();
    plan.fractions = vec![0.3, 0.6, 0.9];
    run_plan(&plan)
}

/// Scale trend: the plan's sizes are replaced by {25, 50, 100} at 30%
/// masking.
pub fn scale_sweep(plan: &ExperimentPlan) -> Result<BenchReport> {
    let mut plan = plan.clone();
    plan.sizes = vec![25, 50, 100];
    plan.fractions = vec![0.3];
    run_plan(&plan)
}

/// Groups rows by (method, size, fraction) and reports mean and sample
/// standard deviation of the successful runs' stress.
pub fn summarize(rows: &[ResultRow]) -> Vec<MethodSummary> {
    let mut keys: Vec<(Method, usize, u64)> = Vec::new();
    for row in rows {
        let key = (row.method, row.m, row.fraction.to_bits());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.iter()
        .map(|&(method, m, fraction_bits)| {
            let fraction = f64::from_bits(fraction_bits);
            let group: Vec<&ResultRow> = rows
                .iter()
                .filter(|r| {
                    r.method == method && r.m == m && r.fraction.to_bits() == fraction_bits
                })
                .collect();
            let ok: Vec<&&ResultRow> =
                group.iter().filter(|r| r.status == RunStatus::Ok).collect();
            let n = ok.len();
            let mean = |pick: &dyn Fn(&ResultRow) -> f64| {
                if n == 0 {
                    f64::NAN
                } else {
                    ok.iter().map(|r| pick(r)).sum::<f64>() / n as f64
                }
            };
            let mean_stress = mean(&|r| r.normalized_stress);
            let stress_sd = if n < 2 {
                0.0
            } else {
                let ss: f64 = ok
                    .iter()
                    .map(|r| {
                        let d = r.normalized_stress - mean_stress;
                        d * d
                    })
                    .sum();
                (ss / (n - 1) as f64).sqrt()
            };
            MethodSummary {
                method,
                m,
                fraction,
                mean_stress,
                stress_sd,
                mean_r_squared: mean(&|r| r.r_squared),
                runs: n,
                failures: group.len() - n,
            }
        })
        .collect()
}

/// The per-variant stability statistic: sample s.d. of normalized stress
/// for each (method, size, fraction) group, inside the full summary record.
pub fn stability_stats(rows: &[ResultRow]) -> Vec<MethodSummary> {
    summarize(rows)
}

/// Short stable identifier of a plan, used to name output directories.
/// FNV-1a over the plan's canonical JSON encoding.
pub fn plan_hash(plan: &ExperimentPlan) -> String {
    let encoded = serde_json::to_string(plan).unwrap_or_default();
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in encoded.as_bytes() {
        hash ^= u64::from(*byte);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{hash:016x}")
}
