//! Benchmark harness: expands a plan of problems, solver kinds and derivative
//! masks into runs, executes them in parallel and writes one CSV row per run.
//!
//! Direction indices are 0-based in the library and 1-based in every file
//! this module writes or reads.

mod summary;

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factory::WeightScheme;
use crate::optimizer::{self, run_with_diagnostic, RunResult, RunTrace, SolverConfig, SolverKind};
use crate::testbed::{lookup, second_order_pairs, NoiseWrapper, Problem};

pub use summary::{read_results, summarize, write_summary_csv, SummaryRow};

/// Environment variable holding the worker count of [`run_plan`].
pub const THREADS_ENV: &str = "HERMITE_BENCH_THREADS";

/// Masks are enumerated exhaustively up to this many combinations.
const MAX_EXHAUSTIVE_MASKS: usize = 10;
/// Random masks drawn per `k_d` when enumeration would exceed the limit.
const RANDOM_MASKS: usize = 3;

/// Multiplicative noise on analytic problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseMode {
    None,
    Low,
    High,
}

impl NoiseMode {
    pub fn amplitude(self) -> f64 {
        match self {
            NoiseMode::None => 0.0,
            NoiseMode::Low => NoiseWrapper::DEFAULT_AMPLITUDE,
            NoiseMode::High => 10.0 * NoiseWrapper::DEFAULT_AMPLITUDE,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            NoiseMode::None => "none",
            NoiseMode::Low => "low",
            NoiseMode::High => "high",
        }
    }
}

impl fmt::Display for NoiseMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NoiseMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(NoiseMode::None),
            "low" => Ok(NoiseMode::Low),
            "high" => Ok(NoiseMode::High),
            other => Err(Error::InvalidConfig(format!("unknown noise mode `{other}`"))),
        }
    }
}

/// A grid of runs. Derivative-free kinds ignore `kd` and run once per
/// problem and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub problems: Vec<String>,
    pub kinds: Vec<SolverKind>,
    /// Numbers of known derivative directions for the Hermite kinds.
    pub kd: Vec<usize>,
    pub noise: NoiseMode,
    pub seeds: Vec<u64>,
    pub budget: usize,
    pub weighting: bool,
    /// Second-derivative rows for Hermite least squares, over the pairs of
    /// the mask.
    pub second_order: bool,
    /// Seeds the random masks drawn for large problems.
    pub mask_seed: u64,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        Self {
            problems: Vec::new(),
            kinds: SolverKind::ALL.to_vec(),
            kd: vec![1],
            noise: NoiseMode::None,
            seeds: vec![0],
            budget: 1000,
            weighting: false,
            second_order: false,
            mask_seed: 0,
        }
    }
}

/// One expanded run of a plan.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub index: usize,
    pub problem: Problem,
    pub kind: SolverKind,
    /// Known directions, 0-based.
    pub mask: Vec<usize>,
    pub seed: u64,
}

/// `C(n, k)` saturating at `usize::MAX`.
fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for (a, &first) in items.iter().enumerate() {
        for mut rest in combinations(&items[a + 1..], k - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Masks of size `kd` drawn from `directions`: all of them if there are at
/// most ten, otherwise three distinct random ones.
pub fn enumerate_masks(directions: &[usize], kd: usize, seed: u64) -> Vec<Vec<usize>> {
    let m = directions.len();
    if kd > m {
        return Vec::new();
    }
    if binomial(m, kd) <= MAX_EXHAUSTIVE_MASKS {
        return combinations(directions, kd);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((m as u64) << 32) ^ kd as u64);
    let mut out: Vec<Vec<usize>> = Vec::new();
    while out.len() < RANDOM_MASKS {
        let mut mask: Vec<usize> = sample(&mut rng, m, kd).into_iter().map(|i| directions[i]).collect();
        mask.sort_unstable();
        if !out.contains(&mask) {
            out.push(mask);
        }
    }
    out
}

impl ExperimentPlan {
    /// Resolves every problem name and expands the grid, in the order
    /// problem, kind, `k_d`, mask, seed. Fails before anything runs.
    pub fn expand(&self) -> Result<Vec<RunSpec>> {
        if self.budget == 0 {
            return Err(Error::InvalidConfig("budget must be positive".into()));
        }
        let problems = self
            .problems
            .iter()
            .map(|name| lookup(name))
            .collect::<Result<Vec<_>>>()?;
        let mut runs = Vec::new();
        for problem in &problems {
            for &kind in &self.kinds {
                let masks: Vec<Vec<usize>> = if kind.is_hermite() {
                    let dirs = problem.derivable();
                    self.kd
                        .iter()
                        .flat_map(|&kd| enumerate_masks(&dirs, kd, self.mask_seed))
                        .collect()
                } else {
                    vec![Vec::new()]
                };
                for mask in masks {
                    for &seed in &self.seeds {
                        runs.push(RunSpec {
                            index: runs.len(),
                            problem: problem.clone(),
                            kind,
                            mask: mask.clone(),
                            seed,
                        });
                    }
                }
            }
        }
        Ok(runs)
    }

    fn config(&self, run: &RunSpec) -> SolverConfig {
        SolverConfig {
            seed: run.seed,
            weighting: WeightScheme {
                enabled: self.weighting,
                ..WeightScheme::default()
            },
            second_order: self.second_order && run.kind == SolverKind::HermiteLs,
            ..SolverConfig::new(run.kind).with_budget(self.budget)
        }
    }

    /// Runs one expanded entry; the trace carries the model-error
    /// diagnostic when `diagnostic` is set and the problem is analytic.
    pub fn execute(&self, run: &RunSpec, diagnostic: bool) -> Result<RunResult> {
        let config = self.config(run);
        let second = if config.second_order {
            second_order_pairs(&run.mask)
        } else {
            Vec::new()
        };
        let mut spec = run
            .problem
            .objective(&run.mask, &second, self.noise.amplitude(), run.seed)?;
        let x0 = run.problem.x0();
        match (&run.problem, diagnostic) {
            (Problem::Analytic(p), true) => run_with_diagnostic(&mut spec, &x0, &config, p.taylor_fn()),
            _ => optimizer::run(&mut spec, &x0, &config),
        }
    }
}

/// One line of the results file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub problem: String,
    pub n: usize,
    pub kind: SolverKind,
    pub k_d: usize,
    /// Known directions, 1-based.
    pub mask: Vec<usize>,
    pub seed: u64,
    pub noise: NoiseMode,
    pub evaluations: usize,
    /// Noise-free objective at the final point.
    pub f_final: f64,
    pub x_error: f64,
    pub success: bool,
}

impl ResultRow {
    fn new(plan: &ExperimentPlan, run: &RunSpec, result: &RunResult) -> Self {
        let p = &run.problem;
        let f_final = p.true_value(&result.x_best, run.seed);
        let f_ref = p.f_ref();
        Self {
            problem: p.name().to_string(),
            n: p.dim(),
            kind: run.kind,
            k_d: run.mask.len(),
            mask: run.mask.iter().map(|i| i + 1).collect(),
            seed: run.seed,
            noise: plan.noise,
            evaluations: result.evaluations,
            f_final,
            x_error: (&result.x_best - p.x_ref()).norm(),
            success: f_final <= f_ref + 1e-6 * f_ref.abs().max(1.0),
        }
    }
}

/// Worker count from [`THREADS_ENV`], or rayon's default.
fn thread_count() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&t| t > 0)
            .map(Some)
            .ok_or_else(|| Error::InvalidConfig(format!("{THREADS_ENV} must be a positive integer"))),
        Err(_) => Ok(None),
    }
}

/// Expands and executes `plan`. Rows come back in plan order whatever the
/// number of worker threads; the first failing run aborts the plan.
pub fn run_plan(plan: &ExperimentPlan) -> Result<Vec<ResultRow>> {
    let runs = plan.expand()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = thread_count()? {
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    pool.install(|| {
        runs.par_iter()
            .map(|r| plan.execute(r, false).map(|res| ResultRow::new(plan, r, &res)))
            .collect()
    })
}

/// Column order of the results file.
pub const RESULT_HEADER: [&str; 11] = [
    "problem",
    "n",
    "kind",
    "k_d",
    "mask",
    "seed",
    "noise",
    "evaluations",
    "f_final",
    "x_error",
    "success",
];

/// Fixed-width float formatting shared by all files: 17 significant digits.
pub(crate) fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// `1;2;5`-style mask field.
pub(crate) fn fmt_mask(mask: &[usize]) -> String {
    mask.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(";")
}

/// Writes the results CSV; an empty slice gives the header alone.
pub fn write_results_csv<W: Write>(rows: &[ResultRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(RESULT_HEADER)?;
    for r in rows {
        out.write_record([
            r.problem.clone(),
            r.n.to_string(),
            r.kind.to_string(),
            r.k_d.to_string(),
            fmt_mask(&r.mask),
            r.seed.to_string(),
            r.noise.to_string(),
            r.evaluations.to_string(),
            fmt_float(r.f_final),
            fmt_float(r.x_error),
            r.success.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// JSON mirror of the results file.
pub fn write_results_json<W: Write>(rows: &[ResultRow], w: W) -> Result<()> {
    serde_json::to_writer_pretty(w, rows).map_err(|e| Error::Io(e.to_string()))
}

/// Writes a run trace as CSV. Fails on an empty trace.
pub fn trace_export<W: Write>(trace: &RunTrace, w: W) -> Result<()> {
    if trace.is_empty() {
        return Err(Error::InvalidConfig("trace has no rows".into()));
    }
    trace.write_csv(w)
}

#[cfg(test)]
mod tests;
