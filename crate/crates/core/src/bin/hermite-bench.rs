//! Command-line front end of the benchmark harness.
//!
//! Derivative directions are 1-based on the command line and in all files.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hermite_dfo::bench::{
    read_results, run_plan, summarize, trace_export, write_results_csv, write_results_json,
    write_summary_csv, ExperimentPlan, NoiseMode, RunSpec,
};
use hermite_dfo::optimizer::SolverKind;
use hermite_dfo::testbed::{lookup, problem_names};
use hermite_dfo::{Error, Result};

#[derive(Parser)]
#[command(name = "hermite-bench", version, about = "Benchmark grids for trust-region solvers with partial derivatives")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a grid of problems, solver kinds and derivative masks.
    Run(RunArgs),
    /// Group a results file by (n, kind, k_d) and compare against Bobyqa.
    Summarize {
        /// Results CSV written by `run`.
        input: PathBuf,
        /// Summary CSV; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a single configuration and write its per-iteration trace.
    Trace(TraceArgs),
    /// List the registered problems.
    Problems,
}

#[derive(Args)]
struct SolverArgs {
    /// Noise on analytic problems: none, low (1e-2) or high (1e-1).
    #[arg(long, default_value = "none")]
    noise: NoiseMode,
    /// Evaluation budget per run.
    #[arg(long, default_value_t = 1000)]
    budget: usize,
    /// Weight distant points down in the regression.
    #[arg(long)]
    weighting: bool,
    /// Add second-derivative rows over the known directions (Hermite least squares only).
    #[arg(long)]
    second_order: bool,
}

#[derive(Args)]
struct RunArgs {
    /// Comma-separated problem names.
    #[arg(long, value_delimiter = ',', required = true)]
    problems: Vec<String>,
    /// Comma-separated solver kinds (full-interp, bobyqa, hermite-ls, hermite-bobyqa).
    #[arg(long, value_delimiter = ',', default_value = "full-interp,bobyqa,hermite-ls,hermite-bobyqa")]
    kinds: Vec<SolverKind>,
    /// Comma-separated numbers of known derivative directions.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    kd: Vec<usize>,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    seed: Vec<u64>,
    /// Seed of the random masks drawn when there are too many to enumerate.
    #[arg(long, default_value_t = 0)]
    mask_seed: u64,
    #[command(flatten)]
    solver: SolverArgs,
    /// Results CSV; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the results as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct TraceArgs {
    #[arg(long)]
    problem: String,
    #[arg(long, default_value = "hermite-ls")]
    kind: SolverKind,
    /// Comma-separated known directions, 1-based.
    #[arg(long, value_delimiter = ',')]
    mask: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    solver: SolverArgs,
    /// Record the model-error diagnostic (analytic problems only).
    #[arg(long)]
    diagnostic: bool,
    /// Trace CSV; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn plan_of(solver: &SolverArgs) -> ExperimentPlan {
    ExperimentPlan {
        noise: solver.noise,
        budget: solver.budget,
        weighting: solver.weighting,
        second_order: solver.second_order,
        ..ExperimentPlan::default()
    }
}

fn run(args: RunArgs) -> Result<()> {
    let plan = ExperimentPlan {
        problems: args.problems,
        kinds: args.kinds,
        kd: args.kd,
        seeds: args.seed,
        mask_seed: args.mask_seed,
        ..plan_of(&args.solver)
    };
    let rows = run_plan(&plan)?;
    write_results_csv(&rows, output(args.out.as_deref())?)?;
    if let Some(p) = args.json {
        write_results_json(&rows, BufWriter::new(File::create(p)?))?;
    }
    Ok(())
}

fn trace(args: TraceArgs) -> Result<()> {
    let problem = lookup(&args.problem)?;
    let mask = args
        .mask
        .iter()
        .map(|&i| {
            i.checked_sub(1)
                .ok_or_else(|| Error::InvalidConfig("directions are 1-based".into()))
        })
        .collect::<Result<Vec<_>>>()?;
    let plan = plan_of(&args.solver);
    let spec = RunSpec {
        index: 0,
        problem,
        kind: args.kind,
        mask,
        seed: args.seed,
    };
    let result = plan.execute(&spec, args.diagnostic)?;
    trace_export(&result.trace, output(args.out.as_deref())?)?;
    eprintln!(
        "{}: {} evaluations, f = {:.6e}, {}",
        args.kind, result.evaluations, result.f_best, result.termination
    );
    Ok(())
}

fn main() -> ExitCode {
    let outcome = match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::Summarize { input, out } => File::open(&input)
            .map_err(Error::from)
            .and_then(read_results)
            .and_then(|rows| write_summary_csv(&summarize(&rows), output(out.as_deref())?)),
        Command::Trace(args) => trace(args),
        Command::Problems => {
            for name in problem_names() {
                println!("{name}");
            }
            Ok(())
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
