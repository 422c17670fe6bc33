//! A small benchmark grid run from code: results as CSV, then the
//! per-group summary against Bobyqa. The `hermite-bench` binary wraps the
//! same calls.
//!
//! cargo run --release --example benchmark_plan

use std::io;

use hermite_dfo::bench::{run_plan, summarize, write_results_csv, write_summary_csv, ExperimentPlan};
use hermite_dfo::optimizer::SolverKind;

fn main() -> hermite_dfo::Result<()> {
    let plan = ExperimentPlan {
        problems: vec!["rosenbrock2".into(), "sphere3".into(), "beale2".into()],
        kinds: SolverKind::ALL.to_vec(),
        kd: vec![1, 2],
        seeds: vec![0],
        budget: 500,
        ..ExperimentPlan::default()
    };
    let rows = run_plan(&plan)?;
    write_results_csv(&rows, io::stdout())?;
    println!();
    write_summary_csv(&summarize(&rows), io::stdout())?;
    Ok(())
}
