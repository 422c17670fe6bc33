//! Maximizing a Monte Carlo yield estimate. Only the partials with respect
//! to the two uncertain means are available, computed from the same samples
//! as the estimate.
//!
//! cargo run --release --example yield_optimization

use nalgebra::DVector;

use hermite_dfo::optimizer::{run, SolverConfig, SolverKind};
use hermite_dfo::testbed::{lookup, yield_optimum, YieldMode, YieldProblem, YIELD_START};

fn main() -> hermite_dfo::Result<()> {
    let mut reference = YieldProblem::for_mode(YieldMode::NoNoise, 0);
    println!(
        "start yield {:.3}, best attainable about {:.3}",
        reference.yield_estimate(&YIELD_START),
        yield_optimum()
    );
    for mode in YieldMode::ALL {
        let problem = lookup(mode.name())?;
        for kind in SolverKind::ALL {
            let mask: &[usize] = if kind.is_hermite() { &[0, 1] } else { &[] };
            let mut spec = problem.objective(mask, &[], 0.0, 0)?;
            let cfg = SolverConfig::new(kind).with_budget(300);
            let x0 = DVector::from_column_slice(&YIELD_START);
            let r = run(&mut spec, &x0, &cfg)?;
            println!(
                "{:<16} {:<16} {:>4} evals  yield {:.3}",
                mode.name(),
                kind.name(),
                r.evaluations,
                -problem.true_value(&r.x_best, 0)
            );
        }
    }
    Ok(())
}
