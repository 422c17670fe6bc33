//! The four solver kinds on the 2D Rosenbrock function, with the partial
//! derivative in the second direction known to the Hermite kinds.
//!
//! cargo run --release --example rosenbrock_hermite

use hermite_dfo::optimizer::{run, SolverConfig, SolverKind};
use hermite_dfo::testbed::{mask_availability, rosenbrock};

fn main() -> hermite_dfo::Result<()> {
    let p = rosenbrock();
    println!("{:<16} {:>6} {:>12} {:>12}", "kind", "evals", "f", "|x - x*|");
    for kind in SolverKind::ALL {
        // directions are 0-based: [1] is the second coordinate
        let mask: &[usize] = if kind.is_hermite() { &[1] } else { &[] };
        let mut spec = mask_availability(&p, mask, &[])?;
        let r = run(&mut spec, &p.x0, &SolverConfig::new(kind).with_budget(500))?;
        println!(
            "{:<16} {:>6} {:>12.3e} {:>12.3e}",
            kind.name(),
            r.evaluations,
            r.f_best,
            (&r.x_best - &p.x_ref).norm()
        );
    }
    Ok(())
}
