//! Hermite least squares with and without second-derivative rows. The
//! second partials offered are those over pairs of the known directions.
//!
//! cargo run --release --example second_order

use hermite_dfo::optimizer::{run, SolverConfig, SolverKind};
use hermite_dfo::testbed::{mask_availability, rosenbrock, second_order_pairs};

fn main() -> hermite_dfo::Result<()> {
    let p = rosenbrock();
    println!("{:<8} {:>12} {:>12}", "mask", "first only", "with second");
    for mask in [vec![0], vec![1], vec![0, 1]] {
        let mut counts = Vec::new();
        for second_order in [false, true] {
            let pairs = if second_order { second_order_pairs(&mask) } else { Vec::new() };
            let mut spec = mask_availability(&p, &mask, &pairs)?;
            let cfg = SolverConfig { second_order, ..SolverConfig::new(SolverKind::HermiteLs) };
            counts.push(run(&mut spec, &p.x0, &cfg)?.evaluations);
        }
        let label: Vec<String> = mask.iter().map(|i| (i + 1).to_string()).collect();
        println!("{:<8} {:>12} {:>12}", format!("{{{}}}", label.join(",")), counts[0], counts[1]);
    }
    Ok(())
}
