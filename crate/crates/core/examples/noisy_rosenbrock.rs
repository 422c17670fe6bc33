//! Rosenbrock with 1 % multiplicative noise on values and partials. The
//! regression model averages the noise out; the interpolating Bobyqa model
//! follows it and stalls.
//!
//! cargo run --release --example noisy_rosenbrock

use hermite_dfo::optimizer::{run, SolverConfig, SolverKind};
use hermite_dfo::testbed::{add_noise, mask_availability, rosenbrock};

fn main() -> hermite_dfo::Result<()> {
    let p = rosenbrock();
    println!("{:>4} {:>14} {:>14}", "seed", "hermite-ls", "bobyqa");
    for seed in 0..10 {
        let mut out = Vec::new();
        for (kind, mask) in [(SolverKind::HermiteLs, &[0usize, 1][..]), (SolverKind::Bobyqa, &[][..])] {
            let spec = mask_availability(&p, mask, &[])?;
            let mut noisy = add_noise(spec, 1e-2, seed)?;
            let cfg = SolverConfig { seed, ..SolverConfig::new(kind).with_budget(80) };
            let r = run(&mut noisy, &p.x0, &cfg)?;
            // report the noise-free value at the returned point
            out.push(p.value(&r.x_best));
        }
        println!("{seed:>4} {:>14.3e} {:>14.3e}", out[0], out[1]);
    }
    Ok(())
}
