//! Plugging in your own objective: a bounded problem where only one partial
//! derivative is cheap to compute.
//!
//! cargo run --release --example custom_objective

use nalgebra::{dvector, DVector};

use hermite_dfo::optimizer::{run, SolverConfig, SolverKind};
use hermite_dfo::problem::{Bounds, DerivativeAvailability, ObjectiveSpec, Oracle};

/// `f(x) = (x0 - 1)^4 + (x0 - x1)^2 + exp(x2) - x2`, with d/dx2 known.
struct Mixed;

impl Oracle for Mixed {
    fn dim(&self) -> usize {
        3
    }

    fn value(&mut self, x: &DVector<f64>) -> f64 {
        (x[0] - 1.0).powi(4) + (x[0] - x[1]).powi(2) + x[2].exp() - x[2]
    }

    fn partial(&mut self, x: &DVector<f64>, i: usize) -> Option<f64> {
        (i == 2).then(|| x[2].exp() - 1.0)
    }
}

fn main() -> hermite_dfo::Result<()> {
    let bounds = Bounds::uniform(3, -2.0, 2.0)?;
    let x0 = dvector![-1.5, 1.5, 1.0];
    for kind in [SolverKind::Bobyqa, SolverKind::HermiteLs, SolverKind::HermiteBobyqa] {
        let av = if kind.is_hermite() {
            DerivativeAvailability::first_order(3, [2])?
        } else {
            DerivativeAvailability::none()
        };
        let mut spec = ObjectiveSpec::new(Box::new(Mixed), av, bounds.clone())?;
        let r = run(&mut spec, &x0, &SolverConfig::new(kind))?;
        println!(
            "{:<16} {:>4} evals  f = {:.3e}  x = [{:.4}, {:.4}, {:.4}]  ({})",
            kind.name(),
            r.evaluations,
            r.f_best - 1.0,
            r.x_best[0],
            r.x_best[1],
            r.x_best[2],
            r.termination
        );
    }
    Ok(())
}
