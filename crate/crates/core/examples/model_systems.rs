//! The four model systems on data from a known quadratic. Each recovers
//! the gradient; the Hessian is exact for the determined and least-squares
//! systems, and for the Frobenius systems when the previous Hessian is the
//! true one.
//!
//! cargo run --release --example model_systems

use nalgebra::{dmatrix, dvector, DMatrix, DVector};

use hermite_dfo::factory::{
    assemble_full_interp, assemble_hermite_bobyqa, assemble_hermite_ls, assemble_min_frob,
    solve_system,
};
use hermite_dfo::problem::{DerivativeAvailability, EvaluationRecord, TrainingSet};

fn main() -> hermite_dfo::Result<()> {
    let h = dmatrix![4.0, 1.0; 1.0, 2.0];
    let g = dvector![1.0, -3.0];
    let f = |x: &DVector<f64>| 0.5 + g.dot(x) + 0.5 * x.dot(&(&h * x));
    let grad = |x: &DVector<f64>| &g + &h * x;

    let points = [
        dvector![0.0, 0.0],
        dvector![0.5, 0.0],
        dvector![0.0, 0.5],
        dvector![-0.5, 0.0],
        dvector![0.0, -0.5],
        dvector![0.4, 0.4],
    ];
    let av = DerivativeAvailability::first_order(2, [0])?;
    let set = |count: usize| {
        let recs = points[..count]
            .iter()
            .map(|x| {
                let mut r = EvaluationRecord::value_only(x.clone(), f(x));
                r.gradient.insert(0, grad(x)[0]);
                r
            })
            .collect();
        TrainingSet::new(recs)
    };

    let systems = [
        ("full-interp", assemble_full_interp(&set(6)?)?),
        ("hermite-ls", assemble_hermite_ls(&set(5)?, &av, false)?),
        ("min-frob", assemble_min_frob(&set(5)?, &h)?),
        ("hermite-bobyqa", assemble_hermite_bobyqa(&set(4)?, &av, &h)?),
    ];
    for (name, sys) in systems {
        let m = solve_system(&sys)?;
        let x = dvector![0.3, -0.2];
        let gerr = (m.gradient(&x) - grad(&x)).amax();
        let herr = (m.hessian() - &h).amax();
        println!(
            "{name:<15} {}x{} system  |g error| {gerr:.1e}  |H error| {herr:.1e}",
            sys.nrows(),
            sys.ncols()
        );
    }
    // without the true Hessian the Frobenius model only matches the data
    let m = solve_system(&assemble_min_frob(&set(5)?, &DMatrix::zeros(2, 2))?)?;
    println!("min-frob, zero previous Hessian: H = {:.3}", m.hessian());
    Ok(())
}
