//! Lagrange polynomials, the poisedness constant and a geometry step, and
//! how derivative rows change poisedness.
//!
//! cargo run --release --example poisedness

use nalgebra::{dvector, DVector};

use hermite_dfo::factory::{assemble_full_interp, assemble_hermite_ls};
use hermite_dfo::poisedness::{
    estimate_lambda, lagrange_family, propose_geometry_point, theorem1_check, Region,
};
use hermite_dfo::problem::{Bounds, DerivativeAvailability, EvaluationRecord, TrainingSet};

fn f(x: &DVector<f64>) -> f64 {
    x[0].sin() + x[1] * x[1]
}

fn training_set(points: &[DVector<f64>], av: &DerivativeAvailability) -> hermite_dfo::Result<TrainingSet> {
    let recs = points
        .iter()
        .map(|x| {
            let mut r = EvaluationRecord::value_only(x.clone(), f(x));
            if av.has_first(0) {
                r.gradient.insert(0, x[0].cos());
            }
            r
        })
        .collect();
    TrainingSet::new(recs)
}

fn main() -> hermite_dfo::Result<()> {
    // six points, two of them nearly on a line through the others
    let mut points = vec![
        dvector![0.0, 0.0],
        dvector![1.0, 0.0],
        dvector![0.0, 1.0],
        dvector![-1.0, 0.0],
        dvector![0.5, 0.02],
        dvector![0.7, 0.7],
    ];
    let region = Region::new(dvector![0.0, 0.0], 1.0, Bounds::unbounded(2));
    let none = DerivativeAvailability::none();

    let fam = lagrange_family(&assemble_full_interp(&training_set(&points, &none)?)?)?;
    let est = estimate_lambda(&fam, &region);
    println!("Lambda = {:.2} (member {}, at {:.3?})", est.lambda, est.member, est.argmax.as_slice());

    // replace the worst member with the point where its polynomial is largest
    let worst = est.member;
    let y = propose_geometry_point(&fam, worst, &region);
    points[worst] = y.clone();
    let fam = lagrange_family(&assemble_full_interp(&training_set(&points, &none)?)?)?;
    println!(
        "after geometry step at {:.3?}: Lambda = {:.2}",
        y.as_slice(),
        estimate_lambda(&fam, &region).lambda
    );

    // derivative rows on top of an interpolation set never hurt poisedness
    let av = DerivativeAvailability::first_order(2, [0])?;
    let interp = assemble_full_interp(&training_set(&points, &none)?)?;
    let hermite = assemble_hermite_ls(&training_set(&points, &av)?, &av, false)?;
    let (a, b) = theorem1_check(&interp, &hermite, &region)?;
    println!("interpolation Lambda {a:.3}, with d/dx1 rows {b:.3}");
    Ok(())
}
