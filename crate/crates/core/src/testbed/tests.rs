use nalgebra::{dvector, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::problem::{EvaluationBudget, FnOracle};

fn random_feasible(b: &Bounds, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(b.dim(), |i, _| rng.random_range(b.lower()[i]..=b.upper()[i]))
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

#[test]
fn registry_covers_all_dimensions() {
    let problems = test_problems();
    assert!(problems.len() >= 10);
    for n in [2, 3, 4, 5, 10] {
        assert!(problems.iter().any(|p| p.dim() == n), "no problem with n = {n}");
    }
    for p in &problems {
        assert!(p.bounds.contains(&p.x_ref), "{}", p.name);
        assert!(p.bounds.contains(&p.x0), "{}", p.name);
        assert!(close(p.value(&p.x_ref), p.f_ref, 1e-10), "{}", p.name);
    }
}

#[test]
fn gradients_and_hessians_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for p in test_problems() {
        let n = p.dim();
        for _ in 0..100 {
            let x = random_feasible(&p.bounds, &mut rng);
            let g = p.gradient(&x);
            let h = p.hessian(&x);
            for i in 0..n {
                let step = 1e-5 * x[i].abs().max(1.0);
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += step;
                xm[i] -= step;
                let fd = (p.value(&xp) - p.value(&xm)) / (2.0 * step);
                let scale = p.value(&x).abs().max(1.0);
                assert!((fd - g[i]).abs() <= 1e-6 * scale.max(g[i].abs()), "{} d{i}", p.name);
                let dg = (p.gradient(&xp) - p.gradient(&xm)) / (2.0 * step);
                for j in 0..n {
                    let tol = 1e-6 * h.amax().max(g.amax()).max(1.0);
                    assert!((dg[j] - h[(i, j)]).abs() <= tol, "{} H{i}{j}", p.name);
                }
            }
        }
    }
}

#[test]
fn rosenbrock_reference_values() {
    let r = rosenbrock();
    assert!((r.value(&dvector![1.2, 2.0]) - 31.4).abs() < 1e-12);
    assert_eq!(r.gradient(&dvector![1.0, 1.0]), dvector![0.0, 0.0]);
    let x = dvector![0.3, -0.7];
    let g = r.gradient(&x);
    let want = dvector![-400.0 * 0.3 * (-0.7 - 0.09) - 2.0 * 0.7, 200.0 * (-0.7 - 0.09)];
    assert!((g - want).amax() < 1e-12);
}

#[test]
fn mask_exposes_only_listed_derivatives() {
    let r = rosenbrock();
    let x = dvector![0.5, 0.5];
    let mut spec = mask_availability(&r, &[1], &[]).unwrap();
    assert!(spec.partial(&x, 1).is_ok());
    assert!(matches!(spec.partial(&x, 0), Err(Error::UnavailableDerivative { .. })));
    assert!(spec.second_partial(&x, 1, 1).is_err());

    let dfo = mask_availability(&r, &[], &[]).unwrap();
    assert_eq!(dfo.availability().k_d(), 0);

    let full = second_order_pairs(&[0, 1]);
    assert_eq!(full, vec![(0, 0), (0, 1), (1, 1)]);
    let mut spec = mask_availability(&r, &[0, 1], &full).unwrap();
    assert!((spec.second_partial(&x, 1, 0).unwrap() + 400.0 * 0.5).abs() < 1e-12);
    assert!(mask_availability(&r, &[2], &[]).is_err());
}

#[test]
fn lookup_by_name() {
    assert_eq!(lookup("rosenbrock2").unwrap().dim(), 2);
    assert_eq!(lookup("yield-highnoise").unwrap().dim(), 4);
    assert!(matches!(lookup("nope"), Err(Error::UnknownProblem(_))));
    assert!(problem_names().contains(&"trid10"));
}

fn constant_spec(value: f64) -> ObjectiveSpec {
    ObjectiveSpec::new(
        Box::new(FnOracle::new(1, move |_| value)),
        crate::problem::DerivativeAvailability::none(),
        Bounds::unbounded(1),
    )
    .unwrap()
}

#[test]
fn noise_stays_within_amplitude() {
    let mut spec = add_noise(constant_spec(10.0), 1e-2, 4).unwrap();
    let x = dvector![0.0];
    let vals: Vec<f64> = (0..1000).map(|_| spec.value(&x)).collect();
    assert!(vals.iter().all(|v| (9.9..=10.1).contains(v)));
    assert!(vals.windows(2).any(|w| w[0] != w[1]));
}

#[test]
fn noise_is_zero_mean() {
    let mut spec = add_noise(constant_spec(10.0), 1e-2, 8).unwrap();
    let x = dvector![0.0];
    let n = 100_000;
    let mean = (0..n).map(|_| spec.value(&x)).sum::<f64>() / n as f64;
    // U(-a, a) has standard deviation a / sqrt(3)
    let se = 10.0 * 1e-2 / 3f64.sqrt() / (n as f64).sqrt();
    assert!((mean - 10.0).abs() <= 3.0 * se, "mean {mean}");
}

#[test]
fn zero_amplitude_is_identity() {
    let r = rosenbrock();
    let mut plain = mask_availability(&r, &[0, 1], &[]).unwrap();
    let mut noisy = add_noise(mask_availability(&r, &[0, 1], &[]).unwrap(), 0.0, 1).unwrap();
    let x = dvector![0.3, 0.9];
    assert_eq!(plain.value(&x).to_bits(), noisy.value(&x).to_bits());
    assert_eq!(plain.partial(&x, 1).unwrap().to_bits(), noisy.partial(&x, 1).unwrap().to_bits());
    assert!(add_noise(constant_spec(1.0), -1.0, 0).is_err());
}

#[test]
fn noisy_derivatives_get_independent_factors() {
    let r = rosenbrock();
    let mut spec = add_noise(mask_availability(&r, &[0, 1], &[]).unwrap(), 1e-2, 5).unwrap();
    let x = dvector![0.3, 0.9];
    let mut budget = EvaluationBudget::new(10);
    let rec = spec.evaluate(&x, &mut budget).unwrap();
    let g = r.gradient(&x);
    let f0 = rec.partial(0).unwrap() / g[0];
    let f1 = rec.partial(1).unwrap() / g[1];
    let fv = rec.value / r.value(&x);
    for f in [f0, f1, fv] {
        assert!((f - 1.0).abs() <= 1e-2);
    }
    assert!(f0 != f1 && f0 != fv);
}

#[test]
fn yield_start_value() {
    let mut yp = YieldProblem::for_mode(YieldMode::NoNoise, 0);
    assert_eq!(yp.samples, 2500);
    let y = yp.yield_estimate(&YIELD_START);
    assert!((y - 0.43).abs() <= 0.03, "start yield {y}");
    assert!(yield_optimum() > y);
}

#[test]
fn yield_extremes_and_convention() {
    let mut all = YieldProblem::with_surrogate(500, Sampling::FixedShifted, 1, 0.0, |_, _, _| -1.0);
    assert_eq!(all.yield_estimate(&YIELD_START), 1.0);
    let mut none = YieldProblem::with_surrogate(500, Sampling::FixedShifted, 1, 0.0, |_, _, _| 1.0);
    assert_eq!(none.yield_estimate(&YIELD_START), 0.0);
    assert_eq!(none.yield_gradient_means(&YIELD_START), [0.0, 0.0]);
    // all safe: the gradient is the sample mean offset, small but not exactly 0
    let g = all.yield_gradient_means(&YIELD_START);
    assert!(g.iter().all(|v| v.abs() < 0.2));
}

#[test]
fn yield_gradient_matches_finite_differences() {
    // both estimators carry Monte Carlo error of order 1/sqrt(N); with a
    // large fixed sample they must agree away from that noise
    let mut yp = YieldProblem::new(40_000, Sampling::FixedShifted, 3);
    for x in [YIELD_START, [9.5, 5.2, 1.3, 1.2], [10.2, 5.8, 1.8, 1.5]] {
        let g = yp.yield_gradient_means(&x);
        for j in 0..2 {
            let h = 0.2;
            let mut xp = x;
            let mut xm = x;
            xp[j] += h;
            xm[j] -= h;
            let fd = (yp.yield_estimate(&xp) - yp.yield_estimate(&xm)) / (2.0 * h);
            assert!((fd - g[j]).abs() <= 2e-2, "x {x:?} j {j}: {fd} vs {}", g[j]);
        }
    }
}

#[test]
fn yield_modes() {
    let mut a = yield_objective(YieldMode::NoNoise, 7).unwrap();
    let x = DVector::from_column_slice(&YIELD_START);
    assert_eq!(a.value(&x).to_bits(), a.value(&x).to_bits());
    assert!(matches!(a.partial(&x, 2), Err(Error::UnavailableDerivative { .. })));
    assert!(a.partial(&x, 0).is_ok());
    assert_eq!(YieldMode::HighNoise.samples(), 100);

    let mut b = yield_objective(YieldMode::HighNoise, 7).unwrap();
    let vals: Vec<f64> = (0..5).map(|_| b.value(&x)).collect();
    assert!(vals.windows(2).any(|w| w[0] != w[1]));
    assert!(vals.iter().all(|v| (-1.0..=0.0).contains(v)));
}

#[test]
fn yield_value_and_partials_share_samples() {
    let mut spec = yield_objective(YieldMode::LowNoise, 2).unwrap();
    let x = DVector::from_column_slice(&YIELD_START);
    let mut budget = EvaluationBudget::new(1);
    let rec = spec.evaluate(&x, &mut budget).unwrap();
    assert!(rec.value <= 0.0 && rec.value >= -1.0);
    assert_eq!(rec.gradient.len(), 2);
    assert_eq!(budget.used(), 1);
}
