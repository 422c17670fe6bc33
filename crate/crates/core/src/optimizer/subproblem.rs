//! Approximate minimization of a quadratic model over the intersection of the
//! trust-region ball and the bound constraints.

use nalgebra::{DMatrix, DVector};

use crate::model::QuadraticModel;
use crate::problem::Bounds;

const CG_TOLERANCE: f64 = 1e-12;

/// Projected gradient `x - P(x - g)` at `x`.
pub fn projected_gradient(x: &DVector<f64>, g: &DVector<f64>, bounds: &Bounds) -> DVector<f64> {
    x - bounds.project(&(x - g))
}

/// Step `s` with `center + s` in the ball of radius `delta` and in the box.
///
/// Runs truncated conjugate gradients on the free variables, fixing any
/// variable that hits a bound and restarting, and stops on the ball boundary
/// or on negative curvature. The result is compared with the Cauchy step along
/// the projected gradient and the better one is returned, which guarantees
/// `m(center) - m(center + s) >= |pi| min(delta, |pi| / (1 + |H|)) / 2`.
pub fn solve_subproblem(
    model: &QuadraticModel,
    center: &DVector<f64>,
    delta: f64,
    bounds: &Bounds,
) -> DVector<f64> {
    let g = model.gradient(center);
    let h = model.hessian();
    let cg = truncated_cg(&g, h, center, delta, bounds);
    let cauchy = cauchy_step(&g, h, center, delta, bounds);
    let q = |s: &DVector<f64>| g.dot(s) + 0.5 * s.dot(&(h * s));
    if q(&cg) <= q(&cauchy) {
        cg
    } else {
        cauchy
    }
}

/// Exact line minimization along `-pi` inside the ball and the box.
pub fn cauchy_step(
    g: &DVector<f64>,
    h: &DMatrix<f64>,
    center: &DVector<f64>,
    delta: f64,
    bounds: &Bounds,
) -> DVector<f64> {
    let pi = projected_gradient(center, g, bounds);
    let norm = pi.norm();
    if norm == 0.0 {
        return DVector::zeros(g.len());
    }
    let t_max = (delta / norm).min(1.0);
    let slope = g.dot(&pi);
    let curv = pi.dot(&(h * &pi));
    let t = if curv > 0.0 {
        (slope / curv).min(t_max)
    } else {
        t_max
    };
    feasible(-pi * t, center, delta, bounds)
}

/// Largest `t >= 0` with `|s + t d| <= delta`.
fn ball_limit(s: &DVector<f64>, d: &DVector<f64>, delta: f64) -> f64 {
    let dd = d.dot(d);
    if dd == 0.0 {
        return f64::INFINITY;
    }
    let sd = s.dot(d);
    let ss = s.dot(s);
    let disc = (sd * sd + dd * (delta * delta - ss)).max(0.0);
    ((disc.sqrt() - sd) / dd).max(0.0)
}

/// Largest `t >= 0` keeping `x + t d` in the box, with the limiting index.
fn box_limit(x: &DVector<f64>, d: &DVector<f64>, bounds: &Bounds) -> (f64, Option<usize>) {
    let mut best = (f64::INFINITY, None);
    for i in 0..x.len() {
        let t = if d[i] > 0.0 {
            (bounds.upper()[i] - x[i]) / d[i]
        } else if d[i] < 0.0 {
            (bounds.lower()[i] - x[i]) / d[i]
        } else {
            continue;
        };
        let t = t.max(0.0);
        if t < best.0 {
            best = (t, Some(i));
        }
    }
    best
}

fn truncated_cg(
    g: &DVector<f64>,
    h: &DMatrix<f64>,
    center: &DVector<f64>,
    delta: f64,
    bounds: &Bounds,
) -> DVector<f64> {
    let n = g.len();
    let mut s = DVector::zeros(n);
    let mut fixed = vec![false; n];
    let lo = bounds.lower();
    let hi = bounds.upper();

    'restart: for _ in 0..=n {
        let x = center + &s;
        let mut r = -(g + h * &s);
        // variables sitting on a bound with the descent direction pointing out
        for i in 0..n {
            if (x[i] <= lo[i] && r[i] < 0.0) || (x[i] >= hi[i] && r[i] > 0.0) {
                fixed[i] = true;
            }
        }
        mask(&mut r, &fixed);
        let r0 = r.norm();
        if r0 <= CG_TOLERANCE * g.norm().max(1.0) {
            break;
        }
        let mut d = r.clone();
        let mut rr = r.dot(&r);
        for _ in 0..n {
            let hd = h * &d;
            let curv = d.dot(&hd);
            let t_ball = ball_limit(&s, &d, delta);
            let (t_box, hit) = box_limit(&(center + &s), &d, bounds);
            let t_cg = if curv > 0.0 { rr / curv } else { f64::INFINITY };
            let t = t_cg.min(t_ball).min(t_box);
            if !t.is_finite() {
                break 'restart;
            }
            s += &d * t;
            if t == t_ball {
                break 'restart;
            }
            if t == t_box {
                if let Some(i) = hit {
                    // land exactly on the bound and freeze the variable
                    s[i] = if d[i] > 0.0 { hi[i] } else { lo[i] } - center[i];
                    fixed[i] = true;
                }
                continue 'restart;
            }
            let mut r_new = &r - hd * t;
            mask(&mut r_new, &fixed);
            let rr_new = r_new.dot(&r_new);
            if rr_new.sqrt() <= CG_TOLERANCE * r0 {
                break 'restart;
            }
            d = &r_new + d * (rr_new / rr);
            mask(&mut d, &fixed);
            r = r_new;
            rr = rr_new;
        }
        break;
    }
    feasible(s, center, delta, bounds)
}

fn mask(v: &mut DVector<f64>, fixed: &[bool]) {
    for (x, &f) in v.iter_mut().zip(fixed) {
        if f {
            *x = 0.0;
        }
    }
}

/// Removes round-off violations of the ball and box constraints.
fn feasible(s: DVector<f64>, center: &DVector<f64>, delta: f64, bounds: &Bounds) -> DVector<f64> {
    let norm = s.norm();
    let s = if norm > delta { s * (delta / norm) } else { s };
    bounds.project(&(center + &s)) - center
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;
    use proptest::prelude::*;

    fn model(g: DVector<f64>, h: DMatrix<f64>) -> QuadraticModel {
        let n = g.len();
        QuadraticModel::new(DVector::zeros(n), 0.0, g, h)
    }

    #[test]
    fn affine_model_steps_to_the_boundary() {
        let m = model(dvector![3.0, -4.0], DMatrix::zeros(2, 2));
        let s = solve_subproblem(&m, &dvector![0.0, 0.0], 0.5, &Bounds::unbounded(2));
        assert!((s - dvector![-0.3, 0.4]).amax() < 1e-12);
    }

    #[test]
    fn stationary_convex_model_gives_zero_step() {
        let m = model(dvector![0.0, 0.0], DMatrix::identity(2, 2));
        let s = solve_subproblem(&m, &dvector![0.0, 0.0], 1.0, &Bounds::unbounded(2));
        assert_eq!(s, dvector![0.0, 0.0]);
    }

    #[test]
    fn interior_minimizer_is_found() {
        let h = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, 2.0]);
        let g = dvector![0.3, -0.2, 0.1];
        let exact = -h.clone().lu().solve(&g).unwrap();
        let s = solve_subproblem(&model(g, h), &DVector::zeros(3), 1.0, &Bounds::unbounded(3));
        assert!((s - exact).amax() < 1e-6);
    }

    #[test]
    fn negative_curvature_reaches_the_boundary() {
        let h = DMatrix::from_diagonal(&dvector![-1.0, 2.0]);
        let s = solve_subproblem(&model(dvector![0.1, 0.0], h), &DVector::zeros(2), 2.0, &Bounds::unbounded(2));
        assert!((s.norm() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn bounds_are_respected() {
        let bounds = Bounds::uniform(2, -0.1, 1.0).unwrap();
        let m = model(dvector![1.0, 1.0], DMatrix::zeros(2, 2));
        let s = solve_subproblem(&m, &dvector![0.0, 0.5], 1.0, &bounds);
        assert!((s[0] + 0.1).abs() < 1e-15);
        assert!(bounds.contains(&(dvector![0.0, 0.5] + &s)));
        assert!(s.norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn active_bound_at_center_is_kept() {
        // gradient pushes x1 below its bound, x2 is free
        let bounds = Bounds::uniform(2, 0.0, 5.0).unwrap();
        let m = model(dvector![1.0, -1.0], DMatrix::identity(2, 2) * 0.1);
        let center = dvector![0.0, 1.0];
        let s = solve_subproblem(&m, &center, 1.0, &bounds);
        assert_eq!(s[0], 0.0);
        assert!((s[1] - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn cauchy_decrease_and_feasibility(
            vals in proptest::collection::vec(-1.0f64..1.0, 4 + 16 + 4),
            delta in 0.01f64..2.0,
        ) {
            let n = 4;
            let g = DVector::from_column_slice(&vals[..n]) * 3.0;
            let a = DMatrix::from_column_slice(n, n, &vals[n..n + 16]);
            let h = (&a + a.transpose()) * 2.0;
            let center = DVector::from_column_slice(&vals[n + 16..]) * 0.9;
            let bounds = Bounds::uniform(n, -1.0, 1.0).unwrap();
            let m = QuadraticModel::new(center.clone(), 0.0, g.clone(), h.clone());
            let s = solve_subproblem(&m, &center, delta, &bounds);
            let x = &center + &s;
            prop_assert!(bounds.contains(&x));
            prop_assert!(s.norm() <= delta * (1.0 + 1e-12));
            let pi = projected_gradient(&center, &g, &bounds).norm();
            let h_norm = h.clone().singular_values().max();
            let required = 0.5 * pi * delta.min(pi / (1.0 + h_norm));
            let decrease = m.value(&center) - m.value(&x);
            prop_assert!(decrease >= required * (1.0 - 1e-10) - 1e-14,
                "decrease {decrease:e} < {required:e}");
        }
    }
}
