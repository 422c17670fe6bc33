use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::optimizer::{Taylor, TaylorFn};
use crate::problem::{Bounds, DerivativeAvailability, ObjectiveSpec, Oracle};

type Value = fn(&DVector<f64>) -> f64;
type Gradient = fn(&DVector<f64>) -> DVector<f64>;
type Hessian = fn(&DVector<f64>) -> DMatrix<f64>;

/// A smooth bound-constrained test function with analytic derivatives and a
/// known minimizer.
#[derive(Clone)]
pub struct TestProblem {
    pub name: &'static str,
    pub bounds: Bounds,
    pub x0: DVector<f64>,
    pub x_ref: DVector<f64>,
    pub f_ref: f64,
    f: Value,
    grad: Gradient,
    hess: Hessian,
}

impl std::fmt::Debug for TestProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TestProblem")
            .field("name", &self.name)
            .field("n", &self.dim())
            .finish_non_exhaustive()
    }
}

impl TestProblem {
    pub fn dim(&self) -> usize {
        self.x0.len()
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        (self.f)(x)
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.grad)(x)
    }

    pub fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        (self.hess)(x)
    }

    pub fn taylor(&self, x: &DVector<f64>) -> Taylor {
        Taylor {
            value: self.value(x),
            gradient: self.gradient(x),
            hessian: self.hessian(x),
        }
    }

    /// Taylor data for [`crate::optimizer::run_with_diagnostic`].
    pub fn taylor_fn(&self) -> TaylorFn {
        let (f, g, h) = (self.f, self.grad, self.hess);
        Box::new(move |x| Taylor {
            value: f(x),
            gradient: g(x),
            hessian: h(x),
        })
    }

    /// Whether `f` is within `1e-6 max(1, |f_ref|)` of the reference value.
    pub fn is_success(&self, f: f64) -> bool {
        f <= self.f_ref + 1e-6 * self.f_ref.abs().max(1.0)
    }

    pub fn oracle(&self) -> AnalyticOracle {
        AnalyticOracle {
            n: self.dim(),
            f: self.f,
            grad: self.grad,
            hess: self.hess,
        }
    }

    /// Objective exposing only the derivatives in `availability`.
    pub fn spec(&self, availability: DerivativeAvailability) -> Result<ObjectiveSpec> {
        ObjectiveSpec::new(Box::new(self.oracle()), availability, self.bounds.clone())
    }
}

/// Oracle backed by analytic value, gradient and Hessian.
#[derive(Clone)]
pub struct AnalyticOracle {
    n: usize,
    f: Value,
    grad: Gradient,
    hess: Hessian,
}

impl Oracle for AnalyticOracle {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&mut self, x: &DVector<f64>) -> f64 {
        (self.f)(x)
    }

    fn partial(&mut self, x: &DVector<f64>, i: usize) -> Option<f64> {
        Some((self.grad)(x)[i])
    }

    fn second_partial(&mut self, x: &DVector<f64>, i: usize, j: usize) -> Option<f64> {
        Some((self.hess)(x)[(i, j)])
    }
}

fn problem(
    name: &'static str,
    lo: f64,
    hi: f64,
    x0: &[f64],
    x_ref: &[f64],
    f_ref: f64,
    f: Value,
    grad: Gradient,
    hess: Hessian,
) -> TestProblem {
    let n = x0.len();
    TestProblem {
        name,
        bounds: Bounds::uniform(n, lo, hi).expect("valid box"),
        x0: DVector::from_column_slice(x0),
        x_ref: DVector::from_column_slice(x_ref),
        f_ref,
        f,
        grad,
        hess,
    }
}

fn rosenbrock_f(x: &DVector<f64>) -> f64 {
    (0..x.len() - 1)
        .map(|i| 100.0 * (x[i + 1] - x[i] * x[i]).powi(2) + (1.0 - x[i]).powi(2))
        .sum()
}

fn rosenbrock_g(x: &DVector<f64>) -> DVector<f64> {
    let mut g = DVector::zeros(x.len());
    for i in 0..x.len() - 1 {
        let t = x[i + 1] - x[i] * x[i];
        g[i] += -400.0 * x[i] * t - 2.0 * (1.0 - x[i]);
        g[i + 1] += 200.0 * t;
    }
    g
}

fn rosenbrock_h(x: &DVector<f64>) -> DMatrix<f64> {
    let n = x.len();
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n - 1 {
        h[(i, i)] += 1200.0 * x[i] * x[i] - 400.0 * x[i + 1] + 2.0;
        h[(i, i + 1)] -= 400.0 * x[i];
        h[(i + 1, i)] -= 400.0 * x[i];
        h[(i + 1, i + 1)] += 200.0;
    }
    h
}

const BEALE: [f64; 3] = [1.5, 2.25, 2.625];

fn beale_f(x: &DVector<f64>) -> f64 {
    (1..=3)
        .map(|k| (BEALE[k - 1] - x[0] + x[0] * x[1].powi(k as i32)).powi(2))
        .sum()
}

fn beale_g(x: &DVector<f64>) -> DVector<f64> {
    let (a, b) = (x[0], x[1]);
    let mut g = DVector::zeros(2);
    for k in 1..=3i32 {
        let t = BEALE[k as usize - 1] - a + a * b.powi(k);
        g[0] += 2.0 * t * (b.powi(k) - 1.0);
        g[1] += 2.0 * t * k as f64 * a * b.powi(k - 1);
    }
    g
}

fn beale_h(x: &DVector<f64>) -> DMatrix<f64> {
    let (a, b) = (x[0], x[1]);
    let mut h = DMatrix::zeros(2, 2);
    for k in 1..=3i32 {
        let kf = k as f64;
        let t = BEALE[k as usize - 1] - a + a * b.powi(k);
        let ta = b.powi(k) - 1.0;
        let tb = kf * a * b.powi(k - 1);
        let tab = kf * b.powi(k - 1);
        let tbb = if k >= 2 { kf * (kf - 1.0) * a * b.powi(k - 2) } else { 0.0 };
        h[(0, 0)] += 2.0 * ta * ta;
        h[(0, 1)] += 2.0 * (ta * tb + t * tab);
        h[(1, 1)] += 2.0 * (tb * tb + t * tbb);
    }
    h[(1, 0)] = h[(0, 1)];
    h
}

fn booth_f(x: &DVector<f64>) -> f64 {
    (x[0] + 2.0 * x[1] - 7.0).powi(2) + (2.0 * x[0] + x[1] - 5.0).powi(2)
}

fn booth_g(x: &DVector<f64>) -> DVector<f64> {
    let (r1, r2) = (x[0] + 2.0 * x[1] - 7.0, 2.0 * x[0] + x[1] - 5.0);
    DVector::from_column_slice(&[2.0 * r1 + 4.0 * r2, 4.0 * r1 + 2.0 * r2])
}

fn booth_h(_: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[10.0, 8.0, 8.0, 10.0])
}

fn sphere_f(x: &DVector<f64>) -> f64 {
    x.norm_squared()
}

fn sphere_g(x: &DVector<f64>) -> DVector<f64> {
    x * 2.0
}

fn sphere_h(x: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::identity(x.len(), x.len()) * 2.0
}

// minimizer (1, 0) sits in a corner of [0, 1]^2
fn boxquad_f(x: &DVector<f64>) -> f64 {
    (x[0] - 2.0).powi(2) + (x[1] + 1.0).powi(2) + 0.5 * x[0] * x[1]
}

fn boxquad_g(x: &DVector<f64>) -> DVector<f64> {
    DVector::from_column_slice(&[
        2.0 * (x[0] - 2.0) + 0.5 * x[1],
        2.0 * (x[1] + 1.0) + 0.5 * x[0],
    ])
}

fn boxquad_h(_: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 2.0])
}

fn dixon_price_f(x: &DVector<f64>) -> f64 {
    (x[0] - 1.0).powi(2)
        + (1..x.len())
            .map(|i| (i + 1) as f64 * (2.0 * x[i] * x[i] - x[i - 1]).powi(2))
            .sum::<f64>()
}

fn dixon_price_g(x: &DVector<f64>) -> DVector<f64> {
    let mut g = DVector::zeros(x.len());
    g[0] = 2.0 * (x[0] - 1.0);
    for i in 1..x.len() {
        let w = (i + 1) as f64;
        let t = 2.0 * x[i] * x[i] - x[i - 1];
        g[i] += w * 2.0 * t * 4.0 * x[i];
        g[i - 1] -= w * 2.0 * t;
    }
    g
}

fn dixon_price_h(x: &DVector<f64>) -> DMatrix<f64> {
    let n = x.len();
    let mut h = DMatrix::zeros(n, n);
    h[(0, 0)] = 2.0;
    for i in 1..n {
        let w = (i + 1) as f64;
        let t = 2.0 * x[i] * x[i] - x[i - 1];
        h[(i, i)] += w * (2.0 * 16.0 * x[i] * x[i] + 8.0 * t);
        h[(i, i - 1)] -= w * 8.0 * x[i];
        h[(i - 1, i)] -= w * 8.0 * x[i];
        h[(i - 1, i - 1)] += w * 2.0;
    }
    h
}

fn wood_f(x: &DVector<f64>) -> f64 {
    100.0 * (x[1] - x[0] * x[0]).powi(2)
        + (1.0 - x[0]).powi(2)
        + 90.0 * (x[3] - x[2] * x[2]).powi(2)
        + (1.0 - x[2]).powi(2)
        + 10.1 * ((x[1] - 1.0).powi(2) + (x[3] - 1.0).powi(2))
        + 19.8 * (x[1] - 1.0) * (x[3] - 1.0)
}

fn wood_g(x: &DVector<f64>) -> DVector<f64> {
    let t1 = x[1] - x[0] * x[0];
    let t2 = x[3] - x[2] * x[2];
    DVector::from_column_slice(&[
        -400.0 * x[0] * t1 - 2.0 * (1.0 - x[0]),
        200.0 * t1 + 20.2 * (x[1] - 1.0) + 19.8 * (x[3] - 1.0),
        -360.0 * x[2] * t2 - 2.0 * (1.0 - x[2]),
        180.0 * t2 + 20.2 * (x[3] - 1.0) + 19.8 * (x[1] - 1.0),
    ])
}

fn wood_h(x: &DVector<f64>) -> DMatrix<f64> {
    let mut h = DMatrix::zeros(4, 4);
    h[(0, 0)] = 1200.0 * x[0] * x[0] - 400.0 * x[1] + 2.0;
    h[(0, 1)] = -400.0 * x[0];
    h[(1, 1)] = 220.2;
    h[(2, 2)] = 1080.0 * x[2] * x[2] - 360.0 * x[3] + 2.0;
    h[(2, 3)] = -360.0 * x[2];
    h[(3, 3)] = 200.2;
    h[(1, 3)] = 19.8;
    h.fill_lower_triangle_with_upper_triangle();
    h
}

fn zakharov_c(n: usize) -> DVector<f64> {
    DVector::from_fn(n, |i, _| 0.5 * (i + 1) as f64)
}

fn zakharov_f(x: &DVector<f64>) -> f64 {
    let s = zakharov_c(x.len()).dot(x);
    x.norm_squared() + s * s + s.powi(4)
}

fn zakharov_g(x: &DVector<f64>) -> DVector<f64> {
    let c = zakharov_c(x.len());
    let s = c.dot(x);
    x * 2.0 + c * (2.0 * s + 4.0 * s.powi(3))
}

fn zakharov_h(x: &DVector<f64>) -> DMatrix<f64> {
    let n = x.len();
    let c = zakharov_c(n);
    let s = c.dot(x);
    DMatrix::identity(n, n) * 2.0 + &c * c.transpose() * (2.0 + 12.0 * s * s)
}

fn trid_f(x: &DVector<f64>) -> f64 {
    x.iter().map(|v| (v - 1.0).powi(2)).sum::<f64>()
        - (1..x.len()).map(|i| x[i] * x[i - 1]).sum::<f64>()
}

fn trid_g(x: &DVector<f64>) -> DVector<f64> {
    let n = x.len();
    DVector::from_fn(n, |i, _| {
        let left = if i > 0 { x[i - 1] } else { 0.0 };
        let right = if i + 1 < n { x[i + 1] } else { 0.0 };
        2.0 * (x[i] - 1.0) - left - right
    })
}

fn trid_h(x: &DVector<f64>) -> DMatrix<f64> {
    let n = x.len();
    DMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
        0 => 2.0,
        1 => -1.0,
        _ => 0.0,
    })
}

fn trid(name: &'static str, n: usize) -> TestProblem {
    let nf = n as f64;
    let x_ref: Vec<f64> = (0..n).map(|i| ((i + 1) * (n - i)) as f64).collect();
    let f_ref = -nf * (nf + 4.0) * (nf - 1.0) / 6.0;
    problem(name, -nf * nf, nf * nf, &vec![0.0; n], &x_ref, f_ref, trid_f, trid_g, trid_h)
}

fn dixon_price_ref(n: usize) -> Vec<f64> {
    (1..=n)
        .map(|i| {
            let p = 2f64.powi(i as i32);
            2f64.powf(-(p - 2.0) / p)
        })
        .collect()
}

/// The analytic test suite, covering n = 2, 3, 4, 5 and 10.
pub fn test_problems() -> Vec<TestProblem> {
    vec![
        rosenbrock(),
        problem("beale2", -4.5, 4.5, &[1.0, 1.0], &[3.0, 0.5], 0.0, beale_f, beale_g, beale_h),
        problem("booth2", -10.0, 10.0, &[0.0, 0.0], &[1.0, 3.0], 0.0, booth_f, booth_g, booth_h),
        problem("sphere2", -2.0, 2.0, &[1.0; 2], &[0.0; 2], 0.0, sphere_f, sphere_g, sphere_h),
        problem("boxquad2", 0.0, 1.0, &[0.5, 0.5], &[1.0, 0.0], 2.0, boxquad_f, boxquad_g, boxquad_h),
        problem("sphere3", -2.0, 2.0, &[1.0; 3], &[0.0; 3], 0.0, sphere_f, sphere_g, sphere_h),
        problem(
            "dixonprice3",
            -10.0,
            10.0,
            &[1.0; 3],
            &dixon_price_ref(3),
            0.0,
            dixon_price_f,
            dixon_price_g,
            dixon_price_h,
        ),
        problem("wood4", -10.0, 10.0, &[-3.0, -1.0, -3.0, -1.0], &[1.0; 4], 0.0, wood_f, wood_g, wood_h),
        problem("zakharov4", -5.0, 10.0, &[1.0; 4], &[0.0; 4], 0.0, zakharov_f, zakharov_g, zakharov_h),
        problem("sphere5", -2.0, 2.0, &[1.0; 5], &[0.0; 5], 0.0, sphere_f, sphere_g, sphere_h),
        problem(
            "rosenbrock5",
            -5.0,
            5.0,
            &[-1.2, 1.0, -1.2, 1.0, -1.2],
            &[1.0; 5],
            0.0,
            rosenbrock_f,
            rosenbrock_g,
            rosenbrock_h,
        ),
        trid("trid5", 5),
        problem("sphere10", -2.0, 2.0, &[1.0; 10], &[0.0; 10], 0.0, sphere_f, sphere_g, sphere_h),
        trid("trid10", 10),
    ]
}

/// `f = 100 (x2 - x1^2)^2 + (1 - x1)^2` on `[-5, 5]^2`, started at
/// `(1.2, 2)`.
pub fn rosenbrock() -> TestProblem {
    problem(
        "rosenbrock2",
        -5.0,
        5.0,
        &[1.2, 2.0],
        &[1.0, 1.0],
        0.0,
        rosenbrock_f,
        rosenbrock_g,
        rosenbrock_h,
    )
}

/// `f = |x|^2` on `[-2, 2]^n`, started at `(1, ..., 1)`.
pub fn sphere(n: usize) -> TestProblem {
    problem(
        "sphere",
        -2.0,
        2.0,
        &vec![1.0; n],
        &vec![0.0; n],
        0.0,
        sphere_f,
        sphere_g,
        sphere_h,
    )
}
