//! Lagrange polynomials of the model-building systems and the geometry
//! measures derived from them.
//!
//! For systems in the monomial basis the family comes from the complete
//! system including the constant column and the incumbent's value row, so
//! every member solves `M lambda = e_i` (exactly, or in the least-squares
//! sense for regression systems). For minimum-Frobenius systems the members
//! are the minimum-Frobenius Lagrange functions; the incumbent's function is
//! `1 - sum` of the others since the constant is reproduced exactly.

use nalgebra::{DMatrix, DVector};

use crate::basis::MonomialBasis;
use crate::error::Result;
use crate::factory::{AssembledSystem, Recovery, RowSource, SystemKind};
use crate::linalg::LeastSquares;
use crate::model::QuadraticModel;
use crate::optimizer::solve_subproblem;
use crate::problem::Bounds;

/// Trust ball intersected with the bound constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub center: DVector<f64>,
    pub radius: f64,
    pub bounds: Bounds,
}

impl Region {
    pub fn new(center: DVector<f64>, radius: f64, bounds: Bounds) -> Self {
        Self {
            center,
            radius,
            bounds,
        }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// Radial projection onto the ball followed by clipping to the box. The
    /// result stays in the ball because the center lies in the box.
    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        let d = x - &self.center;
        let norm = d.norm();
        let y = if norm > self.radius {
            &self.center + d * (self.radius / norm)
        } else {
            x.clone()
        };
        self.bounds.project(&y)
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        let lo = self.bounds.lower();
        let hi = self.bounds.upper();
        (x - &self.center).norm() <= self.radius * (1.0 + tol)
            && (0..x.len()).all(|i| x[i] >= lo[i] - tol && x[i] <= hi[i] + tol)
    }
}

/// Lagrange (or Lagrange-type) polynomials of one assembled system.
#[derive(Debug, Clone)]
pub struct LagrangeFamily {
    kind: SystemKind,
    center: DVector<f64>,
    incumbent: usize,
    /// One member per training point, indexed by training-set slot.
    value_polys: Vec<QuadraticModel>,
    /// Members attached to derivative rows, in system row order.
    derivative_polys: Vec<(RowSource, QuadraticModel)>,
    basis: MonomialBasis,
    /// Packed coefficients `(c, g, H)` of every member, one column each.
    coeffs: DMatrix<f64>,
}

impl LagrangeFamily {
    pub fn kind(&self) -> SystemKind {
        self.kind
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// Number of training points `p1`.
    pub fn point_count(&self) -> usize {
        self.value_polys.len()
    }

    /// Total number of members, value and derivative ones.
    pub fn len(&self) -> usize {
        self.coeffs.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn incumbent(&self) -> usize {
        self.incumbent
    }

    /// Polynomial attached to the value of training point `i`.
    pub fn value_polynomial(&self, i: usize) -> &QuadraticModel {
        &self.value_polys[i]
    }

    pub fn derivative_polynomials(&self) -> &[(RowSource, QuadraticModel)] {
        &self.derivative_polys
    }

    /// Every member in order: value polynomials by slot, then derivative ones.
    pub fn members(&self) -> impl Iterator<Item = &QuadraticModel> {
        self.value_polys
            .iter()
            .chain(self.derivative_polys.iter().map(|(_, m)| m))
    }

    /// Values of all members at `x`.
    pub fn all_values_at(&self, x: &DVector<f64>) -> DVector<f64> {
        let phi = self.basis.full_row(&(x - &self.center));
        self.coeffs.tr_mul(&phi)
    }

    /// Values of the first `p1` (point) members at `x`.
    pub fn values_at(&self, x: &DVector<f64>) -> DVector<f64> {
        let all = self.all_values_at(x);
        all.rows(0, self.point_count()).into_owned()
    }

    fn values_at_many(&self, xs: &[DVector<f64>]) -> DMatrix<f64> {
        let q1 = self.basis.q1();
        let mut phi = DMatrix::zeros(xs.len(), q1);
        for (r, x) in xs.iter().enumerate() {
            let row = self.basis.full_row(&(x - &self.center));
            phi.row_mut(r).copy_from(&row.transpose());
        }
        phi * &self.coeffs
    }
}

/// Builds the Lagrange family of an assembled system, honouring its scaling
/// and weighting.
///
/// Fails with `RankDeficient` when the system (with the constant column
/// added, for monomial kinds) does not have full column rank.
pub fn lagrange_family(sys: &AssembledSystem) -> Result<LagrangeFamily> {
    let n = sys.shift().len();
    let basis = MonomialBasis::new(n);
    let (value_polys, derivative_polys) = match sys.recovery() {
        Recovery::Monomial(_) => monomial_family(sys, &basis)?,
        Recovery::Frobenius { .. } => frobenius_family(sys)?,
    };
    let members: Vec<&QuadraticModel> = value_polys
        .iter()
        .chain(derivative_polys.iter().map(|(_, m)| m))
        .collect();
    let mut coeffs = DMatrix::zeros(basis.q1(), members.len());
    for (k, m) in members.iter().enumerate() {
        coeffs[(0, k)] = m.constant();
        let packed = basis.pack(m.gradient_at_center(), m.hessian());
        coeffs.view_mut((1, k), (basis.len(), 1)).copy_from(&packed);
    }
    Ok(LagrangeFamily {
        kind: sys.kind(),
        center: sys.shift().clone(),
        incumbent: sys.incumbent(),
        value_polys,
        derivative_polys,
        basis,
        coeffs,
    })
}

type Members = (Vec<QuadraticModel>, Vec<(RowSource, QuadraticModel)>);

fn monomial_family(sys: &AssembledSystem, basis: &MonomialBasis) -> Result<Members> {
    let m = sys.unscaled_matrix();
    let rows = m.nrows() + 1;
    let q1 = basis.q1();
    let mut full = DMatrix::zeros(rows, q1);
    // incumbent value row: Phi(0) = e_0 in the shifted basis
    full[(0, 0)] = 1.0;
    full.view_mut((1, 1), (m.nrows(), q1 - 1)).copy_from(&m);
    let mut left = DVector::from_element(rows, 1.0);
    for (r, src) in sys.rows().iter().enumerate() {
        if matches!(src, RowSource::Value { .. }) {
            full[(r + 1, 0)] = 1.0;
        }
        left[r + 1] = sys.row_scale()[r];
    }
    let mut right = DVector::from_element(q1, 1.0);
    right.rows_mut(1, q1 - 1).copy_from(sys.col_scale());
    for r in 0..rows {
        for c in 0..q1 {
            full[(r, c)] *= left[r] * right[c];
        }
    }
    let ls = LeastSquares::factor(&full)?;
    let lambda = ls.solve_many(&DMatrix::from_diagonal(&left));

    let to_poly = |col: usize| {
        let v = lambda.column(col).component_mul(&right);
        let (g, h) = basis.unpack(&v.as_slice()[1..]);
        QuadraticModel::new(sys.shift().clone(), v[0], g, h)
    };
    let mut value_polys = vec![None; sys.point_count()];
    value_polys[sys.incumbent()] = Some(to_poly(0));
    let mut derivative_polys = Vec::new();
    for (r, src) in sys.rows().iter().enumerate() {
        match *src {
            RowSource::Value { point } => value_polys[point] = Some(to_poly(r + 1)),
            other => derivative_polys.push((other, to_poly(r + 1))),
        }
    }
    Ok((
        value_polys.into_iter().map(Option::unwrap).collect(),
        derivative_polys,
    ))
}

fn frobenius_family(sys: &AssembledSystem) -> Result<Members> {
    let n = sys.shift().len();
    let ls = LeastSquares::factor(sys.matrix())?;
    let targets: Vec<usize> = sys
        .rows()
        .iter()
        .enumerate()
        .filter(|(_, s)| !matches!(s, RowSource::Frobenius { .. }))
        .map(|(r, _)| r)
        .collect();
    let mut rhs = DMatrix::zeros(sys.nrows(), targets.len());
    for (k, &r) in targets.iter().enumerate() {
        rhs[(r, k)] = sys.row_scale()[r];
    }
    let lambda = ls.solve_many(&rhs);

    let mut value_polys = vec![None; sys.point_count()];
    let mut derivative_polys = Vec::new();
    let mut g_sum = DVector::zeros(n);
    let mut h_sum = DMatrix::zeros(n, n);
    for (k, &r) in targets.iter().enumerate() {
        let v = sys.unscale_solution(&lambda.column(k).into_owned());
        let poly = sys.recover(&v, 0.0, false);
        match sys.rows()[r] {
            RowSource::Value { point } => {
                g_sum += poly.gradient_at_center();
                h_sum += poly.hessian();
                value_polys[point] = Some(poly);
            }
            other => derivative_polys.push((other, poly)),
        }
    }
    value_polys[sys.incumbent()] = Some(QuadraticModel::new(
        sys.shift().clone(),
        1.0,
        -g_sum,
        -h_sum,
    ));
    Ok((
        value_polys.into_iter().map(Option::unwrap).collect(),
        derivative_polys,
    ))
}

/// Sampling effort of [`estimate_lambda_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaOptions {
    /// Grid points per axis; `None` means `2n + 1`, reduced to respect
    /// `max_samples`.
    pub points_per_axis: Option<usize>,
    pub max_samples: usize,
    /// Projected ascent steps from the best grid point.
    pub polish_steps: usize,
}

impl Default for LambdaOptions {
    fn default() -> Self {
        Self {
            points_per_axis: None,
            max_samples: 10_000,
            polish_steps: 5,
        }
    }
}

impl LambdaOptions {
    pub fn grid_only(points_per_axis: usize) -> Self {
        Self {
            points_per_axis: Some(points_per_axis),
            max_samples: usize::MAX,
            polish_steps: 0,
        }
    }
}

/// Sampled lower bound on the poisedness constant over a region.
#[derive(Debug, Clone, PartialEq)]
pub struct PoisednessEstimate {
    pub lambda: f64,
    /// Where the maximum was found.
    pub argmax: DVector<f64>,
    /// Index of the maximizing member, as in [`LagrangeFamily::members`].
    pub member: usize,
    /// Grid points per axis and total samples used.
    pub points_per_axis: usize,
    pub samples: usize,
}

fn axis_points(n: usize, opts: &LambdaOptions) -> usize {
    if let Some(m) = opts.points_per_axis {
        return m.max(2);
    }
    let mut m = 2 * n + 1;
    while m > 2 && (m as f64).powi(n as i32) > opts.max_samples as f64 {
        m -= 1;
    }
    m
}

/// Tensor grid over the bounding cube of the region, projected into it, plus
/// the center and the `2n` axis points.
pub fn sample_grid(region: &Region, points_per_axis: usize) -> Vec<DVector<f64>> {
    let n = region.dim();
    let m = points_per_axis.max(2);
    let r = region.radius;
    let total = m.pow(n as u32);
    let mut out = Vec::with_capacity(total + 2 * n + 1);
    out.push(region.center.clone());
    for i in 0..n {
        for sign in [1.0, -1.0] {
            let mut x = region.center.clone();
            x[i] += sign * r;
            out.push(region.project(&x));
        }
    }
    let mut idx = vec![0usize; n];
    for _ in 0..total {
        let x = DVector::from_fn(n, |i, _| {
            region.center[i] + r * (-1.0 + 2.0 * idx[i] as f64 / (m - 1) as f64)
        });
        out.push(region.project(&x));
        for k in idx.iter_mut() {
            *k += 1;
            if *k < m {
                break;
            }
            *k = 0;
        }
    }
    out
}

/// [`estimate_lambda_with`] using the default grid and polishing.
pub fn estimate_lambda(family: &LagrangeFamily, region: &Region) -> PoisednessEstimate {
    estimate_lambda_with(family, region, &LambdaOptions::default())
}

/// `max |l_i(x)|` over all members and over a deterministic sample of the
/// region, refined by a few projected ascent steps.
pub fn estimate_lambda_with(
    family: &LagrangeFamily,
    region: &Region,
    opts: &LambdaOptions,
) -> PoisednessEstimate {
    let m = axis_points(region.dim(), opts);
    let grid = sample_grid(region, m);
    let mut best = (f64::NEG_INFINITY, 0usize, 0usize);
    const CHUNK: usize = 2048;
    for (k, chunk) in grid.chunks(CHUNK).enumerate() {
        let vals = family.values_at_many(chunk);
        for r in 0..vals.nrows() {
            for c in 0..vals.ncols() {
                let v = vals[(r, c)].abs();
                if v > best.0 {
                    best = (v, k * CHUNK + r, c);
                }
            }
        }
    }
    let (mut lambda, at, mut member) = best;
    let mut x = grid[at].clone();
    let mut step = region.radius;
    for _ in 0..opts.polish_steps {
        let poly = family.members().nth(member).expect("member index");
        let val = poly.value(&x);
        let mut dir = poly.gradient(&x) * val.signum();
        let norm = dir.norm();
        if norm == 0.0 {
            break;
        }
        dir /= norm;
        let mut improved = false;
        for _ in 0..10 {
            let trial = region.project(&(&x + &dir * step));
            let vals = family.all_values_at(&trial);
            let (c, v) = vals
                .iter()
                .enumerate()
                .map(|(c, v)| (c, v.abs()))
                .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
            if v > lambda {
                lambda = v;
                member = c;
                x = trial;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    PoisednessEstimate {
        lambda,
        argmax: x,
        member,
        points_per_axis: m,
        samples: grid.len(),
    }
}

/// Index of the training point to drop when `y_add` enters the set: the
/// largest `|l_i(y_add)|` over the point polynomials, never the incumbent.
/// Values within `1e-12` (relative) of the maximum count as tied and go to
/// the lowest index.
pub fn select_outgoing(family: &LagrangeFamily, y_add: &DVector<f64>) -> usize {
    let vals = family.values_at(y_add);
    let inc = family.incumbent();
    let candidates = || (0..vals.len()).filter(move |&i| i != inc);
    let max = candidates().map(|i| vals[i].abs()).fold(0.0, f64::max);
    let tol = 1e-12 * max.max(1.0);
    candidates()
        .find(|&i| vals[i].abs() >= max - tol)
        .unwrap_or(0)
}

/// A point of the region where `|l_i|` is large, to replace training point
/// `i`. Candidates are the trust-region maximizer and minimizer of `l_i`
/// and the polished best grid point.
pub fn propose_geometry_point(family: &LagrangeFamily, i: usize, region: &Region) -> DVector<f64> {
    maximize_abs(family.value_polynomial(i), region)
}

/// Approximate maximizer of `|q|` over the region.
pub fn maximize_abs(poly: &QuadraticModel, region: &Region) -> DVector<f64> {
    let c = &region.center;
    let at_center = QuadraticModel::new(
        c.clone(),
        poly.value(c),
        poly.gradient(c),
        poly.hessian().clone(),
    );
    let negated = QuadraticModel::new(
        c.clone(),
        -at_center.constant(),
        -at_center.gradient_at_center(),
        -at_center.hessian(),
    );
    let mut candidates = vec![
        c + solve_subproblem(&at_center, c, region.radius, &region.bounds),
        c + solve_subproblem(&negated, c, region.radius, &region.bounds),
    ];

    let opts = LambdaOptions::default();
    let grid = sample_grid(region, axis_points(region.dim(), &opts));
    let mut x = grid
        .iter()
        .max_by(|a, b| poly.value(a).abs().total_cmp(&poly.value(b).abs()))
        .expect("grid is never empty")
        .clone();
    let mut step = region.radius;
    for _ in 0..opts.polish_steps {
        let dir = poly.gradient(&x) * poly.value(&x).signum();
        let norm = dir.norm();
        if norm == 0.0 {
            break;
        }
        let current = poly.value(&x).abs();
        let mut moved = false;
        for _ in 0..10 {
            let trial = region.project(&(&x + &dir * (step / norm)));
            if poly.value(&trial).abs() > current {
                x = trial;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    candidates.push(x);

    candidates
        .into_iter()
        .map(|x| region.project(&x))
        .fold(None::<(DVector<f64>, f64)>, |best, x| {
            let v = poly.value(&x).abs();
            match best {
                Some((_, b)) if v <= b => best,
                _ => Some((x, v)),
            }
        })
        .map(|(x, _)| x)
        .expect("at least one candidate")
}

/// Grid estimates of the poisedness constant for an interpolation system and
/// for a regression system that extends it by further rows, on one shared
/// grid without polishing.
pub fn theorem1_check(
    interp: &AssembledSystem,
    augmented: &AssembledSystem,
    region: &Region,
) -> Result<(f64, f64)> {
    let opts = LambdaOptions {
        polish_steps: 0,
        ..LambdaOptions::default()
    };
    let a = estimate_lambda_with(&lagrange_family(interp)?, region, &opts).lambda;
    let b = estimate_lambda_with(&lagrange_family(augmented)?, region, &opts).lambda;
    Ok((a, b))
}

#[cfg(test)]
mod tests;
