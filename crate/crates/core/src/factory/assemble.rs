use nalgebra::{DMatrix, DVector};

use super::{AssembledSystem, Recovery, RowSource, SystemKind};
use crate::basis::MonomialBasis;
use crate::error::{Error, Result};
use crate::problem::{DerivativeAvailability, TrainingSet};

/// Shifted points `y_i - x_opt` for every slot, and the non-incumbent slots.
fn shifted(ts: &TrainingSet) -> (Vec<DVector<f64>>, Vec<usize>) {
    let x_opt = &ts.incumbent().point;
    let z = ts.records().iter().map(|r| &r.point - x_opt).collect();
    let others = (0..ts.len()).filter(|&i| i != ts.incumbent_index()).collect();
    (z, others)
}

fn build(
    kind: SystemKind,
    ts: &TrainingSet,
    matrix: DMatrix<f64>,
    rhs: DVector<f64>,
    rows: Vec<RowSource>,
    recovery: Recovery,
) -> AssembledSystem {
    let (nr, nc) = matrix.shape();
    AssembledSystem {
        kind,
        matrix,
        rhs,
        rows,
        row_scale: DVector::from_element(nr, 1.0),
        col_scale: DVector::from_element(nc, 1.0),
        shift: ts.incumbent().point.clone(),
        f_shift: ts.incumbent().value,
        incumbent: ts.incumbent_index(),
        point_count: ts.len(),
        delta: None,
        recovery,
    }
}

fn missing(what: String) -> Error {
    Error::MissingDerivative { what }
}

/// Determined interpolation: one row per non-incumbent point, requires
/// exactly `(n+1)(n+2)/2` points.
pub fn assemble_full_interp(ts: &TrainingSet) -> Result<AssembledSystem> {
    let n = ts.dim();
    let basis = MonomialBasis::new(n);
    if ts.len() != basis.q1() {
        return Err(Error::WrongSetSize {
            expected: basis.q1().to_string(),
            actual: ts.len(),
        });
    }
    let mut sys = hermite_rows(ts, &DerivativeAvailability::none(), false)?;
    sys.kind = SystemKind::FullInterp;
    Ok(sys)
}

/// Value rows followed by derivative rows for every point (point-major) and,
/// if requested, second-derivative rows for every point.
fn hermite_rows(
    ts: &TrainingSet,
    availability: &DerivativeAvailability,
    second_order: bool,
) -> Result<AssembledSystem> {
    let n = ts.dim();
    let basis = MonomialBasis::new(n);
    let (z, others) = shifted(ts);
    let f_opt = ts.incumbent().value;

    let mut rows = Vec::new();
    rows.extend(others.iter().map(|&point| RowSource::Value { point }));
    for point in 0..ts.len() {
        rows.extend(
            availability
                .first()
                .iter()
                .map(|&dir| RowSource::Derivative { point, dir }),
        );
    }
    if second_order {
        for point in 0..ts.len() {
            rows.extend(
                availability
                    .second()
                    .iter()
                    .map(|&(i, j)| RowSource::SecondDerivative { point, i, j }),
            );
        }
    }

    let cols = basis.len();
    let mut m = DMatrix::zeros(rows.len(), cols);
    let mut b = DVector::zeros(rows.len());
    let mut buf = vec![0.0; cols];
    for (r, row) in rows.iter().enumerate() {
        let rec = |p: usize| &ts.records()[p];
        match *row {
            RowSource::Value { point } => {
                basis.fill_row(&z[point], &mut buf);
                b[r] = rec(point).value - f_opt;
            }
            RowSource::Derivative { point, dir } => {
                basis.fill_derivative_row(&z[point], dir, &mut buf);
                b[r] = rec(point)
                    .partial(dir)
                    .ok_or_else(|| missing(format!("d/dx{dir} at point {point}")))?;
            }
            RowSource::SecondDerivative { point, i, j } => {
                buf.iter_mut().for_each(|v| *v = 0.0);
                buf[basis.quad_column(i, j)] = 1.0;
                b[r] = rec(point)
                    .second_partial(i, j)
                    .ok_or_else(|| missing(format!("d2/dx{i}dx{j} at point {point}")))?;
            }
            RowSource::Frobenius { .. } => unreachable!(),
        }
        m.row_mut(r).copy_from_slice(&buf);
    }
    Ok(build(
        SystemKind::HermiteLs,
        ts,
        m,
        b,
        rows,
        Recovery::Monomial(basis),
    ))
}

/// Hermite least-squares system. Needs at least as many rows as the
/// `(n+1)(n+2)/2 - 1` unknowns.
pub fn assemble_hermite_ls(
    ts: &TrainingSet,
    availability: &DerivativeAvailability,
    include_second_order: bool,
) -> Result<AssembledSystem> {
    let n = ts.dim();
    let cols = MonomialBasis::new(n).len();
    let k2 = if include_second_order {
        availability.second().len()
    } else {
        0
    };
    let rows = ts.len() * (1 + availability.k_d() + k2) - 1;
    if rows < cols {
        return Err(Error::Underdetermined { rows, cols });
    }
    hermite_rows(ts, availability, include_second_order)
}

fn check_frobenius_size(ts: &TrainingSet, strict_upper: bool) -> Result<()> {
    let n = ts.dim();
    let q1 = MonomialBasis::new(n).q1();
    let p1 = ts.len();
    if p1 < n + 2 || (strict_upper && p1 >= q1) {
        let expected = if strict_upper {
            format!("{}..{}", n + 2, q1)
        } else {
            format!(">= {}", n + 2)
        };
        return Err(Error::WrongSetSize {
            expected,
            actual: p1,
        });
    }
    Ok(())
}

/// The `[[A, B'], [B, 0]]` block with its right-hand side.
fn frobenius_block(
    ts: &TrainingSet,
    h_prev: &DMatrix<f64>,
    extra_rows: usize,
) -> (DMatrix<f64>, DVector<f64>, Vec<RowSource>, Vec<DVector<f64>>) {
    let n = ts.dim();
    let (z, others) = shifted(ts);
    let dirs: Vec<DVector<f64>> = others.iter().map(|&i| z[i].clone()).collect();
    let p = dirs.len();
    let f_opt = ts.incumbent().value;

    let mut m = DMatrix::zeros(p + n + extra_rows, p + n);
    let mut b = DVector::zeros(p + n + extra_rows);
    for i in 0..p {
        for j in 0..p {
            let d = dirs[i].dot(&dirs[j]);
            m[(i, j)] = 0.5 * d * d;
        }
        for k in 0..n {
            m[(i, p + k)] = dirs[i][k];
            m[(p + k, i)] = dirs[i][k];
        }
        let rec = &ts.records()[others[i]];
        b[i] = rec.value - f_opt - 0.5 * dirs[i].dot(&(h_prev * &dirs[i]));
    }
    let mut rows: Vec<RowSource> = others
        .iter()
        .map(|&point| RowSource::Value { point })
        .collect();
    rows.extend((0..n).map(|dir| RowSource::Frobenius { dir }));
    (m, b, rows, dirs)
}

fn check_h_prev(n: usize, h_prev: &DMatrix<f64>) -> Result<()> {
    if h_prev.shape() != (n, n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: h_prev.nrows(),
        });
    }
    Ok(())
}

/// Minimum Frobenius-norm system with `n+2 <= p1 < (n+1)(n+2)/2` points.
/// `h_prev` is the previous model Hessian (zero for the first model).
pub fn assemble_min_frob(ts: &TrainingSet, h_prev: &DMatrix<f64>) -> Result<AssembledSystem> {
    check_frobenius_size(ts, true)?;
    check_h_prev(ts.dim(), h_prev)?;
    let (m, b, rows, dirs) = frobenius_block(ts, h_prev, 0);
    Ok(build(
        SystemKind::MinFrob,
        ts,
        m,
        b,
        rows,
        Recovery::Frobenius {
            h_prev: h_prev.clone(),
            directions: dirs,
        },
    ))
}

/// Minimum Frobenius-norm system with gradient-matching rows appended for the
/// known directions at every training point. The result is tall,
/// `(p + n + p1 k_d) x (p + n)`, and is solved by least squares.
pub fn assemble_hermite_bobyqa(
    ts: &TrainingSet,
    availability: &DerivativeAvailability,
    h_prev: &DMatrix<f64>,
) -> Result<AssembledSystem> {
    check_frobenius_size(ts, false)?;
    check_h_prev(ts.dim(), h_prev)?;
    if availability.k_d() == 0 {
        return Err(Error::InvalidConfig(
            "Hermite BOBYQA needs at least one known derivative direction".into(),
        ));
    }
    let n = ts.dim();
    let kd = availability.k_d();
    let extra = ts.len() * kd;
    let (mut m, mut b, mut rows, dirs) = frobenius_block(ts, h_prev, extra);
    let p = dirs.len();
    let x_opt = &ts.incumbent().point;

    let mut r = p + n;
    for (point, rec) in ts.records().iter().enumerate() {
        let zj = &rec.point - x_opt;
        let h_zj = h_prev * &zj;
        // C^i z_j = z_i (z_i' z_j)
        let proj: Vec<f64> = dirs.iter().map(|zi| zi.dot(&zj)).collect();
        for &l in availability.first() {
            for (i, zi) in dirs.iter().enumerate() {
                m[(r, i)] = zi[l] * proj[i];
            }
            m[(r, p + l)] = 1.0;
            let df = rec
                .partial(l)
                .ok_or_else(|| missing(format!("d/dx{l} at point {point}")))?;
            b[r] = df - h_zj[l];
            rows.push(RowSource::Derivative { point, dir: l });
            r += 1;
        }
    }
    Ok(build(
        SystemKind::HermiteBobyqa,
        ts,
        m,
        b,
        rows,
        Recovery::Frobenius {
            h_prev: h_prev.clone(),
            directions: dirs,
        },
    ))
}
