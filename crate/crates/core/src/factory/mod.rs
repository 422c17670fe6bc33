//! Model-building linear systems.
//!
//! Four system kinds are supported:
//!
//! - [`SystemKind::FullInterp`]: determined quadratic interpolation with
//!   `(n+1)(n+2)/2` points.
//! - [`SystemKind::MinFrob`]: the underdetermined BOBYQA system whose extra
//!   freedom goes to the least Frobenius-norm change of the Hessian.
//! - [`SystemKind::HermiteLs`]: value rows plus one row per available partial
//!   derivative (and optionally second derivatives), solved by least squares.
//! - [`SystemKind::HermiteBobyqa`]: the BOBYQA system with appended
//!   gradient-matching rows, solved by least squares.
//!
//! Every system is shifted so the incumbent sits at the origin, which fixes the
//! constant term to the incumbent value. After assembly a system can be scaled
//! by the trust-region radius ([`apply_scaling`]) and optionally weighted by
//! distance ([`apply_weighting`]); [`solve_system`] undoes the column scaling
//! and maps the solution to a [`QuadraticModel`].

mod assemble;
mod precondition;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::MonomialBasis;
use crate::error::Result;
use crate::linalg::LeastSquares;
use crate::model::QuadraticModel;

pub use assemble::{
    assemble_full_interp, assemble_hermite_bobyqa, assemble_hermite_ls, assemble_min_frob,
};
pub use precondition::{apply_scaling, apply_weighting, WeightScheme};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SystemKind {
    FullInterp,
    MinFrob,
    HermiteLs,
    HermiteBobyqa,
}

impl std::fmt::Display for SystemKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SystemKind::FullInterp => "full-interp",
            SystemKind::MinFrob => "min-frob",
            SystemKind::HermiteLs => "hermite-ls",
            SystemKind::HermiteBobyqa => "hermite-bobyqa",
        };
        f.write_str(s)
    }
}

/// What a single row of an assembled system encodes. Point indices refer to
/// slots of the training set the system was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSource {
    /// Interpolation condition at a non-incumbent point.
    Value { point: usize },
    /// First partial derivative in direction `dir` at `point`.
    Derivative { point: usize, dir: usize },
    /// Second partial derivative `(i, j)` at `point`.
    SecondDerivative { point: usize, i: usize, j: usize },
    /// One of the `n` linear constraint rows of the minimum-Frobenius block.
    Frobenius { dir: usize },
}

impl RowSource {
    pub fn point(&self) -> Option<usize> {
        match *self {
            RowSource::Value { point }
            | RowSource::Derivative { point, .. }
            | RowSource::SecondDerivative { point, .. } => Some(point),
            RowSource::Frobenius { .. } => None,
        }
    }
}

/// How a solution vector maps back to `(g, H)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Recovery {
    /// `v = (g, packed H)` in the monomial basis.
    Monomial(MonomialBasis),
    /// `H = H_prev + sum_i v_i z_i z_i'` and `g = v[p..p+n]`, with `z_i` the
    /// shifted non-incumbent points.
    Frobenius {
        h_prev: DMatrix<f64>,
        directions: Vec<DVector<f64>>,
    },
}

/// A model-building linear system together with everything needed to turn its
/// solution into a quadratic model.
#[derive(Debug, Clone, PartialEq)]
pub struct AssembledSystem {
    kind: SystemKind,
    matrix: DMatrix<f64>,
    rhs: DVector<f64>,
    rows: Vec<RowSource>,
    /// Accumulated left scaling (radius scaling times regression weights).
    row_scale: DVector<f64>,
    /// Accumulated right scaling; the unknowns of the original system are
    /// `col_scale .* w` where `w` solves the current one.
    col_scale: DVector<f64>,
    shift: DVector<f64>,
    f_shift: f64,
    incumbent: usize,
    point_count: usize,
    delta: Option<f64>,
    recovery: Recovery,
}

impl AssembledSystem {
    pub fn kind(&self) -> SystemKind {
        self.kind
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn rhs(&self) -> &DVector<f64> {
        &self.rhs
    }

    pub fn rows(&self) -> &[RowSource] {
        &self.rows
    }

    pub fn nrows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn row_scale(&self) -> &DVector<f64> {
        &self.row_scale
    }

    pub fn col_scale(&self) -> &DVector<f64> {
        &self.col_scale
    }

    /// The incumbent the system is shifted to.
    pub fn shift(&self) -> &DVector<f64> {
        &self.shift
    }

    pub fn incumbent_value(&self) -> f64 {
        self.f_shift
    }

    /// Training-set slot of the incumbent.
    pub fn incumbent(&self) -> usize {
        self.incumbent
    }

    /// Number of training points `p1` the system was built from.
    pub fn point_count(&self) -> usize {
        self.point_count
    }

    /// Radius used by [`apply_scaling`], if scaled.
    pub fn delta(&self) -> Option<f64> {
        self.delta
    }

    pub fn recovery(&self) -> &Recovery {
        &self.recovery
    }

    /// Matrix with all row and column scaling removed.
    pub fn unscaled_matrix(&self) -> DMatrix<f64> {
        let mut m = self.matrix.clone();
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                m[(r, c)] /= self.row_scale[r] * self.col_scale[c];
            }
        }
        m
    }

    /// Maps an unscaled solution vector to a model with constant `c`.
    /// `with_previous` controls whether the Frobenius recovery adds `H_prev`.
    pub(crate) fn recover(&self, v: &DVector<f64>, c: f64, with_previous: bool) -> QuadraticModel {
        let n = self.shift.len();
        let (g, h) = match &self.recovery {
            Recovery::Monomial(basis) => basis.unpack(v.as_slice()),
            Recovery::Frobenius { h_prev, directions } => {
                let p = directions.len();
                let g = DVector::from_iterator(n, v.iter().skip(p).take(n).copied());
                let mut h = if with_previous {
                    h_prev.clone()
                } else {
                    DMatrix::zeros(n, n)
                };
                for (vi, z) in v.iter().zip(directions) {
                    h.ger(*vi, z, z, 1.0);
                }
                (g, h)
            }
        };
        QuadraticModel::new(self.shift.clone(), c, g, h)
    }

    /// Unscales a solution of the current (scaled) system.
    pub(crate) fn unscale_solution(&self, w: &DVector<f64>) -> DVector<f64> {
        w.component_mul(&self.col_scale)
    }
}

/// Unscaled solution vector of the system (exact when square).
pub fn solve_coefficients(sys: &AssembledSystem) -> Result<DVector<f64>> {
    let ls = LeastSquares::factor(&sys.matrix)?;
    Ok(sys.unscale_solution(&ls.solve(&sys.rhs)))
}

/// Solves the system in the least-squares sense (exactly when square) and
/// recovers the model coefficients.
///
/// Fails with [`Error::RankDeficient`](crate::Error::RankDeficient) when the
/// matrix loses column rank, which callers treat as a geometry problem.
pub fn solve_system(sys: &AssembledSystem) -> Result<QuadraticModel> {
    let v = solve_coefficients(sys)?;
    Ok(sys.recover(&v, sys.f_shift, true))
}

/// Residual `|M v - b|` of the unscaled, unweighted system.
pub fn residual_norm(sys: &AssembledSystem, v: &DVector<f64>) -> f64 {
    let b = sys.rhs.component_div(&sys.row_scale);
    (sys.unscaled_matrix() * v - b).norm()
}
