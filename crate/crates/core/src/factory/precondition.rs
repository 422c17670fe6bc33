use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{AssembledSystem, Recovery, RowSource, SystemKind};
use crate::error::{Error, Result};
use crate::problem::TrainingSet;

/// Distance-based row weights `w(y) = exp(-s |y - x_opt| / d_max)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightScheme {
    pub enabled: bool,
    pub s: f64,
}

impl Default for WeightScheme {
    fn default() -> Self {
        Self {
            enabled: false,
            s: 5.0,
        }
    }
}

impl WeightScheme {
    pub fn on(s: f64) -> Self {
        Self { enabled: true, s }
    }

    /// One weight per training point. The incumbent gets 1, the farthest
    /// point `exp(-s)`.
    pub fn weights(&self, ts: &TrainingSet) -> Vec<f64> {
        let x_opt = &ts.incumbent().point;
        let d: Vec<f64> = ts
            .records()
            .iter()
            .map(|r| (&r.point - x_opt).norm())
            .collect();
        let d_max = d.iter().cloned().fold(0.0, f64::max);
        if d_max == 0.0 {
            return vec![1.0; d.len()];
        }
        d.iter().map(|&di| (-self.s * di / d_max).exp()).collect()
    }
}

fn rescale(sys: &mut AssembledSystem, left: &DVector<f64>, right: &DVector<f64>) {
    for c in 0..sys.matrix.ncols() {
        for r in 0..sys.matrix.nrows() {
            sys.matrix[(r, c)] *= left[r] * right[c];
        }
    }
    sys.rhs.component_mul_assign(left);
    sys.row_scale.component_mul_assign(left);
    sys.col_scale.component_mul_assign(right);
}

/// Scales the system by the trust-region radius so that all entries are of
/// comparable size, `L M R (R^-1 v) = L b`. Solutions are unscaled by
/// [`solve_system`](super::solve_system).
pub fn apply_scaling(mut sys: AssembledSystem, delta: f64) -> AssembledSystem {
    assert!(delta > 0.0, "scaling radius must be positive");
    let d2 = delta * delta;
    let frobenius = matches!(sys.kind, SystemKind::MinFrob | SystemKind::HermiteBobyqa);

    let left = DVector::from_iterator(
        sys.rows.len(),
        sys.rows.iter().map(|row| match (row, frobenius) {
            (RowSource::Value { .. }, false) => 1.0,
            (RowSource::Value { .. }, true) => 1.0 / d2,
            (RowSource::Frobenius { .. }, _) => delta,
            (RowSource::Derivative { .. }, false) => delta,
            (RowSource::Derivative { .. }, true) => 1.0 / delta,
            (RowSource::SecondDerivative { .. }, _) => d2,
        }),
    );
    let right = match &sys.recovery {
        Recovery::Monomial(basis) => {
            let n = basis.dim();
            DVector::from_fn(basis.len(), |c, _| if c < n { 1.0 / delta } else { 1.0 / d2 })
        }
        Recovery::Frobenius { directions, .. } => {
            let p = directions.len();
            DVector::from_fn(sys.ncols(), |c, _| if c < p { 1.0 / d2 } else { delta })
        }
    };
    rescale(&mut sys, &left, &right);
    sys.delta = Some(delta);
    sys
}

/// Multiplies each row and its right-hand side by the weight of the training
/// point it belongs to. For Hermite BOBYQA only the appended derivative rows
/// are weighted. A disabled scheme returns the system unchanged.
pub fn apply_weighting(
    mut sys: AssembledSystem,
    scheme: &WeightScheme,
    ts: &TrainingSet,
) -> Result<AssembledSystem> {
    let frobenius = match sys.kind {
        SystemKind::HermiteLs => false,
        SystemKind::HermiteBobyqa => true,
        kind => {
            return Err(Error::KindMismatch(format!(
                "weighting applies to regression systems, got {kind}"
            )))
        }
    };
    if ts.len() != sys.point_count {
        return Err(Error::DimensionMismatch {
            expected: sys.point_count,
            actual: ts.len(),
        });
    }
    if !scheme.enabled {
        return Ok(sys);
    }
    let w = scheme.weights(ts);
    let left = DVector::from_iterator(
        sys.rows.len(),
        sys.rows.iter().map(|row| match (row, frobenius) {
            (RowSource::Derivative { point, .. }, _) => w[*point],
            (_, true) => 1.0,
            (row, false) => row.point().map_or(1.0, |p| w[p]),
        }),
    );
    let ones = DVector::from_element(sys.ncols(), 1.0);
    rescale(&mut sys, &left, &ones);
    Ok(sys)
}
