use nalgebra::{DMatrix, DVector};

use crate::model::QuadraticModel;

/// Second-order Taylor model of the objective at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Taylor {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

impl Taylor {
    pub fn at(&self, center: &DVector<f64>, x: &DVector<f64>) -> f64 {
        let d = x - center;
        self.value + self.gradient.dot(&d) + 0.5 * d.dot(&(&self.hessian * &d))
    }
}

/// Largest sample count of the midpoint rule before the per-axis count drops.
const MAX_SAMPLES: f64 = 1e6;

/// Squared L2 distance `int (m - T2)^2` over the cube `center +- delta`, by the midpoint
/// rule with 11 points per axis (fewer in high dimension).
pub fn model_error_diagnostic(
    model: &QuadraticModel,
    taylor: &Taylor,
    center: &DVector<f64>,
    delta: f64,
) -> f64 {
    let n = center.len();
    let mut m = 11usize;
    while m > 1 && (m as f64).powi(n as i32) > MAX_SAMPLES {
        m -= 1;
    }
    let h = 2.0 * delta / m as f64;
    let total = m.pow(n as u32);
    let mut idx = vec![0usize; n];
    let mut sum = 0.0;
    let mut x = center.clone();
    for _ in 0..total {
        for i in 0..n {
            x[i] = center[i] - delta + h * (idx[i] as f64 + 0.5);
        }
        let e = model.value(&x) - taylor.at(center, &x);
        sum += e * e;
        for k in idx.iter_mut() {
            *k += 1;
            if *k < m {
                break;
            }
            *k = 0;
        }
    }
    sum * h.powi(n as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    #[test]
    fn matching_model_has_zero_error() {
        let c = dvector![1.0, -2.0];
        let h = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 4.0]);
        let t = Taylor {
            value: 3.0,
            gradient: dvector![0.5, -1.0],
            hessian: h.clone(),
        };
        let m = QuadraticModel::new(c.clone(), 3.0, dvector![0.5, -1.0], h);
        assert!(model_error_diagnostic(&m, &t, &c, 0.01) < 1e-18);
    }

    #[test]
    fn constant_offset_integrates_to_volume() {
        // (m - T)^2 = 1 on a cube of side 0.02: integral 4e-4
        let c = dvector![0.0, 0.0];
        let t = Taylor {
            value: 0.0,
            gradient: DVector::zeros(2),
            hessian: DMatrix::zeros(2, 2),
        };
        let m = QuadraticModel::new(c.clone(), 1.0, DVector::zeros(2), DMatrix::zeros(2, 2));
        assert!((model_error_diagnostic(&m, &t, &c, 0.01) - 4e-4).abs() < 1e-15);
    }

    #[test]
    fn linear_error_matches_midpoint_sum() {
        // int x1^2 over [-d, d]^2 is 4 d^4 / 3; the 11-point midpoint sum
        // along x1 is 880/1331 d^3 instead of 2/3 d^3
        let c = dvector![0.0, 0.0];
        let t = Taylor {
            value: 0.0,
            gradient: DVector::zeros(2),
            hessian: DMatrix::zeros(2, 2),
        };
        let m = QuadraticModel::new(c.clone(), 0.0, dvector![1.0, 0.0], DMatrix::zeros(2, 2));
        let d: f64 = 0.01;
        let got = model_error_diagnostic(&m, &t, &c, d);
        let expect = 2.0 * d * 880.0 / 1331.0 * d.powi(3);
        assert!((expect - 4.0 * d.powi(4) / 3.0).abs() < 1e-2 * expect);
        assert!((got - expect).abs() < 1e-12 * expect, "{got}");
    }
}
