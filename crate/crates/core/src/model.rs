use nalgebra::{DMatrix, DVector};

/// Local quadratic surrogate `m(x) = c + g'(x - x_k) + 1/2 (x - x_k)' H (x - x_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticModel {
    center: DVector<f64>,
    c: f64,
    g: DVector<f64>,
    h: DMatrix<f64>,
}

impl QuadraticModel {
    /// Builds a model; `h` is symmetrized.
    pub fn new(center: DVector<f64>, c: f64, g: DVector<f64>, h: DMatrix<f64>) -> Self {
        assert_eq!(center.len(), g.len());
        assert_eq!((h.nrows(), h.ncols()), (g.len(), g.len()));
        let h = (&h + h.transpose()) * 0.5;
        Self { center, c, g, h }
    }

    pub fn dim(&self) -> usize {
        self.g.len()
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    pub fn constant(&self) -> f64 {
        self.c
    }

    pub fn gradient_at_center(&self) -> &DVector<f64> {
        &self.g
    }

    pub fn hessian(&self) -> &DMatrix<f64> {
        &self.h
    }

    /// Value at the displacement `s = x - center`.
    pub fn value_at_step(&self, s: &DVector<f64>) -> f64 {
        self.c + self.g.dot(s) + 0.5 * s.dot(&(&self.h * s))
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        self.value_at_step(&(x - &self.center))
    }

    /// `g + H (x - center)`.
    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.g + &self.h * (x - &self.center)
    }
}
