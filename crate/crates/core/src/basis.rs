//! Monomial basis of degree two.
//!
//! Ordering is fixed: the constant, then `x_1..x_n`, then the quadratic
//! monomials in lexicographic pair order `(1,1), (1,2), .., (1,n), (2,2), ..`
//! with a factor one half on the squares. With this scaling the coefficient of
//! pair `(i, j)` is exactly the Hessian entry `H_ij`.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonomialBasis {
    n: usize,
    pairs: Vec<(usize, usize)>,
}

impl MonomialBasis {
    pub fn new(n: usize) -> Self {
        let pairs = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
        Self { n, pairs }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Size of the full basis including the constant, `(n+1)(n+2)/2`.
    pub fn q1(&self) -> usize {
        (self.n + 1) * (self.n + 2) / 2
    }

    /// Number of non-constant basis functions.
    pub fn len(&self) -> usize {
        self.q1() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Column (among the non-constant functions) of the quadratic term `(i, j)`.
    pub fn quad_column(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        // pairs preceding row i: sum_{k<i} (n - k)
        let before = i * self.n - i * i.saturating_sub(1) / 2;
        self.n + before + (j - i)
    }

    /// `[phi_1(z), .., phi_q(z)]`, excluding the constant.
    pub fn row(&self, z: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.len());
        self.fill_row(z, out.as_mut_slice());
        out
    }

    pub fn fill_row(&self, z: &DVector<f64>, out: &mut [f64]) {
        let n = self.n;
        out[..n].copy_from_slice(z.as_slice());
        for (k, &(i, j)) in self.pairs.iter().enumerate() {
            out[n + k] = if i == j { 0.5 * z[i] * z[i] } else { z[i] * z[j] };
        }
    }

    /// Full evaluation vector `Phi(z)` including the leading constant.
    pub fn full_row(&self, z: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.q1());
        out[0] = 1.0;
        self.fill_row(z, &mut out.as_mut_slice()[1..]);
        out
    }

    /// `[d phi_1/dx_l (z), .., d phi_q/dx_l (z)]`.
    pub fn derivative_row(&self, z: &DVector<f64>, l: usize) -> DVector<f64> {
        let mut out = DVector::zeros(self.len());
        self.fill_derivative_row(z, l, out.as_mut_slice());
        out
    }

    pub fn fill_derivative_row(&self, z: &DVector<f64>, l: usize, out: &mut [f64]) {
        let n = self.n;
        out.iter_mut().for_each(|v| *v = 0.0);
        out[l] = 1.0;
        for (k, &(i, j)) in self.pairs.iter().enumerate() {
            out[n + k] = match (i == l, j == l) {
                (true, true) => z[l],
                (true, false) => z[j],
                (false, true) => z[i],
                (false, false) => 0.0,
            };
        }
    }

    /// Second derivative row for the pair `(i, j)`: a unit vector on the
    /// quadratic column of that pair, independent of the evaluation point.
    pub fn second_derivative_row(&self, i: usize, j: usize) -> DVector<f64> {
        let mut out = DVector::zeros(self.len());
        out[self.quad_column(i, j)] = 1.0;
        out
    }

    /// Splits a coefficient vector `(g, H*)` into gradient and symmetric Hessian.
    pub fn unpack(&self, coeffs: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.n;
        let g = DVector::from_column_slice(&coeffs[..n]);
        let mut h = DMatrix::zeros(n, n);
        for (k, &(i, j)) in self.pairs.iter().enumerate() {
            h[(i, j)] = coeffs[n + k];
            h[(j, i)] = coeffs[n + k];
        }
        (g, h)
    }

    /// Inverse of [`unpack`](Self::unpack); reads the upper triangle of `h`.
    pub fn pack(&self, g: &DVector<f64>, h: &DMatrix<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.len());
        out.rows_mut(0, self.n).copy_from(g);
        for (k, &(i, j)) in self.pairs.iter().enumerate() {
            out[self.n + k] = h[(i, j)];
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;
    use proptest::prelude::*;

    #[test]
    fn sizes() {
        assert_eq!(MonomialBasis::new(2).q1(), 6);
        assert_eq!(MonomialBasis::new(10).q1(), 66);
        assert_eq!(MonomialBasis::new(1).len(), 2);
    }

    #[test]
    fn quad_columns_follow_pair_order() {
        for n in 1..7 {
            let b = MonomialBasis::new(n);
            for (k, &(i, j)) in b.pairs().iter().enumerate() {
                assert_eq!(b.quad_column(i, j), n + k);
                assert_eq!(b.quad_column(j, i), n + k);
            }
        }
    }

    #[test]
    fn row_examples() {
        let b = MonomialBasis::new(2);
        assert_eq!(b.row(&dvector![0.0, 0.0]), DVector::zeros(5));
        assert_eq!(b.row(&dvector![1.0, 2.0]), dvector![1.0, 2.0, 0.5, 2.0, 2.0]);
        assert_eq!(MonomialBasis::new(1).row(&dvector![3.0]), dvector![3.0, 4.5]);
    }

    #[test]
    fn derivative_row_examples() {
        let b = MonomialBasis::new(2);
        assert_eq!(
            b.derivative_row(&dvector![0.0, 0.0], 0),
            dvector![1.0, 0.0, 0.0, 0.0, 0.0]
        );
        assert_eq!(
            b.derivative_row(&dvector![1.0, 2.0], 0),
            dvector![1.0, 0.0, 1.0, 2.0, 0.0]
        );
    }

    #[test]
    fn second_derivative_rows() {
        let b = MonomialBasis::new(2);
        assert_eq!(b.second_derivative_row(0, 0), dvector![0.0, 0.0, 1.0, 0.0, 0.0]);
        assert_eq!(b.second_derivative_row(0, 1), dvector![0.0, 0.0, 0.0, 1.0, 0.0]);
        // rows over all pairs form the identity on the quadratic block
        for n in 1..6 {
            let b = MonomialBasis::new(n);
            for (k, &(i, j)) in b.pairs().iter().enumerate() {
                let r = b.second_derivative_row(i, j);
                for c in 0..b.len() {
                    assert_eq!(r[c], if c == n + k { 1.0 } else { 0.0 });
                }
            }
        }
    }

    #[test]
    fn pack_unpack_roundtrip() {
        let b = MonomialBasis::new(3);
        let c: Vec<f64> = (0..9).map(|v| v as f64).collect();
        let (g, h) = b.unpack(&c);
        assert_eq!(h, h.transpose());
        assert_eq!(b.pack(&g, &h).as_slice(), c.as_slice());
    }

    proptest! {
        #[test]
        fn derivative_row_matches_central_differences(
            n in 1usize..6,
            seed in proptest::collection::vec(-3.0f64..3.0, 6),
            l_raw in 0usize..6,
        ) {
            let b = MonomialBasis::new(n);
            let z = DVector::from_column_slice(&seed[..n]);
            let l = l_raw % n;
            let h = 1e-5;
            let mut zp = z.clone();
            zp[l] += h;
            let mut zm = z.clone();
            zm[l] -= h;
            let fd = (b.row(&zp) - b.row(&zm)) / (2.0 * h);
            let an = b.derivative_row(&z, l);
            prop_assert!((fd - an).amax() < 1e-8);
        }

        #[test]
        fn model_value_is_row_dot_coefficients(
            seed in proptest::collection::vec(-2.0f64..2.0, 3 + 9),
        ) {
            // g.z + 0.5 z'Hz == row(z) . pack(g, H)
            let b = MonomialBasis::new(3);
            let z = DVector::from_column_slice(&seed[..3]);
            let (g, h) = b.unpack(&seed[3..]);
            let direct = g.dot(&z) + 0.5 * (z.transpose() * &h * &z)[0];
            let via_row = b.row(&z).dot(&b.pack(&g, &h));
            prop_assert!((direct - via_row).abs() < 1e-12);
        }
    }
}
