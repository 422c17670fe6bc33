//! Dense least-squares solves through a truncated singular value decomposition.

use nalgebra::{DMatrix, DVector, SVD};

use crate::error::{Error, Result};

/// Singular values below this fraction of the largest one count as zero.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// A factored matrix of full column rank, reusable for many right-hand sides.
pub struct LeastSquares {
    svd: SVD<f64, nalgebra::Dyn, nalgebra::Dyn>,
    cutoff: f64,
}

impl LeastSquares {
    pub fn factor(m: &DMatrix<f64>) -> Result<Self> {
        let cols = m.ncols();
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::RankDeficient { rank: 0, cols });
        }
        let svd = SVD::new(m.clone(), true, true);
        let smax = svd.singular_values.max();
        let cutoff = RANK_TOLERANCE * smax;
        let rank = svd.singular_values.iter().filter(|&&s| s > cutoff).count();
        if rank < cols || smax == 0.0 {
            return Err(Error::RankDeficient { rank, cols });
        }
        Ok(Self { svd, cutoff })
    }

    /// Minimizer of `|M v - b|`.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.svd
            .solve(b, self.cutoff)
            .expect("SVD factors were requested")
    }

    pub fn solve_many(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.svd
            .solve(b, self.cutoff)
            .expect("SVD factors were requested")
    }

    pub fn condition_number(&self) -> f64 {
        self.svd.singular_values.max() / self.svd.singular_values.min()
    }
}

/// Numerical rank at the crate's relative tolerance.
pub fn rank(m: &DMatrix<f64>) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let s = m.clone().singular_values();
    let cutoff = RANK_TOLERANCE * s.max();
    s.iter().filter(|&&v| v > cutoff).count()
}
