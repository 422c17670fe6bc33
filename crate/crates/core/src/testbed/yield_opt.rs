//! Monte Carlo yield of a two-parameter design under Gaussian manufacturing
//! tolerances, with a smooth surrogate in place of a field simulation.
//!
//! The design is `x = (p1_mean, p2_mean, d1, d2)`: the means of two
//! uncertain parameters and two deterministic ones. A sample is safe when
//! `S(r, p, d) <= -24` for all 11 points `r` of the range grid, with
//!
//! `S = -30 + 4 |p - c|^2 + 3 |d - d*|^2 + 0.4 sin r`,
//!
//! `c = (9.74, 5.37)`, `d* = (1.6, 1.4)`. These constants are ours, picked so
//! that the start `(9, 5, 1, 1)` has a yield of about 0.43 and the optimum is
//! interior with a yield of about 0.76.

use std::f64::consts::PI;

use nalgebra::DVector;
use rand::SeedableRng;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::problem::{Bounds, DerivativeAvailability, ObjectiveSpec, Oracle};

pub const YIELD_CENTER: [f64; 2] = [9.74, 5.37];
pub const YIELD_DESIGN: [f64; 2] = [1.6, 1.4];
pub const YIELD_SIGMA: f64 = 0.7;
pub const YIELD_THRESHOLD: f64 = -24.0;
pub const YIELD_START: [f64; 4] = [9.0, 5.0, 1.0, 1.0];

/// How samples are drawn across evaluations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sampling {
    /// One standard-normal sample set, shifted to the current means.
    FixedShifted,
    /// A fresh sample set for every evaluation.
    Resampled,
}

/// Noise level of the yield objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum YieldMode {
    /// Fixed shifted samples, `N = 2500`.
    NoNoise,
    /// Fresh samples, `N = 2500`.
    LowNoise,
    /// Fresh samples, `N = 100`.
    HighNoise,
}

impl YieldMode {
    pub const ALL: [YieldMode; 3] = [YieldMode::NoNoise, YieldMode::LowNoise, YieldMode::HighNoise];

    pub fn name(self) -> &'static str {
        match self {
            YieldMode::NoNoise => "yield-nonoise",
            YieldMode::LowNoise => "yield-lownoise",
            YieldMode::HighNoise => "yield-highnoise",
        }
    }

    pub fn sampling(self) -> Sampling {
        match self {
            YieldMode::NoNoise => Sampling::FixedShifted,
            _ => Sampling::Resampled,
        }
    }

    pub fn samples(self) -> usize {
        match self {
            YieldMode::HighNoise => 100,
            _ => 2500,
        }
    }
}

/// Range grid: 11 equidistant points.
pub fn range_grid() -> [f64; 11] {
    std::array::from_fn(|k| 2.0 * PI * (6.5 + 0.1 * k as f64))
}

/// Surrogate performance `S(r, p, d)`.
pub fn surrogate(r: f64, p: [f64; 2], d: [f64; 2]) -> f64 {
    let dp = (p[0] - YIELD_CENTER[0]).powi(2) + (p[1] - YIELD_CENTER[1]).powi(2);
    let dd = (d[0] - YIELD_DESIGN[0]).powi(2) + (d[1] - YIELD_DESIGN[1]).powi(2);
    -30.0 + 4.0 * dp + 3.0 * dd + 0.4 * r.sin()
}

/// Yield estimate and its gradient with respect to the two means.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YieldValue {
    pub yield_: f64,
    pub gradient: [f64; 2],
}

pub struct YieldProblem {
    pub sigma: [f64; 2],
    pub threshold: f64,
    pub samples: usize,
    pub sampling: Sampling,
    base: Vec<[f64; 2]>,
    rng: ChaCha8Rng,
    grid: [f64; 11],
    safe: Box<dyn Fn(f64, [f64; 2], [f64; 2]) -> f64 + Send>,
}

impl std::fmt::Debug for YieldProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("YieldProblem")
            .field("samples", &self.samples)
            .field("sampling", &self.sampling)
            .finish_non_exhaustive()
    }
}

fn draw(rng: &mut ChaCha8Rng, n: usize) -> Vec<[f64; 2]> {
    (0..n)
        .map(|_| [rng.sample(StandardNormal), rng.sample(StandardNormal)])
        .collect()
}

impl YieldProblem {
    pub fn new(samples: usize, sampling: Sampling, seed: u64) -> Self {
        Self::with_surrogate(samples, sampling, seed, YIELD_THRESHOLD, surrogate)
    }

    pub fn for_mode(mode: YieldMode, seed: u64) -> Self {
        Self::new(mode.samples(), mode.sampling(), seed)
    }

    /// Custom performance function and threshold.
    pub fn with_surrogate(
        samples: usize,
        sampling: Sampling,
        seed: u64,
        threshold: f64,
        performance: impl Fn(f64, [f64; 2], [f64; 2]) -> f64 + Send + 'static,
    ) -> Self {
        assert!(samples >= 1, "need at least one sample");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = draw(&mut rng, samples);
        Self {
            sigma: [YIELD_SIGMA; 2],
            threshold,
            samples,
            sampling,
            base,
            rng,
            grid: range_grid(),
            safe: Box::new(performance),
        }
    }

    fn is_safe(&self, p: [f64; 2], d: [f64; 2]) -> bool {
        self.grid.iter().all(|&r| (self.safe)(r, p, d) <= self.threshold)
    }

    fn estimate_with(&self, x: &[f64], z: &[[f64; 2]]) -> YieldValue {
        let d = [x[2], x[3]];
        let mut count = 0usize;
        let mut sum = [0.0; 2];
        for s in z {
            let p = [x[0] + self.sigma[0] * s[0], x[1] + self.sigma[1] * s[1]];
            if self.is_safe(p, d) {
                count += 1;
                sum[0] += p[0];
                sum[1] += p[1];
            }
        }
        let y = count as f64 / z.len() as f64;
        let gradient = if count == 0 {
            [0.0, 0.0]
        } else {
            std::array::from_fn(|j| {
                let mean_safe = sum[j] / count as f64;
                y * (mean_safe - x[j]) / (self.sigma[j] * self.sigma[j])
            })
        };
        YieldValue { yield_: y, gradient }
    }

    /// Yield and mean-gradient at `x = (p1_mean, p2_mean, d1, d2)`. Fixed
    /// sampling reuses the base sample; resampling draws a new one.
    pub fn evaluate(&mut self, x: &[f64]) -> YieldValue {
        match self.sampling {
            Sampling::FixedShifted => self.estimate_with(x, &self.base),
            Sampling::Resampled => {
                let z = draw(&mut self.rng, self.samples);
                self.estimate_with(x, &z)
            }
        }
    }

    /// Fraction of safe samples.
    pub fn yield_estimate(&mut self, x: &[f64]) -> f64 {
        self.evaluate(x).yield_
    }

    /// `dY/dp_j = Y (mean of safe p_j - p_j) / sigma_j^2`; `(0, 0)` when no
    /// sample is safe.
    pub fn yield_gradient_means(&mut self, x: &[f64]) -> [f64; 2] {
        self.evaluate(x).gradient
    }
}

/// Box of the yield design space.
pub fn yield_bounds() -> Bounds {
    Bounds::new(
        DVector::from_column_slice(&[6.0, 2.0, 0.25, 0.25]),
        DVector::from_column_slice(&[13.0, 9.0, 3.0, 3.0]),
    )
    .expect("valid box")
}

/// Maximum yield of the surrogate, `1 - exp(-(6 - 0.4 max sin r) / (8 sigma^2))`,
/// reached at `(c, d*)` in the limit of infinitely many samples.
pub fn yield_optimum() -> f64 {
    let smax = range_grid().iter().map(|r| r.sin()).fold(f64::MIN, f64::max);
    let radius2 = (6.0 - 0.4 * smax) / 4.0;
    1.0 - (-radius2 / (2.0 * YIELD_SIGMA * YIELD_SIGMA)).exp()
}

/// Oracle for `-Y`, with the mean partials available. The value and the
/// partials of one evaluation come from the same sample set.
struct YieldOracle {
    problem: YieldProblem,
    last: Option<(DVector<f64>, YieldValue)>,
}

impl YieldOracle {
    fn at(&mut self, x: &DVector<f64>) -> YieldValue {
        if let Some((y, v)) = &self.last {
            if y == x {
                return *v;
            }
        }
        let v = self.problem.evaluate(x.as_slice());
        self.last = Some((x.clone(), v));
        v
    }
}

impl Oracle for YieldOracle {
    fn dim(&self) -> usize {
        4
    }

    fn value(&mut self, x: &DVector<f64>) -> f64 {
        // a value query always starts a new evaluation
        self.last = None;
        -self.at(x).yield_
    }

    fn partial(&mut self, x: &DVector<f64>, i: usize) -> Option<f64> {
        (i < 2).then(|| -self.at(x).gradient[i])
    }
}

/// `-Y` over `(p1_mean, p2_mean, d1, d2)`, with the two mean partials
/// available and the design partials unknown.
pub fn yield_objective(mode: YieldMode, seed: u64) -> Result<ObjectiveSpec> {
    ObjectiveSpec::new(
        Box::new(YieldOracle {
            problem: YieldProblem::for_mode(mode, seed),
            last: None,
        }),
        DerivativeAvailability::first_order(4, [0, 1])?,
        yield_bounds(),
    )
}
