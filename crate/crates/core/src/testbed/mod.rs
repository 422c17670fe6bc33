//! Test problems with analytic derivatives, derivative masks, multiplicative
//! noise and the Monte Carlo yield demo.

mod functions;
mod noise;
mod yield_opt;

use nalgebra::DVector;

pub use functions::{rosenbrock, sphere, test_problems, AnalyticOracle, TestProblem};
pub use noise::{add_noise, NoiseWrapper};
pub use yield_opt::{
    range_grid, surrogate, yield_bounds, yield_objective, yield_optimum, Sampling, YieldMode,
    YieldProblem, YieldValue, YIELD_CENTER, YIELD_DESIGN, YIELD_SIGMA, YIELD_START,
    YIELD_THRESHOLD,
};

use crate::error::{Error, Result};
use crate::problem::{Bounds, DerivativeAvailability, ObjectiveSpec};

/// All pairs `(i, j)`, `i <= j`, of directions in `first`.
pub fn second_order_pairs(first: &[usize]) -> Vec<(usize, usize)> {
    let mut dirs = first.to_vec();
    dirs.sort_unstable();
    dirs.dedup();
    let mut out = Vec::new();
    for (a, &i) in dirs.iter().enumerate() {
        for &j in &dirs[a..] {
            out.push((i, j));
        }
    }
    out
}

/// Spec of `problem` exposing the first derivatives in `first` and the
/// second derivatives in `second` (0-based).
pub fn mask_availability(
    problem: &TestProblem,
    first: &[usize],
    second: &[(usize, usize)],
) -> Result<ObjectiveSpec> {
    let av = DerivativeAvailability::new(problem.dim(), first.iter().copied(), second.iter().copied())?;
    problem.spec(av)
}

/// A problem addressable by name: an analytic test function or a yield
/// variant.
#[derive(Debug, Clone)]
pub enum Problem {
    Analytic(TestProblem),
    Yield(YieldMode),
}

impl Problem {
    pub fn name(&self) -> &'static str {
        match self {
            Problem::Analytic(p) => p.name,
            Problem::Yield(m) => m.name(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Problem::Analytic(p) => p.dim(),
            Problem::Yield(_) => 4,
        }
    }

    pub fn x0(&self) -> DVector<f64> {
        match self {
            Problem::Analytic(p) => p.x0.clone(),
            Problem::Yield(_) => DVector::from_column_slice(&YIELD_START),
        }
    }

    pub fn x_ref(&self) -> DVector<f64> {
        match self {
            Problem::Analytic(p) => p.x_ref.clone(),
            Problem::Yield(_) => DVector::from_column_slice(&[
                YIELD_CENTER[0],
                YIELD_CENTER[1],
                YIELD_DESIGN[0],
                YIELD_DESIGN[1],
            ]),
        }
    }

    pub fn f_ref(&self) -> f64 {
        match self {
            Problem::Analytic(p) => p.f_ref,
            Problem::Yield(_) => -yield_optimum(),
        }
    }

    pub fn bounds(&self) -> Bounds {
        match self {
            Problem::Analytic(p) => p.bounds.clone(),
            Problem::Yield(_) => yield_bounds(),
        }
    }

    /// Directions whose partials can be offered. The yield problems only
    /// know the two mean partials.
    pub fn derivable(&self) -> Vec<usize> {
        match self {
            Problem::Analytic(p) => (0..p.dim()).collect(),
            Problem::Yield(_) => vec![0, 1],
        }
    }

    /// Noise-free objective value used for reporting: the analytic value, or
    /// minus the fixed-sample yield estimate with `N = 2500`.
    pub fn true_value(&self, x: &DVector<f64>, seed: u64) -> f64 {
        match self {
            Problem::Analytic(p) => p.value(x),
            Problem::Yield(_) => -YieldProblem::for_mode(YieldMode::NoNoise, seed).yield_estimate(x.as_slice()),
        }
    }

    /// Objective exposing `first` (and `second`) derivatives, with
    /// multiplicative noise of amplitude `noise` if positive. Yield problems
    /// carry their own sampling noise and require `first` within `{0, 1}`.
    pub fn objective(
        &self,
        first: &[usize],
        second: &[(usize, usize)],
        noise: f64,
        seed: u64,
    ) -> Result<ObjectiveSpec> {
        let spec = match self {
            Problem::Analytic(p) => mask_availability(p, first, second)?,
            Problem::Yield(mode) => {
                if first.iter().any(|&i| i > 1) || !second.is_empty() {
                    return Err(Error::UnavailableDerivative {
                        what: "yield design partials".into(),
                    });
                }
                let (oracle, _, bounds) = yield_objective(*mode, seed)?.into_parts();
                ObjectiveSpec::new(
                    oracle,
                    DerivativeAvailability::first_order(4, first.iter().copied())?,
                    bounds,
                )?
            }
        };
        if noise > 0.0 {
            add_noise(spec, noise, seed ^ 0x9e37_79b9_7f4a_7c15)
        } else {
            Ok(spec)
        }
    }
}

/// Looks up an analytic problem (`rosenbrock2`, `sphere10`, ...) or a yield
/// variant (`yield-nonoise`, `yield-lownoise`, `yield-highnoise`).
pub fn lookup(name: &str) -> Result<Problem> {
    if let Some(mode) = YieldMode::ALL.into_iter().find(|m| m.name() == name) {
        return Ok(Problem::Yield(mode));
    }
    test_problems()
        .into_iter()
        .find(|p| p.name == name)
        .map(Problem::Analytic)
        .ok_or_else(|| Error::UnknownProblem(name.to_string()))
}

/// Names of all registered problems.
pub fn problem_names() -> Vec<&'static str> {
    let mut names: Vec<_> = test_problems().iter().map(|p| p.name).collect();
    names.extend(YieldMode::ALL.iter().map(|m| m.name()));
    names
}

#[cfg(test)]
mod tests;
