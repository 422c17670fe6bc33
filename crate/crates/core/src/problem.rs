//! Objectives with partially available derivatives, bound constraints and the
//! training-data bookkeeping shared by every model builder.
//!
//! All indices are zero-based: direction `i` refers to `x[i]`.

use std::collections::BTreeMap;

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Componentwise box constraints `lower <= x <= upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    lower: DVector<f64>,
    upper: DVector<f64>,
}

impl Bounds {
    pub fn new(lower: DVector<f64>, upper: DVector<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                actual: upper.len(),
            });
        }
        if lower.iter().zip(upper.iter()).any(|(l, u)| !(l <= u)) {
            return Err(Error::InvalidConfig("lower bound exceeds upper bound".into()));
        }
        Ok(Self { lower, upper })
    }

    /// Same interval `[lo, hi]` in every coordinate.
    pub fn uniform(n: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(DVector::from_element(n, lo), DVector::from_element(n, hi))
    }

    pub fn unbounded(n: usize) -> Self {
        Self {
            lower: DVector::from_element(n, f64::NEG_INFINITY),
            upper: DVector::from_element(n, f64::INFINITY),
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &DVector<f64> {
        &self.lower
    }

    pub fn upper(&self) -> &DVector<f64> {
        &self.upper
    }

    pub fn contains(&self, x: &DVector<f64>) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(self.upper.iter()))
                .all(|(v, (l, u))| *l <= *v && *v <= *u)
    }

    /// Euclidean projection onto the box.
    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            x.len(),
            x.iter()
                .zip(self.lower.iter().zip(self.upper.iter()))
                .map(|(v, (l, u))| v.clamp(*l, *u)),
        )
    }

    /// Smallest edge length of the box.
    pub fn min_width(&self) -> f64 {
        self.upper
            .iter()
            .zip(self.lower.iter())
            .map(|(u, l)| u - l)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Which partial derivatives of the objective can be queried.
///
/// First-order directions are kept sorted and unique; second-order pairs are
/// stored with `i <= j` since mixed partials are symmetric.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DerivativeAvailability {
    first_order: Vec<usize>,
    second_order: Vec<(usize, usize)>,
}

impl DerivativeAvailability {
    pub fn new(
        n: usize,
        first_order: impl IntoIterator<Item = usize>,
        second_order: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut first: Vec<usize> = first_order.into_iter().collect();
        first.sort_unstable();
        first.dedup();
        if let Some(&bad) = first.iter().find(|&&i| i >= n) {
            return Err(Error::IndexOutOfRange { index: bad, len: n });
        }
        let mut second: Vec<(usize, usize)> = second_order
            .into_iter()
            .map(|(i, j)| if i <= j { (i, j) } else { (j, i) })
            .collect();
        second.sort_unstable();
        second.dedup();
        if let Some(&(_, j)) = second.iter().find(|&&(_, j)| j >= n) {
            return Err(Error::IndexOutOfRange { index: j, len: n });
        }
        Ok(Self {
            first_order: first,
            second_order: second,
        })
    }

    /// No derivatives at all (pure derivative-free setting).
    pub fn none() -> Self {
        Self::default()
    }

    pub fn first_order(n: usize, dirs: impl IntoIterator<Item = usize>) -> Result<Self> {
        Self::new(n, dirs, std::iter::empty())
    }

    pub fn first(&self) -> &[usize] {
        &self.first_order
    }

    pub fn second(&self) -> &[(usize, usize)] {
        &self.second_order
    }

    /// Number of known first-order directions.
    pub fn k_d(&self) -> usize {
        self.first_order.len()
    }

    pub fn has_first(&self, i: usize) -> bool {
        self.first_order.binary_search(&i).is_ok()
    }

    pub fn has_second(&self, i: usize, j: usize) -> bool {
        let key = if i <= j { (i, j) } else { (j, i) };
        self.second_order.binary_search(&key).is_ok()
    }

    /// Directions whose first derivative is unknown, ascending.
    pub fn unknown_directions(&self, n: usize) -> Vec<usize> {
        (0..n).filter(|i| !self.has_first(*i)).collect()
    }

    /// Drops the second-order information.
    pub fn first_order_only(&self) -> Self {
        Self {
            first_order: self.first_order.clone(),
            second_order: Vec::new(),
        }
    }
}

/// Black-box evaluation routines behind an [`ObjectiveSpec`].
///
/// Derivative queries return `None` when the oracle cannot provide them; the
/// spec decides which ones callers are allowed to ask for.
pub trait Oracle: Send {
    fn dim(&self) -> usize;

    fn value(&mut self, x: &DVector<f64>) -> f64;

    fn partial(&mut self, _x: &DVector<f64>, _i: usize) -> Option<f64> {
        None
    }

    fn second_partial(&mut self, _x: &DVector<f64>, _i: usize, _j: usize) -> Option<f64> {
        None
    }
}

/// Value-only oracle wrapping a closure.
pub struct FnOracle<F> {
    n: usize,
    f: F,
}

impl<F> FnOracle<F>
where
    F: FnMut(&DVector<f64>) -> f64 + Send,
{
    pub fn new(n: usize, f: F) -> Self {
        Self { n, f }
    }
}

impl<F> Oracle for FnOracle<F>
where
    F: FnMut(&DVector<f64>) -> f64 + Send,
{
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&mut self, x: &DVector<f64>) -> f64 {
        (self.f)(x)
    }
}

/// An objective together with its derivative availability and bounds.
pub struct ObjectiveSpec {
    oracle: Box<dyn Oracle>,
    availability: DerivativeAvailability,
    bounds: Bounds,
}

impl std::fmt::Debug for ObjectiveSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ObjectiveSpec")
            .field("dim", &self.dim())
            .field("availability", &self.availability)
            .field("bounds", &self.bounds)
            .finish_non_exhaustive()
    }
}

impl ObjectiveSpec {
    pub fn new(
        oracle: Box<dyn Oracle>,
        availability: DerivativeAvailability,
        bounds: Bounds,
    ) -> Result<Self> {
        let n = oracle.dim();
        if bounds.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: bounds.dim(),
            });
        }
        if availability.first().iter().any(|&i| i >= n)
            || availability.second().iter().any(|&(_, j)| j >= n)
        {
            return Err(Error::InvalidConfig(
                "derivative availability exceeds dimension".into(),
            ));
        }
        Ok(Self {
            oracle,
            availability,
            bounds,
        })
    }

    /// Derivative-free objective from a plain closure.
    pub fn from_fn<F>(n: usize, bounds: Bounds, f: F) -> Result<Self>
    where
        F: FnMut(&DVector<f64>) -> f64 + Send + 'static,
    {
        Self::new(
            Box::new(FnOracle::new(n, f)),
            DerivativeAvailability::none(),
            bounds,
        )
    }

    /// Oracle, availability and bounds, for wrapping the oracle.
    pub fn into_parts(self) -> (Box<dyn Oracle>, DerivativeAvailability, Bounds) {
        (self.oracle, self.availability, self.bounds)
    }

    pub fn dim(&self) -> usize {
        self.oracle.dim()
    }

    pub fn availability(&self) -> &DerivativeAvailability {
        &self.availability
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    /// Raw, unbilled value query.
    pub fn value(&mut self, x: &DVector<f64>) -> f64 {
        self.oracle.value(x)
    }

    pub fn partial(&mut self, x: &DVector<f64>, i: usize) -> Result<f64> {
        if !self.availability.has_first(i) {
            return Err(Error::UnavailableDerivative {
                what: format!("d/dx{i}"),
            });
        }
        self.oracle
            .partial(x, i)
            .ok_or_else(|| Error::MissingDerivative {
                what: format!("d/dx{i}"),
            })
    }

    pub fn second_partial(&mut self, x: &DVector<f64>, i: usize, j: usize) -> Result<f64> {
        if !self.availability.has_second(i, j) {
            return Err(Error::UnavailableDerivative {
                what: format!("d2/dx{i}dx{j}"),
            });
        }
        self.oracle
            .second_partial(x, i.min(j), i.max(j))
            .ok_or_else(|| Error::MissingDerivative {
                what: format!("d2/dx{i}dx{j}"),
            })
    }

    /// Evaluates the objective and every available derivative at `x`.
    ///
    /// Exactly one unit of budget is charged; derivative queries are free.
    pub fn evaluate(
        &mut self,
        x: &DVector<f64>,
        budget: &mut EvaluationBudget,
    ) -> Result<EvaluationRecord> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        if !self.bounds.contains(x) {
            return Err(Error::OutOfBounds);
        }
        budget.charge()?;
        let value = self.oracle.value(x);
        let mut gradient = BTreeMap::new();
        for &i in self.availability.first_order.clone().iter() {
            gradient.insert(i, self.partial(x, i)?);
        }
        let mut hessian = BTreeMap::new();
        for &(i, j) in self.availability.second_order.clone().iter() {
            hessian.insert((i, j), self.second_partial(x, i, j)?);
        }
        Ok(EvaluationRecord {
            point: x.clone(),
            value,
            gradient,
            hessian,
        })
    }
}

/// One evaluated training point with its available derivative values.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationRecord {
    pub point: DVector<f64>,
    pub value: f64,
    /// First partials keyed by direction.
    pub gradient: BTreeMap<usize, f64>,
    /// Second partials keyed by `(i, j)` with `i <= j`.
    pub hessian: BTreeMap<(usize, usize), f64>,
}

impl EvaluationRecord {
    /// Record without derivative information.
    pub fn value_only(point: DVector<f64>, value: f64) -> Self {
        Self {
            point,
            value,
            gradient: BTreeMap::new(),
            hessian: BTreeMap::new(),
        }
    }

    pub fn partial(&self, i: usize) -> Option<f64> {
        self.gradient.get(&i).copied()
    }

    pub fn second_partial(&self, i: usize, j: usize) -> Option<f64> {
        let key = if i <= j { (i, j) } else { (j, i) };
        self.hessian.get(&key).copied()
    }
}

/// Two points are the same if their max-norm distance is below
/// `1e-14 * max(1, |x|_inf)`.
pub fn same_point(a: &DVector<f64>, b: &DVector<f64>) -> bool {
    let scale = a.amax().max(b.amax()).max(1.0);
    (a - b).amax() < 1e-14 * scale
}

/// The current sample set. Its size stays fixed over a run.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    records: Vec<EvaluationRecord>,
    // insertion stamps, used to break value ties in favour of older points
    stamps: Vec<u64>,
    next_stamp: u64,
    incumbent: usize,
}

impl TrainingSet {
    pub fn new(records: Vec<EvaluationRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::EmptySet);
        }
        for (i, a) in records.iter().enumerate() {
            if records[..i].iter().any(|b| same_point(&a.point, &b.point)) {
                return Err(Error::DuplicatePoint);
            }
        }
        let n = records.len();
        let mut ts = Self {
            records,
            stamps: (0..n as u64).collect(),
            next_stamp: n as u64,
            incumbent: 0,
        };
        ts.incumbent = ts.argmin();
        Ok(ts)
    }

    fn argmin(&self) -> usize {
        let mut best = 0;
        for i in 1..self.records.len() {
            let (a, b) = (self.records[i].value, self.records[best].value);
            if a < b || (a == b && self.stamps[i] < self.stamps[best]) {
                best = i;
            }
        }
        best
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.records[0].point.len()
    }

    pub fn records(&self) -> &[EvaluationRecord] {
        &self.records
    }

    pub fn get(&self, i: usize) -> Option<&EvaluationRecord> {
        self.records.get(i)
    }

    pub fn incumbent_index(&self) -> usize {
        self.incumbent
    }

    pub fn incumbent(&self) -> &EvaluationRecord {
        &self.records[self.incumbent]
    }

    /// Whether `x` coincides with a stored point, ignoring slot `except`.
    pub fn contains_point(&self, x: &DVector<f64>, except: Option<usize>) -> bool {
        self.records
            .iter()
            .enumerate()
            .any(|(i, r)| Some(i) != except && same_point(&r.point, x))
    }

    /// Swaps out the record at `outgoing` for `incoming`.
    pub fn replace_point(&mut self, outgoing: usize, incoming: EvaluationRecord) -> Result<()> {
        if outgoing >= self.records.len() {
            return Err(Error::IndexOutOfRange {
                index: outgoing,
                len: self.records.len(),
            });
        }
        if self.contains_point(&incoming.point, Some(outgoing)) {
            return Err(Error::DuplicatePoint);
        }
        self.records[outgoing] = incoming;
        self.stamps[outgoing] = self.next_stamp;
        self.next_stamp += 1;
        self.incumbent = self.argmin();
        Ok(())
    }

    /// Index of the stored point farthest from the incumbent.
    pub fn farthest_from_incumbent(&self) -> usize {
        let x = &self.incumbent().point;
        let mut best = self.incumbent;
        let mut dist = -1.0;
        for (i, r) in self.records.iter().enumerate() {
            if i == self.incumbent {
                continue;
            }
            let d = (&r.point - x).norm();
            if d > dist {
                dist = d;
                best = i;
            }
        }
        best
    }
}

/// Counts billed objective evaluations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvaluationBudget {
    max_evaluations: usize,
    evaluations_used: usize,
}

impl EvaluationBudget {
    pub fn new(max_evaluations: usize) -> Self {
        Self {
            max_evaluations,
            evaluations_used: 0,
        }
    }

    pub fn used(&self) -> usize {
        self.evaluations_used
    }

    pub fn max(&self) -> usize {
        self.max_evaluations
    }

    pub fn remaining(&self) -> usize {
        self.max_evaluations - self.evaluations_used
    }

    pub fn is_exhausted(&self) -> bool {
        self.evaluations_used >= self.max_evaluations
    }

    fn charge(&mut self) -> Result<()> {
        if self.is_exhausted() {
            return Err(Error::BudgetExhausted {
                max: self.max_evaluations,
            });
        }
        self.evaluations_used += 1;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    fn rosenbrock_spec() -> ObjectiveSpec {
        struct Rosen;
        impl Oracle for Rosen {
            fn dim(&self) -> usize {
                2
            }
            fn value(&mut self, x: &DVector<f64>) -> f64 {
                100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2)
            }
            fn partial(&mut self, x: &DVector<f64>, i: usize) -> Option<f64> {
                Some(match i {
                    0 => -400.0 * x[0] * (x[1] - x[0] * x[0]) - 2.0 * (1.0 - x[0]),
                    _ => 200.0 * (x[1] - x[0] * x[0]),
                })
            }
        }
        ObjectiveSpec::new(
            Box::new(Rosen),
            DerivativeAvailability::first_order(2, [1]).unwrap(),
            Bounds::uniform(2, -5.0, 5.0).unwrap(),
        )
        .unwrap()
    }

    fn rec(x: f64, v: f64) -> EvaluationRecord {
        EvaluationRecord::value_only(dvector![x], v)
    }

    #[test]
    fn evaluate_rosenbrock_start_and_optimum() {
        let mut spec = rosenbrock_spec();
        let mut budget = EvaluationBudget::new(10);
        let r = spec.evaluate(&dvector![1.2, 2.0], &mut budget).unwrap();
        assert!((r.value - 31.4).abs() < 1e-12);
        let r = spec.evaluate(&dvector![1.0, 1.0], &mut budget).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.partial(1), Some(0.0));
        assert_eq!(r.partial(0), None);
        assert_eq!(budget.used(), 2);
    }

    #[test]
    fn evaluate_is_deterministic() {
        let mut spec = rosenbrock_spec();
        let mut budget = EvaluationBudget::new(10);
        let x = dvector![0.3, -0.7];
        let a = spec.evaluate(&x, &mut budget).unwrap();
        let b = spec.evaluate(&x, &mut budget).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn evaluate_errors() {
        let mut spec = rosenbrock_spec();
        let mut budget = EvaluationBudget::new(1);
        assert_eq!(
            spec.evaluate(&dvector![6.0, 0.0], &mut budget),
            Err(Error::OutOfBounds)
        );
        assert_eq!(budget.used(), 0);
        spec.evaluate(&dvector![0.0, 0.0], &mut budget).unwrap();
        assert_eq!(
            spec.evaluate(&dvector![0.0, 0.0], &mut budget),
            Err(Error::BudgetExhausted { max: 1 })
        );
    }

    #[test]
    fn unavailable_derivative_query() {
        let mut spec = rosenbrock_spec();
        assert!(matches!(
            spec.partial(&dvector![0.0, 0.0], 0),
            Err(Error::UnavailableDerivative { .. })
        ));
        assert!(spec.partial(&dvector![0.0, 0.0], 1).is_ok());
    }

    #[test]
    fn availability_normalizes_pairs() {
        let a = DerivativeAvailability::new(3, [2, 0, 2], [(2, 1), (0, 0)]).unwrap();
        assert_eq!(a.first(), &[0, 2]);
        assert_eq!(a.second(), &[(0, 0), (1, 2)]);
        assert!(a.has_second(2, 1));
        assert_eq!(a.unknown_directions(3), vec![1]);
        assert!(DerivativeAvailability::first_order(2, [2]).is_err());
    }

    #[test]
    fn incumbent_is_argmin() {
        let ts = TrainingSet::new(vec![rec(0.0, 3.0), rec(1.0, 1.0), rec(2.0, 2.0)]).unwrap();
        assert_eq!(ts.incumbent_index(), 1);
    }

    #[test]
    fn incumbent_tie_prefers_earliest() {
        let ts = TrainingSet::new(vec![rec(0.0, 1.0), rec(1.0, 1.0)]).unwrap();
        assert_eq!(ts.incumbent_index(), 0);
    }

    #[test]
    fn replace_point_updates_incumbent() {
        let mut ts = TrainingSet::new(vec![rec(0.0, 3.0), rec(1.0, 1.0), rec(2.0, 2.0)]).unwrap();
        ts.replace_point(2, rec(5.0, 4.0)).unwrap();
        assert_eq!(ts.incumbent_index(), 1);
        ts.replace_point(0, rec(3.0, 0.5)).unwrap();
        assert_eq!(ts.incumbent_index(), 0);
        assert_eq!(ts.len(), 3);
        // a tie with the incumbent does not move it: the incumbent is older
        ts.replace_point(2, rec(7.0, 0.5)).unwrap();
        assert_eq!(ts.incumbent_index(), 0);
    }

    #[test]
    fn replace_point_errors() {
        let mut ts = TrainingSet::new(vec![rec(0.0, 3.0), rec(1.0, 1.0)]).unwrap();
        assert_eq!(ts.replace_point(0, rec(1.0, 0.0)), Err(Error::DuplicatePoint));
        assert!(matches!(
            ts.replace_point(5, rec(9.0, 0.0)),
            Err(Error::IndexOutOfRange { .. })
        ));
        // replacing a point by itself is allowed
        ts.replace_point(1, rec(1.0, 0.5)).unwrap();
        assert!(TrainingSet::new(vec![]).is_err());
        assert_eq!(
            TrainingSet::new(vec![rec(0.0, 1.0), rec(1e-16, 2.0)]).unwrap_err(),
            Error::DuplicatePoint
        );
    }
}
