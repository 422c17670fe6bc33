use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::config::{SolverConfig, SolverKind};
use super::diagnostic::{model_error_diagnostic, Taylor};
use super::init::{candidate_points, select_monomial_points};
use super::subproblem::solve_subproblem;
use super::trace::{RunResult, RunTrace, TerminationReason, TraceRow};
use crate::basis::MonomialBasis;
use crate::error::{Error, Result};
use crate::factory::{
    apply_scaling, apply_weighting, assemble_full_interp, assemble_hermite_bobyqa,
    assemble_hermite_ls, assemble_min_frob, solve_system, AssembledSystem,
};
use crate::linalg::rank;
use crate::model::QuadraticModel;
use crate::poisedness::{estimate_lambda, lagrange_family, maximize_abs, propose_geometry_point, LagrangeFamily, Region};
use crate::problem::{
    same_point, Bounds, DerivativeAvailability, EvaluationBudget, EvaluationRecord, ObjectiveSpec,
    TrainingSet,
};

/// Taylor data of the objective at a point, for the model-error diagnostic.
pub type TaylorFn = Box<dyn Fn(&DVector<f64>) -> Taylor + Send + Sync>;

/// Half-width of the cube the model-error diagnostic integrates over.
pub const DIAGNOSTIC_RADIUS: f64 = 0.01;

/// Random candidates tried when the null-space point does not restore rank.
const REPAIR_RANDOM_TRIES: usize = 8;

/// What one call of [`IterationState::step`] did.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepOutcome {
    /// Trial point evaluated with `r >= eta1`.
    Accepted { ratio: f64 },
    /// Trial point evaluated (or known already) with `r < eta1`.
    Rejected { ratio: f64 },
    /// The model predicted no decrease; the radius shrank without an
    /// evaluation.
    Degenerate,
    /// A point was replaced to repair the geometry of the training set.
    Geometry,
    Finished(TerminationReason),
}

/// The system actually assembled in every iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Route {
    FullInterp,
    MinFrob,
    HermiteLs,
    HermiteBobyqa,
}

impl Route {
    fn frobenius(self) -> bool {
        matches!(self, Route::MinFrob | Route::HermiteBobyqa)
    }
}

/// `r = (f_old - f_new) / (m_old - m_new)`.
pub fn ratio_test(f_old: f64, f_new: f64, m_old: f64, m_new: f64) -> Result<f64> {
    let pred = m_old - m_new;
    if !(pred > 1e-15 * f_old.abs().max(1.0)) {
        return Err(Error::DegenerateModelDecrease(pred));
    }
    Ok((f_old - f_new) / pred)
}

/// Mutable state of one trust-region run.
pub struct IterationState {
    config: SolverConfig,
    route: Route,
    availability: DerivativeAvailability,
    bounds: Bounds,
    ts: TrainingSet,
    budget: EvaluationBudget,
    delta: f64,
    delta_max: f64,
    h_prev: DMatrix<f64>,
    iteration: usize,
    pending_geometry: bool,
    trace: RunTrace,
    finished: Option<TerminationReason>,
    rng: ChaCha8Rng,
    diagnostic: Option<TaylorFn>,
}

/// Builds and evaluates the initial training set.
///
/// Errors on invalid configurations, a start outside the box, or a budget
/// smaller than the training set.
pub fn initialize(
    spec: &mut ObjectiveSpec,
    x0: &DVector<f64>,
    config: &SolverConfig,
) -> Result<IterationState> {
    config.validate()?;
    let n = spec.dim();
    if x0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: x0.len(),
        });
    }
    let bounds = spec.bounds().clone();
    if !bounds.contains(x0) {
        return Err(Error::OutOfBounds);
    }
    if config.second_order && config.kind != SolverKind::HermiteLs {
        return Err(Error::InvalidConfig(
            "second-order rows are only used by Hermite least squares".into(),
        ));
    }
    let availability = match config.kind {
        SolverKind::HermiteLs if config.second_order => spec.availability().clone(),
        SolverKind::HermiteLs | SolverKind::HermiteBobyqa => spec.availability().first_order_only(),
        _ => DerivativeAvailability::none(),
    };
    let q1 = MonomialBasis::new(n).q1();
    let p1 = config
        .p1
        .unwrap_or_else(|| config.kind.default_p1(n, &availability, config.second_order));
    let route = route_for(config.kind, n, p1, &availability, config.second_order)?;
    if config.max_evaluations < p1 {
        return Err(Error::BudgetExhausted {
            max: config.max_evaluations,
        });
    }

    let mut delta = config
        .delta0
        .unwrap_or_else(|| 0.1 * x0.amax().max(1.0));
    if config.delta0.is_none() {
        delta = delta.min(0.25 * bounds.min_width());
    }
    if !(delta > config.rho_end) {
        return Err(Error::InvalidConfig("initial radius must exceed rho_end".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let points = if route.frobenius() {
        let mut pts = candidate_points(x0, delta, &bounds, &availability);
        pts.truncate(p1);
        while pts.len() < p1 {
            let y = random_point(&mut rng, x0, delta, &bounds);
            if !pts.iter().any(|p| same_point(p, &y)) {
                pts.push(y);
            }
        }
        pts
    } else {
        let second = route == Route::HermiteLs && config.second_order;
        select_monomial_points(x0, delta, &bounds, &availability, second, p1, &mut rng)
    };
    debug_assert_eq!(points.len(), p1);
    debug_assert!(q1 >= 1);

    let mut budget = EvaluationBudget::new(config.max_evaluations);
    let records = points
        .iter()
        .map(|y| spec.evaluate(y, &mut budget))
        .collect::<Result<Vec<_>>>()?;
    let ts = TrainingSet::new(records)?;
    Ok(IterationState {
        config: config.clone(),
        route,
        availability,
        bounds,
        ts,
        budget,
        delta,
        delta_max: config.delta_max_factor * delta,
        h_prev: DMatrix::zeros(n, n),
        iteration: 0,
        pending_geometry: false,
        trace: RunTrace::default(),
        finished: None,
        rng,
        diagnostic: None,
    })
}

fn route_for(
    kind: SolverKind,
    n: usize,
    p1: usize,
    availability: &DerivativeAvailability,
    second_order: bool,
) -> Result<Route> {
    let q1 = MonomialBasis::new(n).q1();
    let size = |expected: String| Err(Error::WrongSetSize { expected, actual: p1 });
    let frobenius = |route| {
        if p1 == q1 {
            Ok(Route::FullInterp)
        } else if p1 < n + 2 || p1 > q1 {
            size(format!("{}..={q1}", n + 2))
        } else {
            Ok(route)
        }
    };
    match kind {
        SolverKind::FullInterp if p1 == q1 => Ok(Route::FullInterp),
        SolverKind::FullInterp => size(q1.to_string()),
        SolverKind::Bobyqa => frobenius(Route::MinFrob),
        SolverKind::HermiteBobyqa if availability.k_d() == 0 => frobenius(Route::MinFrob),
        SolverKind::HermiteBobyqa if p1 < n + 2 || p1 > q1 => size(format!("{}..={q1}", n + 2)),
        SolverKind::HermiteBobyqa => Ok(Route::HermiteBobyqa),
        SolverKind::HermiteLs => {
            let k2 = if second_order { availability.second().len() } else { 0 };
            let rows = p1 * (1 + availability.k_d() + k2);
            if rows < q1 || p1 == 0 {
                return Err(Error::Underdetermined {
                    rows: rows.saturating_sub(1),
                    cols: q1 - 1,
                });
            }
            Ok(Route::HermiteLs)
        }
    }
}

fn random_point(rng: &mut ChaCha8Rng, center: &DVector<f64>, radius: f64, bounds: &Bounds) -> DVector<f64> {
    let n = center.len();
    let u: DVector<f64> = DVector::from_fn(n, |_, _| rng.sample(StandardNormal));
    let r = radius * rng.random::<f64>().powf(1.0 / n as f64);
    let norm = u.norm();
    let u = if norm > 0.0 { u / norm } else { DVector::zeros(n) };
    bounds.project(&(center + u * r))
}

impl IterationState {
    /// Enables the model-error diagnostic, recorded in every trace row.
    pub fn with_diagnostic(mut self, taylor: TaylorFn) -> Self {
        self.diagnostic = Some(taylor);
        self
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn training_set(&self) -> &TrainingSet {
        &self.ts
    }

    pub fn incumbent(&self) -> &EvaluationRecord {
        self.ts.incumbent()
    }

    pub fn h_prev(&self) -> &DMatrix<f64> {
        &self.h_prev
    }

    pub fn evaluations(&self) -> usize {
        self.budget.used()
    }

    pub fn trace(&self) -> &RunTrace {
        &self.trace
    }

    pub fn finished(&self) -> Option<TerminationReason> {
        self.finished
    }

    /// Assembles, scales and (if configured) weights the current system.
    pub fn build_system(&self) -> Result<AssembledSystem> {
        let ts = &self.ts;
        let sys = match self.route {
            Route::FullInterp => assemble_full_interp(ts)?,
            Route::MinFrob => assemble_min_frob(ts, &self.h_prev)?,
            Route::HermiteLs => assemble_hermite_ls(ts, &self.availability, self.config.second_order)?,
            Route::HermiteBobyqa => assemble_hermite_bobyqa(ts, &self.availability, &self.h_prev)?,
        };
        let sys = apply_scaling(sys, self.scaling_radius());
        if self.config.weighting.enabled && matches!(self.route, Route::HermiteLs | Route::HermiteBobyqa) {
            apply_weighting(sys, &self.config.weighting, ts)
        } else {
            Ok(sys)
        }
    }

    /// Radius the system is scaled by: the trust-region radius, or the
    /// spread of the training set when points lie farther out.
    fn scaling_radius(&self) -> f64 {
        let x_opt = &self.ts.incumbent().point;
        let spread = self
            .ts
            .records()
            .iter()
            .map(|r| (&r.point - x_opt).norm())
            .fold(0.0, f64::max);
        self.delta.max(spread)
    }

    fn region(&self) -> Region {
        Region::new(self.ts.incumbent().point.clone(), self.delta, self.bounds.clone())
    }

    fn finish(&mut self, reason: TerminationReason) -> StepOutcome {
        self.finished = Some(reason);
        StepOutcome::Finished(reason)
    }

    fn model_error(&self, model: &QuadraticModel) -> Option<f64> {
        let x = &self.ts.incumbent().point;
        self.diagnostic
            .as_ref()
            .map(|t| model_error_diagnostic(model, &t(x), x, DIAGNOSTIC_RADIUS))
    }

    fn record(&mut self, delta: f64, accepted: bool, model_error: Option<f64>) {
        self.trace.rows.push(TraceRow {
            iteration: self.iteration,
            evaluations: self.budget.used(),
            delta,
            f_best: self.ts.incumbent().value,
            accepted,
            model_error,
        });
    }

    /// One trust-region iteration, or one geometry step when the previous
    /// iteration asked for it.
    pub fn step(&mut self, spec: &mut ObjectiveSpec) -> Result<StepOutcome> {
        if let Some(reason) = self.finished {
            return Ok(StepOutcome::Finished(reason));
        }
        if self.budget.is_exhausted() {
            return Ok(self.finish(TerminationReason::BudgetExhausted));
        }
        if self.delta < self.config.rho_end {
            return Ok(self.finish(TerminationReason::RadiusBelowMin));
        }
        self.iteration += 1;
        let sys = self.build_system()?;
        let model = match solve_system(&sys) {
            Ok(m) => m,
            Err(Error::RankDeficient { .. }) => return self.repair(spec, None),
            Err(e) => return Err(e),
        };
        if self.route.frobenius() {
            self.h_prev = model.hessian().clone();
        }
        if self.pending_geometry {
            self.pending_geometry = false;
            return self.geometry(spec, &sys, &model);
        }
        self.trust_region_step(spec, &sys, &model)
    }

    fn trust_region_step(
        &mut self,
        spec: &mut ObjectiveSpec,
        sys: &AssembledSystem,
        model: &QuadraticModel,
    ) -> Result<StepOutcome> {
        let delta = self.delta;
        let x_opt = self.ts.incumbent().point.clone();
        let f_opt = self.ts.incumbent().value;
        let step = solve_subproblem(model, &x_opt, delta, &self.bounds);
        if step.norm() < 1e-14 {
            return Ok(self.finish(TerminationReason::StepSizeTiny));
        }
        let trial = self.bounds.project(&(&x_opt + &step));
        let m_new = model.value(&trial);
        let m_old = model.value(&x_opt);
        if ratio_test(f_opt, f_opt, m_old, m_new).is_err() {
            self.delta *= self.config.gamma_dec;
            return Ok(StepOutcome::Degenerate);
        }
        if let Some(i) = (0..self.ts.len()).find(|&i| same_point(&self.ts.records()[i].point, &trial)) {
            let ratio = ratio_test(f_opt, self.ts.records()[i].value, m_old, m_new)?;
            self.delta *= self.config.gamma_dec;
            self.check_geometry();
            return Ok(StepOutcome::Rejected { ratio });
        }

        let model_error = self.model_error(model);
        let rec = spec.evaluate(&trial, &mut self.budget)?;
        let ratio = ratio_test(f_opt, rec.value, m_old, m_new)?;
        let accepted = ratio >= self.config.eta1;
        let snorm = (&trial - &x_opt).norm();
        // growth is tied to the step length, so short steps in a narrow
        // valley do not inflate the radius
        self.delta = if ratio >= self.config.eta2 {
            (self.config.gamma_dec * delta)
                .max(self.config.gamma_inc * snorm)
                .min(self.delta_max)
        } else if accepted {
            (self.config.gamma_dec * delta).max(snorm)
        } else {
            self.config.gamma_dec * delta
        };

        let out = match lagrange_family(sys) {
            Ok(family) => self.weighted_outgoing(&family, &trial, delta),
            Err(_) => self.ts.farthest_from_incumbent(),
        };
        self.ts.replace_point(out, rec)?;
        self.record(delta, accepted, model_error);
        self.check_geometry();
        Ok(if accepted {
            StepOutcome::Accepted { ratio }
        } else {
            StepOutcome::Rejected { ratio }
        })
    }

    /// Largest `|l_i(y)|` weighted by `max(1, (d_i / delta)^2)`, so that far
    /// points leave first when the new point is not much worse poised.
    fn weighted_outgoing(&self, family: &LagrangeFamily, y: &DVector<f64>, delta: f64) -> usize {
        let vals = family.values_at(y);
        let x_opt = &self.ts.incumbent().point;
        let inc = self.ts.incumbent_index();
        let mut best = (usize::MAX, f64::NEG_INFINITY);
        for (i, rec) in self.ts.records().iter().enumerate() {
            if i == inc {
                continue;
            }
            let d = (&rec.point - x_opt).norm() / delta;
            let score = vals[i].abs() * (d * d).max(1.0);
            if score > best.1 {
                best = (i, score);
            }
        }
        best.0
    }

    /// Schedules a geometry step if the set is badly poised or spread out.
    fn check_geometry(&mut self) {
        if self.delta < self.config.rho_end {
            return;
        }
        let x_opt = &self.ts.incumbent().point;
        let far = self.ts.farthest_from_incumbent();
        let dist = (&self.ts.records()[far].point - x_opt).norm();
        if dist > self.config.far_factor * self.delta {
            self.pending_geometry = true;
            return;
        }
        let lambda = self
            .build_system()
            .and_then(|sys| lagrange_family(&sys))
            .map(|family| estimate_lambda(&family, &self.region()).lambda);
        self.pending_geometry = match lambda {
            Ok(l) => l > self.config.geometry_threshold,
            Err(_) => true,
        };
    }

    /// Replaces the farthest point by a maximizer of its Lagrange polynomial.
    fn geometry(
        &mut self,
        spec: &mut ObjectiveSpec,
        sys: &AssembledSystem,
        model: &QuadraticModel,
    ) -> Result<StepOutcome> {
        let family = match lagrange_family(sys) {
            Ok(f) => f,
            Err(Error::RankDeficient { .. }) => return self.repair(spec, Some(model)),
            Err(e) => return Err(e),
        };
        let region = self.region();
        let out = self.ts.farthest_from_incumbent();
        let mut y = propose_geometry_point(&family, out, &region);
        if self.ts.contains_point(&y, None) || family.value_polynomial(out).value(&y).abs() < 1e-12 {
            y = self.fresh_random_point();
        }
        let model_error = self.model_error(model);
        self.replace_with(spec, out, &y, model_error)
    }

    fn fresh_random_point(&mut self) -> DVector<f64> {
        let center = self.ts.incumbent().point.clone();
        loop {
            let y = random_point(&mut self.rng, &center, self.delta, &self.bounds);
            if !self.ts.contains_point(&y, None) {
                return y;
            }
        }
    }

    fn replace_with(
        &mut self,
        spec: &mut ObjectiveSpec,
        out: usize,
        y: &DVector<f64>,
        model_error: Option<f64>,
    ) -> Result<StepOutcome> {
        let delta = self.delta;
        let rec = spec.evaluate(y, &mut self.budget)?;
        self.ts.replace_point(out, rec)?;
        self.record(delta, false, model_error);
        Ok(StepOutcome::Geometry)
    }

    /// Condition rows of a point in coordinates scaled by
    /// [`Self::scaling_radius`]: complete monomial rows for the least-squares
    /// kinds, affine rows for the minimum-Frobenius kinds. Rows depend only on
    /// the position, so they can be formed for points not yet evaluated.
    fn condition_rows_at(&self, x: &DVector<f64>) -> Vec<DVector<f64>> {
        let n = self.ts.dim();
        let basis = MonomialBasis::new(n);
        let cols = self.condition_cols();
        let second = self.route == Route::HermiteLs && self.config.second_order;
        let z = (x - &self.ts.incumbent().point) / self.scaling_radius();
        let mut rows = Vec::new();
        if self.route.frobenius() {
            rows.push(DVector::from_fn(cols, |c, _| if c == 0 { 1.0 } else { z[c - 1] }));
            for &l in self.availability.first() {
                rows.push(DVector::from_fn(cols, |c, _| if c == l + 1 { 1.0 } else { 0.0 }));
            }
        } else {
            rows.push(basis.full_row(&z));
            for &l in self.availability.first() {
                let mut r = DVector::zeros(cols);
                r.rows_mut(1, cols - 1).copy_from(&basis.derivative_row(&z, l));
                rows.push(r);
            }
            if second {
                for &(i, j) in self.availability.second() {
                    let mut r = DVector::zeros(cols);
                    r[1 + basis.quad_column(i, j)] = 1.0;
                    rows.push(r);
                }
            }
        }
        rows
    }

    fn condition_cols(&self) -> usize {
        let n = self.ts.dim();
        if self.route.frobenius() {
            n + 1
        } else {
            MonomialBasis::new(n).q1()
        }
    }

    /// Rank after swapping `y` in, and the point it replaces: the one
    /// whose removal costs the least rank, the farthest on ties.
    fn best_replacement(
        &self,
        rows: &[Vec<DVector<f64>>],
        y: &DVector<f64>,
        stack: &dyn Fn(&[&Vec<DVector<f64>>]) -> DMatrix<f64>,
    ) -> (usize, usize) {
        let new_rows = self.condition_rows_at(y);
        let x_opt = &self.ts.incumbent().point;
        let inc = self.ts.incumbent_index();
        let mut best = (0, f64::NEG_INFINITY, self.ts.farthest_from_incumbent());
        for k in (0..self.ts.len()).filter(|&i| i != inc) {
            let blocks: Vec<&Vec<DVector<f64>>> =
                (0..rows.len()).map(|i| if i == k { &new_rows } else { &rows[i] }).collect();
            let r = rank(&stack(&blocks));
            let d = (&self.ts.records()[k].point - x_opt).norm();
            if (r, d) > (best.0, best.1) {
                best = (r, d, k);
            }
        }
        (best.0, best.2)
    }

    /// Restores the rank of the condition matrix: the new point maximizes a
    /// polynomial vanishing on all current conditions, and it replaces the
    /// point whose removal costs the least rank, the farthest one on ties.
    fn repair(&mut self, spec: &mut ObjectiveSpec, model: Option<&QuadraticModel>) -> Result<StepOutcome> {
        self.pending_geometry = false;
        let cols = self.condition_cols();
        let rows: Vec<Vec<DVector<f64>>> = self
            .ts
            .records()
            .iter()
            .map(|rec| self.condition_rows_at(&rec.point))
            .collect();
        let stack = |blocks: &[&Vec<DVector<f64>>]| {
            let kept: Vec<&DVector<f64>> = blocks.iter().flat_map(|b| b.iter()).collect();
            DMatrix::from_fn(kept.len(), cols, |r, c| kept[r][c])
        };
        let all: Vec<&Vec<DVector<f64>>> = rows.iter().collect();
        let full = stack(&all);
        let x_opt = self.ts.incumbent().point.clone();
        let mut y = None;
        if rank(&full) < cols {
            let eig = (full.transpose() * &full).symmetric_eigen();
            let k = eig.eigenvalues.imin();
            let u = eig.eigenvectors.column(k).clone_owned();
            let n = x_opt.len();
            let (g, h) = if self.route.frobenius() {
                (u.rows(1, n).clone_owned(), DMatrix::zeros(n, n))
            } else {
                MonomialBasis::new(n).unpack(&u.as_slice()[1..])
            };
            let d = self.scaling_radius();
            let poly = QuadraticModel::new(x_opt.clone(), u[0], g / d, h / (d * d));
            let cand = maximize_abs(&poly, &self.region());
            if !self.ts.contains_point(&cand, None) && poly.value(&cand).abs() > 1e-8 {
                y = Some(cand);
            }
        }
        // a single null direction can be fixed by a point that breaks
        // another block, so fall back to generic random points
        let mut best: Option<(usize, usize, DVector<f64>)> = None;
        for attempt in 0..=REPAIR_RANDOM_TRIES {
            let cand = match (attempt, &y) {
                (0, Some(y)) => y.clone(),
                (0, None) => continue,
                _ => self.fresh_random_point(),
            };
            let (r, out) = self.best_replacement(&rows, &cand, &stack);
            if best.as_ref().is_none_or(|b| r > b.0) {
                best = Some((r, out, cand));
            }
            if r == cols {
                break;
            }
        }
        let (_, out, y) = best.expect("at least one candidate is tried");
        let model_error = model.and_then(|m| self.model_error(m));
        self.replace_with(spec, out, &y, model_error)
    }

    /// Final result; the best point is the incumbent of the training set.
    pub fn result(&self) -> RunResult {
        let inc = self.ts.incumbent();
        RunResult {
            x_best: inc.point.clone(),
            f_best: inc.value,
            evaluations: self.budget.used(),
            iterations: self.iteration,
            termination: self.finished.unwrap_or(TerminationReason::BudgetExhausted),
            trace: self.trace.clone(),
        }
    }
}

/// Alias of [`IterationState::step`].
pub fn step_iteration(state: &mut IterationState, spec: &mut ObjectiveSpec) -> Result<StepOutcome> {
    state.step(spec)
}

fn drive(mut state: IterationState, spec: &mut ObjectiveSpec) -> Result<RunResult> {
    while state.finished.is_none() {
        state.step(spec)?;
    }
    Ok(state.result())
}

/// Minimizes `spec` from `x0`.
pub fn run(spec: &mut ObjectiveSpec, x0: &DVector<f64>, config: &SolverConfig) -> Result<RunResult> {
    drive(initialize(spec, x0, config)?, spec)
}

/// [`run`] with the model-error diagnostic recorded in the trace.
pub fn run_with_diagnostic(
    spec: &mut ObjectiveSpec,
    x0: &DVector<f64>,
    config: &SolverConfig,
    taylor: TaylorFn,
) -> Result<RunResult> {
    drive(initialize(spec, x0, config)?.with_diagnostic(taylor), spec)
}
