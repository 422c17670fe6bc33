//! Trust-region driver: initialization, model building per solver kind,
//! the bound-constrained subproblem, ratio test, radius and training-set
//! updates, geometry repair and termination.

mod config;
mod diagnostic;
mod driver;
mod init;
mod subproblem;
mod trace;

pub use config::{SolverConfig, SolverKind};
pub use diagnostic::{model_error_diagnostic, Taylor};
pub use driver::{
    initialize, ratio_test, run, run_with_diagnostic, step_iteration, IterationState, StepOutcome,
    TaylorFn, DIAGNOSTIC_RADIUS,
};
pub use init::candidate_points;
pub use subproblem::{cauchy_step, projected_gradient, solve_subproblem};
pub use trace::{RunResult, RunTrace, TerminationReason, TraceRow};
