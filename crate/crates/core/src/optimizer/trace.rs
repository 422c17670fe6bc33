use nalgebra::DVector;
use serde::{Deserialize, Serialize};

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TerminationReason {
    /// The trust-region radius fell below `rho_end`.
    RadiusBelowMin,
    /// The evaluation budget is used up.
    BudgetExhausted,
    /// The subproblem step was numerically zero.
    StepSizeTiny,
}

impl std::fmt::Display for TerminationReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TerminationReason::RadiusBelowMin => "radius-below-min",
            TerminationReason::BudgetExhausted => "budget-exhausted",
            TerminationReason::StepSizeTiny => "step-size-tiny",
        })
    }
}

/// One row per iteration that spent an evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    /// Cumulative billed evaluations, initial set included.
    pub evaluations: usize,
    /// Radius at the start of the iteration.
    pub delta: f64,
    pub f_best: f64,
    pub accepted: bool,
    /// Model error against a local Taylor model, when a diagnostic was given.
    pub model_error: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub rows: Vec<TraceRow>,
}

impl RunTrace {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Best value after each iteration.
    pub fn f_best(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.f_best).collect()
    }

    /// Writes the trace as CSV with a header row.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> crate::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["iteration", "evaluations", "delta", "f_best", "accepted", "model_error"])?;
        for r in &self.rows {
            out.write_record([
                r.iteration.to_string(),
                r.evaluations.to_string(),
                format!("{:.16e}", r.delta),
                format!("{:.16e}", r.f_best),
                r.accepted.to_string(),
                r.model_error.map_or(String::new(), |e| format!("{e:.16e}")),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub x_best: DVector<f64>,
    pub f_best: f64,
    /// Billed evaluations.
    pub evaluations: usize,
    pub iterations: usize,
    pub termination: TerminationReason,
    pub trace: RunTrace,
}
