use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factory::WeightScheme;
use crate::problem::DerivativeAvailability;

/// Which model the driver builds in every iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SolverKind {
    /// Determined quadratic interpolation with `(n+1)(n+2)/2` points.
    FullInterp,
    /// Minimum Frobenius-norm models, as in BOBYQA.
    Bobyqa,
    /// Hermite least squares.
    HermiteLs,
    /// Minimum Frobenius-norm models with gradient-matching rows.
    HermiteBobyqa,
}

impl SolverKind {
    pub const ALL: [SolverKind; 4] = [
        SolverKind::FullInterp,
        SolverKind::Bobyqa,
        SolverKind::HermiteLs,
        SolverKind::HermiteBobyqa,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::FullInterp => "full-interp",
            SolverKind::Bobyqa => "bobyqa",
            SolverKind::HermiteLs => "hermite-ls",
            SolverKind::HermiteBobyqa => "hermite-bobyqa",
        }
    }

    /// Whether the kind uses derivative information at all.
    pub fn is_hermite(self) -> bool {
        matches!(self, SolverKind::HermiteLs | SolverKind::HermiteBobyqa)
    }

    /// Default number of training points.
    ///
    /// Hermite least squares uses `max(2n+1-k_d, ceil(q1 / (1+k_d+k_2)))`,
    /// raised if needed so that the monomials no derivative row touches can
    /// still be fitted from the value rows alone.
    pub fn default_p1(self, n: usize, availability: &DerivativeAvailability, second_order: bool) -> usize {
        let q1 = (n + 1) * (n + 2) / 2;
        match self {
            SolverKind::FullInterp => q1,
            SolverKind::Bobyqa | SolverKind::HermiteBobyqa => (2 * n + 1).min(q1),
            SolverKind::HermiteLs => {
                let kd = availability.k_d();
                let k2 = if second_order { availability.second().len() } else { 0 };
                let by_rows = q1.div_ceil(1 + kd + k2);
                let by_cross = 2 * n + 1 - kd;
                by_rows.max(by_cross).max(structural_minimum(n, availability, second_order))
            }
        }
    }
}

/// `1 +` the number of basis functions that appear in value rows only.
fn structural_minimum(n: usize, availability: &DerivativeAvailability, second_order: bool) -> usize {
    let unknown = availability.unknown_directions(n);
    let mut untouched = unknown.len();
    for (a, &i) in unknown.iter().enumerate() {
        for &j in &unknown[a..] {
            if !(second_order && availability.has_second(i, j)) {
                untouched += 1;
            }
        }
    }
    1 + untouched
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "full-interp" | "full" | "interp" => Ok(SolverKind::FullInterp),
            "bobyqa" => Ok(SolverKind::Bobyqa),
            "hermite-ls" | "hls" => Ok(SolverKind::HermiteLs),
            "hermite-bobyqa" | "hb" => Ok(SolverKind::HermiteBobyqa),
            other => Err(Error::InvalidConfig(format!("unknown solver kind `{other}`"))),
        }
    }
}

/// Trust-region driver settings. The constants are conventional values, not
/// tuned per problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub kind: SolverKind,
    /// Number of training points; `None` picks [`SolverKind::default_p1`].
    pub p1: Option<usize>,
    /// Initial radius; `None` gives `0.1 max(1, |x0|_inf)`, capped at a
    /// quarter of the narrowest box width.
    pub delta0: Option<f64>,
    pub rho_end: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub gamma_dec: f64,
    pub gamma_inc: f64,
    /// `Delta_max = delta_max_factor * Delta_0`.
    pub delta_max_factor: f64,
    pub max_evaluations: usize,
    /// Distance weighting of regression rows; ignored by interpolation kinds.
    pub weighting: WeightScheme,
    /// Append second-derivative rows (Hermite least squares only).
    pub second_order: bool,
    /// Poisedness above which the next iteration is a geometry step.
    pub geometry_threshold: f64,
    /// A geometry step is also scheduled when the farthest
    /// training point lies beyond `far_factor * Delta`.
    pub far_factor: f64,
    /// Seeds the random fallback used when geometry repair gets stuck.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            kind: SolverKind::HermiteLs,
            p1: None,
            delta0: None,
            rho_end: 1e-8,
            eta1: 0.1,
            eta2: 0.7,
            gamma_dec: 0.5,
            gamma_inc: 2.0,
            delta_max_factor: 1e3,
            max_evaluations: 1000,
            weighting: WeightScheme::default(),
            second_order: false,
            geometry_threshold: 100.0,
            far_factor: 2.0,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn new(kind: SolverKind) -> Self {
        Self {
            kind,
            ..Self::default()
        }
    }

    pub fn with_budget(mut self, max_evaluations: usize) -> Self {
        self.max_evaluations = max_evaluations;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.into()));
        if !(0.0 < self.eta1 && self.eta1 < self.eta2 && self.eta2 < 1.0) {
            return bad("need 0 < eta1 < eta2 < 1");
        }
        if !(0.0 < self.gamma_dec && self.gamma_dec < 1.0 && self.gamma_inc > 1.0) {
            return bad("need 0 < gamma_dec < 1 < gamma_inc");
        }
        if !(self.rho_end > 0.0) {
            return bad("rho_end must be positive");
        }
        if let Some(d) = self.delta0 {
            if !(d > self.rho_end) {
                return bad("need rho_end < delta0");
            }
        }
        if self.weighting.enabled && !(self.weighting.s > 0.0) {
            return bad("weighting scale must be positive");
        }
        Ok(())
    }
}
