//! Problem parameters shared by the classical and measure-level solvers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::potential::GrowthCertificate;

/// Exponent, discount, horizon truncation, and solver tolerances.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemSpec {
    /// Kinetic exponent, p > 1.
    pub p: f64,
    /// Discount rate, delta > 0.
    pub delta: f64,
    /// Truncation horizon T; integrals on [T, inf) are completed by the
    /// stay-put tail e^{-delta T} (-V(sigma(T)) / delta).
    pub horizon: f64,
    /// Number of uniform grid intervals.
    pub steps: usize,
    /// Optimizer stops when the transcription gradient norm falls below this.
    pub grad_tol: f64,
    pub max_iters: usize,
    /// Measure-level growth certificate consumed by the value-bound checks.
    #[serde(default)]
    pub certificate: Option<GrowthCertificate>,
    /// Also start the optimizer from a registered closed-form flow.
    #[serde(default)]
    pub warm_start_closed_form: bool,
}

impl ProblemSpec {
    /// Defaults: T = 40 / delta and 400 steps, so the tail factor e^{-delta T}
    /// is far below every tolerance in the checks.
    pub fn new(p: f64, delta: f64) -> Result<Self> {
        let spec = ProblemSpec {
            p,
            delta,
            horizon: 40.0 / delta,
            steps: 400,
            grad_tol: 1e-7,
            max_iters: 20_000,
            certificate: None,
            warm_start_closed_form: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_horizon(mut self, horizon: f64, steps: usize) -> Self {
        self.horizon = horizon;
        self.steps = steps;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.p <= 1.0 || !self.p.is_finite() {
            return Err(Error::InvalidExponent(self.p, 1.0));
        }
        if self.delta <= 0.0 || !self.delta.is_finite() {
            return Err(Error::InvalidDiscount(self.delta));
        }
        if self.horizon <= 0.0 || !self.horizon.is_finite() {
            return Err(Error::InvalidTimeNodes);
        }
        if self.steps == 0 {
            return Err(Error::TooFewNodes(2, 1));
        }
        Ok(())
    }

    /// Conjugate exponent q = p / (p - 1).
    pub fn q(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::uniform(self.horizon, self.steps, self.delta)
    }
}

/// Outcome of the discount validity gate p (2p/delta)^p alpha < 1.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DeltaValidity {
    /// p (2p/delta)^p alpha
    pub value: f64,
    /// 1 - value
    pub margin: f64,
    pub pass: bool,
}

/// Checks the discount validity condition for a growth coefficient alpha.
/// Failing it means the discounted action may be unbounded below.
pub fn delta_validity(p: f64, alpha: f64, delta: f64) -> DeltaValidity {
    let value = p * (2.0 * p / delta).powf(p) * alpha;
    DeltaValidity {
        value,
        margin: 1.0 - value,
        pass: value < 1.0,
    }
}
