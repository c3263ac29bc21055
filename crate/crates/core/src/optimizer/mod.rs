//! Maximin transmit-covariance optimization.
//!
//! The min-rate problem is attacked through its ζ-weighted sum-rate
//! relaxation: gradient projection solves the relaxation for fixed (τ, ζ),
//! bisection on ζ looks for the link-equalizing weight, and a grid search
//! picks τ. Scheme variants plug in through [`Scheme`].

mod bisection;
mod gp;
mod gradient;
mod projection;
mod schemes;

use serde::{Deserialize, Serialize};

pub use bisection::bisect_zeta;
pub use gp::{gp_optimize, Block, GpRun, StepRecord};
pub use gradient::{gradient_relay, gradient_source, gradients, Gradients};
pub use projection::{project_constraint, water_level, Projection};
pub(crate) use schemes::check_tau_grid;
pub use schemes::{
    nfd_from_ohd, ohd_init, ohd_schedule, optimize_over_tau, optimize_scheme, Scheme, SchemeId, SchemeRegistry,
};

use crate::error::{Error, Result};
use crate::model::SystemParams;
use crate::rates::{self, BoundKind, Cancellation, CovarianceSchedule, EstimateBundle, RateReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpConfig {
    /// Armijo sufficient-increase fraction σ.
    pub sigma: f64,
    /// Armijo backtracking factor ν.
    pub nu: f64,
    /// Outer loop stops when no covariance entry moves more than this.
    pub eps_stop: f64,
    pub max_outer_iters: usize,
    /// Gradient stepsize `s`.
    pub s_step: f64,
    pub max_backtracks: usize,
    /// Bisection stops once `|Ī_rd − Ī_sr|` falls below this.
    pub bisect_tol: f64,
    pub bisect_max_iters: usize,
    /// Keep a per-step Armijo log in [`GpRun::steps`].
    #[serde(skip)]
    pub record_steps: bool,
}

impl Default for GpConfig {
    fn default() -> Self {
        Self {
            sigma: 0.01,
            nu: 0.2,
            eps_stop: 0.01,
            max_outer_iters: 200,
            s_step: 1.0,
            max_backtracks: 30,
            bisect_tol: 1e-2,
            bisect_max_iters: 30,
            record_steps: false,
        }
    }
}

impl GpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1e-5..=1e-1).contains(&self.sigma) {
            return Err(Error::config("sigma", format!("must lie in [1e-5, 0.1], got {}", self.sigma)));
        }
        if !(0.1..=0.5).contains(&self.nu) {
            return Err(Error::config("nu", format!("must lie in [0.1, 0.5], got {}", self.nu)));
        }
        if !(self.eps_stop > 0.0) {
            return Err(Error::config("eps_stop", "must be > 0"));
        }
        if !(self.s_step > 0.0 && self.s_step.is_finite()) {
            return Err(Error::config("s_step", "must be finite and > 0"));
        }
        if self.max_outer_iters == 0 {
            return Err(Error::config("max_outer_iters", "must be >= 1"));
        }
        if self.bisect_max_iters == 0 {
            return Err(Error::config("bisect_max_iters", "must be >= 1"));
        }
        Ok(())
    }
}

/// Which covariances the optimizer may move.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Structure {
    /// Four independent covariances.
    Free,
    /// `Q_i[1] = Q_i[2]` for both nodes.
    Tied,
    /// `Q_s[2] = 0` and `Q_r[1] = 0`.
    HalfDuplex,
}

/// Estimates plus the modelling choices that define one objective.
#[derive(Debug, Clone, Copy)]
pub struct Problem<'a> {
    pub est: &'a EstimateBundle,
    pub params: &'a SystemParams,
    pub cancel: Cancellation,
    pub structure: Structure,
}

impl<'a> Problem<'a> {
    pub fn new(est: &'a EstimateBundle, params: &'a SystemParams) -> Self {
        Self {
            est,
            params,
            cancel: Cancellation::Enabled,
            structure: Structure::Free,
        }
    }

    pub fn with_cancel(mut self, cancel: Cancellation) -> Self {
        self.cancel = cancel;
        self
    }

    pub fn with_structure(mut self, structure: Structure) -> Self {
        self.structure = structure;
        self
    }

    pub fn report(&self, sched: &CovarianceSchedule) -> Result<RateReport> {
        rates::end_to_end_rate(self.est, sched, self.params, BoundKind::Lower, self.cancel)
    }

    pub fn weighted(&self, sched: &CovarianceSchedule, zeta: f64) -> Result<f64> {
        let (i_sr, i_rd) = rates::period_rates(self.est, sched, self.params, self.cancel)?;
        let w = sched.weights();
        let sr = w[0] * i_sr[0] + w[1] * i_sr[1];
        let rd = w[0] * i_rd[0] + w[1] * i_rd[1];
        Ok(zeta * sr + (1.0 - zeta) * rd)
    }
}

/// `ζ Ī_sr + (1 − ζ) Ī_rd` with the relay cancelling its own signal.
pub fn weighted_sum_rate(
    est: &EstimateBundle,
    sched: &CovarianceSchedule,
    params: &SystemParams,
    zeta: f64,
) -> Result<f64> {
    est.check_dims(params)?;
    check_zeta(zeta)?;
    Problem::new(est, params).weighted(sched, zeta)
}

pub(crate) fn check_zeta(zeta: f64) -> Result<()> {
    if (0.0..=1.0).contains(&zeta) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("zeta must lie in [0, 1], got {zeta}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptResult {
    pub sched: CovarianceSchedule,
    pub zeta: f64,
    pub rate: RateReport,
    pub tau_star: f64,
    /// Total GP outer iterations spent.
    pub iterations: usize,
    /// Bisection midpoints evaluated.
    pub bisection_steps: usize,
    /// Bisection interval at termination.
    pub zeta_interval: (f64, f64),
    pub converged: bool,
}
