//! Relaying schemes behind a common trait, looked up by name.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::model::SystemParams;
use crate::rates::{Cancellation, CovarianceSchedule, EstimateBundle};

use super::bisection::bisect_zeta;
use super::gp::{gp_optimize, GpRun};
use super::{GpConfig, OptResult, Problem, Structure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SchemeId {
    /// Two data periods, relay cancels its own signal.
    #[serde(rename = "TCO-2-IC")]
    Tco2Ic,
    /// Two data periods, no cancellation.
    #[serde(rename = "TCO-2")]
    Tco2,
    /// One covariance per node for both periods, with cancellation.
    #[serde(rename = "TCO-1-IC")]
    Tco1Ic,
    /// Optimized half duplex.
    #[serde(rename = "OHD")]
    Ohd,
    /// OHD covariances reused in both periods.
    #[serde(rename = "NFD")]
    Nfd,
}

impl SchemeId {
    pub const ALL: [SchemeId; 5] = [
        SchemeId::Tco2Ic,
        SchemeId::Tco2,
        SchemeId::Tco1Ic,
        SchemeId::Ohd,
        SchemeId::Nfd,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SchemeId::Tco2Ic => "TCO-2-IC",
            SchemeId::Tco2 => "TCO-2",
            SchemeId::Tco1Ic => "TCO-1-IC",
            SchemeId::Ohd => "OHD",
            SchemeId::Nfd => "NFD",
        }
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn normalize(name: &str) -> String {
    name.trim().to_ascii_uppercase().replace('_', "-")
}

impl FromStr for SchemeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let n = normalize(s);
        SchemeId::ALL
            .into_iter()
            .find(|id| id.as_str() == n)
            .ok_or_else(|| Error::UnknownScheme(s.to_string()))
    }
}

pub trait Scheme: Send + Sync {
    fn id(&self) -> SchemeId;

    fn name(&self) -> &'static str {
        self.id().as_str()
    }

    /// Cancellation mode used when evaluating this scheme's rates.
    fn cancellation(&self) -> Cancellation {
        Cancellation::Enabled
    }

    /// Optimizes the schedule for one time share.
    fn optimize_tau(&self, est: &EstimateBundle, params: &SystemParams, tau: f64, cfg: &GpConfig) -> Result<OptResult>;
}

/// Starting point for half duplex: full power, isotropic, in the node's own
/// period only.
pub fn ohd_init(n_s: usize, n_r: usize, tau: f64) -> CovarianceSchedule {
    let mut s = CovarianceSchedule::zeros(n_s, n_r, tau);
    if tau > 0.0 {
        s.q_s[0] = linalg::scaled_identity(n_s, 1.0 / (tau * n_s as f64));
    }
    if tau < 1.0 {
        s.q_r[1] = linalg::scaled_identity(n_r, 1.0 / ((1.0 - tau) * n_r as f64));
    }
    s
}

/// Half-duplex schedule maximizing the equal-weight sum-rate.
pub fn ohd_schedule(est: &EstimateBundle, params: &SystemParams, tau: f64, cfg: &GpConfig) -> Result<GpRun> {
    let problem = Problem::new(est, params).with_structure(Structure::HalfDuplex);
    gp_optimize(&problem, 0.5, &ohd_init(params.n_s, params.n_r, tau), cfg)
}

fn unit_trace(q: &CMatrix) -> CMatrix {
    let t = linalg::trace_re(q);
    if t > 0.0 {
        linalg::scale(q, 1.0 / t)
    } else {
        q.clone()
    }
}

/// Uses the active half-duplex covariances in both periods, rescaled to the
/// power budget.
pub fn nfd_from_ohd(ohd: &CovarianceSchedule) -> CovarianceSchedule {
    let q_s = unit_trace(&ohd.q_s[0]);
    let q_r = unit_trace(&ohd.q_r[1]);
    CovarianceSchedule {
        q_s: [q_s.clone(), q_s],
        q_r: [q_r.clone(), q_r],
        tau: ohd.tau,
    }
}

/// Feasible tied point with the same average covariances as `ohd`.
fn tied_from_ohd(ohd: &CovarianceSchedule) -> CovarianceSchedule {
    let w = ohd.weights();
    let q_s = linalg::scale(&ohd.q_s[0], w[0]);
    let q_r = linalg::scale(&ohd.q_r[1], w[1]);
    CovarianceSchedule {
        q_s: [q_s.clone(), q_s],
        q_r: [q_r.clone(), q_r],
        tau: ohd.tau,
    }
}

struct FullDuplex {
    id: SchemeId,
    cancel: Cancellation,
    structure: Structure,
}

impl Scheme for FullDuplex {
    fn id(&self) -> SchemeId {
        self.id
    }

    fn cancellation(&self) -> Cancellation {
        self.cancel
    }

    fn optimize_tau(&self, est: &EstimateBundle, params: &SystemParams, tau: f64, cfg: &GpConfig) -> Result<OptResult> {
        let ohd = ohd_schedule(est, params, tau, cfg)?;
        let nfd = nfd_from_ohd(&ohd.sched);
        let inits = match self.structure {
            Structure::Tied => vec![tied_from_ohd(&ohd.sched), nfd],
            _ => vec![ohd.sched, nfd],
        };
        let problem = Problem::new(est, params)
            .with_cancel(self.cancel)
            .with_structure(self.structure);
        let mut out = bisect_zeta(&problem, tau, &inits, cfg)?;
        out.iterations += ohd.iterations;
        Ok(out)
    }
}

struct HalfDuplex;

impl Scheme for HalfDuplex {
    fn id(&self) -> SchemeId {
        SchemeId::Ohd
    }

    fn optimize_tau(&self, est: &EstimateBundle, params: &SystemParams, tau: f64, cfg: &GpConfig) -> Result<OptResult> {
        let run = ohd_schedule(est, params, tau, cfg)?;
        let rate = Problem::new(est, params).report(&run.sched)?;
        Ok(OptResult {
            sched: run.sched,
            zeta: 0.5,
            rate,
            tau_star: tau,
            iterations: run.iterations,
            bisection_steps: 0,
            zeta_interval: (0.5, 0.5),
            converged: run.converged,
        })
    }
}

struct NaiveFullDuplex;

impl Scheme for NaiveFullDuplex {
    fn id(&self) -> SchemeId {
        SchemeId::Nfd
    }

    fn optimize_tau(&self, est: &EstimateBundle, params: &SystemParams, tau: f64, cfg: &GpConfig) -> Result<OptResult> {
        let run = ohd_schedule(est, params, tau, cfg)?;
        let sched = nfd_from_ohd(&run.sched);
        let rate = Problem::new(est, params).report(&sched)?;
        Ok(OptResult {
            sched,
            zeta: 0.5,
            rate,
            tau_star: tau,
            iterations: run.iterations,
            bisection_steps: 0,
            zeta_interval: (0.5, 0.5),
            converged: run.converged,
        })
    }
}

/// Name-keyed collection of schemes.
pub struct SchemeRegistry {
    schemes: Vec<Box<dyn Scheme>>,
}

impl SchemeRegistry {
    pub fn empty() -> Self {
        Self { schemes: Vec::new() }
    }

    pub fn standard() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(FullDuplex {
            id: SchemeId::Tco2Ic,
            cancel: Cancellation::Enabled,
            structure: Structure::Free,
        }));
        r.register(Box::new(FullDuplex {
            id: SchemeId::Tco2,
            cancel: Cancellation::Disabled,
            structure: Structure::Free,
        }));
        r.register(Box::new(FullDuplex {
            id: SchemeId::Tco1Ic,
            cancel: Cancellation::Enabled,
            structure: Structure::Tied,
        }));
        r.register(Box::new(HalfDuplex));
        r.register(Box::new(NaiveFullDuplex));
        r
    }

    /// Shared instance of [`SchemeRegistry::standard`].
    pub fn global() -> &'static SchemeRegistry {
        static REG: OnceLock<SchemeRegistry> = OnceLock::new();
        REG.get_or_init(SchemeRegistry::standard)
    }

    /// Adds a scheme, replacing any existing one with the same name.
    pub fn register(&mut self, scheme: Box<dyn Scheme>) {
        self.schemes.retain(|s| s.name() != scheme.name());
        self.schemes.push(scheme);
    }

    pub fn get(&self, name: &str) -> Result<&dyn Scheme> {
        let n = normalize(name);
        self.schemes
            .iter()
            .find(|s| s.name() == n)
            .map(|b| b.as_ref())
            .ok_or_else(|| Error::UnknownScheme(name.to_string()))
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.schemes.iter().map(|s| s.name()).collect()
    }
}

pub(crate) fn check_tau_grid(tau_grid: &[f64]) -> Result<()> {
    if tau_grid.is_empty() {
        return Err(Error::config("tau_grid", "must not be empty"));
    }
    if let Some(t) = tau_grid.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
        return Err(Error::config("tau_grid", format!("values must lie strictly inside (0, 1), got {t}")));
    }
    Ok(())
}

/// Runs `scheme` at every τ in the grid and keeps the largest min-rate;
/// ties go to the τ closest to one half.
pub fn optimize_over_tau(
    scheme: &dyn Scheme,
    est: &EstimateBundle,
    params: &SystemParams,
    tau_grid: &[f64],
    cfg: &GpConfig,
) -> Result<OptResult> {
    check_tau_grid(tau_grid)?;
    est.check_dims(params)?;
    let mut best: Option<OptResult> = None;
    let mut spent = 0;
    for &tau in tau_grid {
        let r = scheme.optimize_tau(est, params, tau, cfg)?;
        spent += r.iterations;
        let better = match &best {
            None => true,
            Some(b) => {
                let d = r.rate.i_end - b.rate.i_end;
                d > 1e-12 || (d.abs() <= 1e-12 && (tau - 0.5).abs() < (b.tau_star - 0.5).abs())
            }
        };
        if better {
            best = Some(r);
        }
    }
    let mut best = best.expect("tau grid is non-empty");
    best.iterations = spent;
    Ok(best)
}

pub fn optimize_scheme(
    est: &EstimateBundle,
    params: &SystemParams,
    scheme: SchemeId,
    tau_grid: &[f64],
    cfg: &GpConfig,
) -> Result<OptResult> {
    let s = SchemeRegistry::global().get(scheme.as_str())?;
    optimize_over_tau(s, est, params, tau_grid, cfg)
}
