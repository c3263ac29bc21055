//! Aggregate noise covariances after partial self-interference cancellation
//! and the resulting per-link and end-to-end rate bounds.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, HermitianPd};
use crate::model::{build_pilot, ChannelSet, LinkEstimate, SystemParams};

/// One of the two data periods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Period {
    First,
    Second,
}

impl Period {
    pub const BOTH: [Period; 2] = [Period::First, Period::Second];

    pub fn index(self) -> usize {
        match self {
            Period::First => 0,
            Period::Second => 1,
        }
    }
}

/// Whether the relay subtracts its own (estimated) transmit signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cancellation {
    Enabled,
    Disabled,
}

/// Transmit covariances for both nodes over both periods.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceSchedule {
    pub q_s: [CMatrix; 2],
    pub q_r: [CMatrix; 2],
    pub tau: f64,
}

impl CovarianceSchedule {
    pub fn zeros(n_s: usize, n_r: usize, tau: f64) -> Self {
        Self {
            q_s: [CMatrix::zeros(n_s, n_s), CMatrix::zeros(n_s, n_s)],
            q_r: [CMatrix::zeros(n_r, n_r), CMatrix::zeros(n_r, n_r)],
            tau,
        }
    }

    /// `[τ, 1 − τ]`
    pub fn weights(&self) -> [f64; 2] {
        [self.tau, 1.0 - self.tau]
    }

    pub fn weight(&self, l: Period) -> f64 {
        self.weights()[l.index()]
    }

    /// τ-weighted trace of the source covariances.
    pub fn source_power(&self) -> f64 {
        weighted_trace(&self.q_s, self.weights())
    }

    pub fn relay_power(&self) -> f64 {
        weighted_trace(&self.q_r, self.weights())
    }

    /// Largest entrywise change between two schedules.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.q_s
            .iter()
            .zip(&other.q_s)
            .chain(self.q_r.iter().zip(&other.q_r))
            .map(|(a, b)| linalg::max_abs_diff(a, b))
            .fold(0.0, f64::max)
    }

    pub fn validate(&self, n_s: usize, n_r: usize) -> Result<()> {
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(Error::InvalidInput(format!("tau must lie in [0, 1], got {}", self.tau)));
        }
        for q in &self.q_s {
            if q.shape() != (n_s, n_s) {
                return Err(Error::DimensionMismatch(format!("Q_s must be {n_s}x{n_s}, got {:?}", q.shape())));
            }
            linalg::check_psd(q, "Q_s")?;
        }
        for q in &self.q_r {
            if q.shape() != (n_r, n_r) {
                return Err(Error::DimensionMismatch(format!("Q_r must be {n_r}x{n_r}, got {:?}", q.shape())));
            }
            linalg::check_psd(q, "Q_r")?;
        }
        for (who, p) in [("source", self.source_power()), ("relay", self.relay_power())] {
            if p > 1.0 + 1e-9 {
                return Err(Error::InvalidInput(format!("{who} power budget exceeded: {p}")));
            }
        }
        Ok(())
    }
}

fn weighted_trace(q: &[CMatrix; 2], w: [f64; 2]) -> f64 {
    w[0] * linalg::trace_re(&q[0]) + w[1] * linalg::trace_re(&q[1])
}

/// Channel estimates for the four links.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateBundle {
    pub sr: LinkEstimate,
    pub rr: LinkEstimate,
    pub rd: LinkEstimate,
    pub sd: LinkEstimate,
}

impl EstimateBundle {
    /// Runs one training epoch. The source's pilot period trains `H_sr` at the
    /// relay and `H_sd` at the destination; the relay's trains `H_rr` and
    /// `H_rd`. Noise is drawn in the order sr, rr, rd, sd.
    pub fn from_training<R: Rng + ?Sized>(ch: &ChannelSet, params: &SystemParams, rng: &mut R) -> Result<Self> {
        let imp = params.impairments();
        let src = build_pilot(params.n_s, params.train_len)?;
        let rel = build_pilot(params.n_r, params.train_len)?;
        let sr = LinkEstimate::from_training(&ch.h_sr, params.rho_r, &src, imp, rng)?;
        let rr = LinkEstimate::from_training(&ch.h_rr, params.eta_r, &rel, imp, rng)?;
        let rd = LinkEstimate::from_training(&ch.h_rd, params.rho_d, &rel, imp, rng)?;
        let sd = LinkEstimate::from_training(&ch.h_sd, params.eta_d, &src, imp, rng)?;
        Ok(Self { sr, rr, rd, sd })
    }

    pub fn perfect(ch: &ChannelSet, params: &SystemParams) -> Self {
        Self {
            sr: LinkEstimate::perfect(&ch.h_sr, params.rho_r),
            rr: LinkEstimate::perfect(&ch.h_rr, params.eta_r),
            rd: LinkEstimate::perfect(&ch.h_rd, params.rho_d),
            sd: LinkEstimate::perfect(&ch.h_sd, params.eta_d),
        }
    }

    /// Same estimates with every `D̂` set to zero.
    pub fn without_error(&self) -> Self {
        Self {
            sr: self.sr.without_error(),
            rr: self.rr.without_error(),
            rd: self.rd.without_error(),
            sd: self.sd.without_error(),
        }
    }

    pub fn check_dims(&self, params: &SystemParams) -> Result<()> {
        let want = [
            ("sr", &self.sr, params.m_r, params.n_s),
            ("rr", &self.rr, params.m_r, params.n_r),
            ("rd", &self.rd, params.m_d, params.n_r),
            ("sd", &self.sd, params.m_d, params.n_s),
        ];
        for (name, e, m, n) in want {
            if e.h_hat.shape() != (m, n) || e.d_hat.shape() != (m, m) {
                return Err(Error::DimensionMismatch(format!(
                    "link {name}: expected H {m}x{n}, got {:?} with D {:?}",
                    e.h_hat.shape(),
                    e.d_hat.shape()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundKind {
    Lower,
    Upper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub i_sr: [f64; 2],
    pub i_rd: [f64; 2],
    pub i_end: f64,
    pub bound_kind: BoundKind,
}

impl RateReport {
    fn new(i_sr: [f64; 2], i_rd: [f64; 2], tau: f64, bound_kind: BoundKind) -> Self {
        let w = [tau, 1.0 - tau];
        let s = w[0] * i_sr[0] + w[1] * i_sr[1];
        let d = w[0] * i_rd[0] + w[1] * i_rd[1];
        Self {
            i_sr,
            i_rd,
            i_end: s.min(d),
            bound_kind,
        }
    }

    /// τ-weighted source-to-relay rate.
    pub fn sum_sr(&self, tau: f64) -> f64 {
        tau * self.i_sr[0] + (1.0 - tau) * self.i_sr[1]
    }

    pub fn sum_rd(&self, tau: f64) -> f64 {
        tau * self.i_rd[0] + (1.0 - tau) * self.i_rd[1]
    }
}

/// `Σ̂_r` for given period covariances.
pub fn relay_noise(
    est: &EstimateBundle,
    params: &SystemParams,
    q_s: &CMatrix,
    q_r: &CMatrix,
    cancel: Cancellation,
) -> CMatrix {
    let (k, b) = (params.kappa, params.beta);
    let (rho, eta) = (params.rho_r, params.eta_r);
    let (h_sr, h_rr) = (&est.sr.h_hat, &est.rr.h_hat);
    let mut sig = linalg::identity(h_sr.nrows());
    sig += linalg::scale(&linalg::sandwich_diag(h_sr, q_s), k * rho);
    sig += linalg::scale(&est.sr.d_hat, linalg::trace_re(q_s));
    sig += linalg::scale(&linalg::sandwich_diag(h_rr, q_r), k * eta);
    sig += linalg::scale(&est.rr.d_hat, linalg::trace_re(q_r));
    sig += linalg::scale(&linalg::diag_part(&linalg::sandwich(h_sr, q_s)), b * rho);
    let si = linalg::sandwich(h_rr, q_r);
    sig += linalg::scale(&linalg::diag_part(&si), b * eta);
    if cancel == Cancellation::Disabled {
        sig += linalg::scale(&si, eta);
    }
    linalg::hermitian_part(&sig)
}

/// `Σ̂_d` for given period covariances. The destination does not cancel the
/// source's interference.
pub fn dest_noise(est: &EstimateBundle, params: &SystemParams, q_s: &CMatrix, q_r: &CMatrix) -> CMatrix {
    let (k, b) = (params.kappa, params.beta);
    let (rho, eta) = (params.rho_d, params.eta_d);
    let (h_rd, h_sd) = (&est.rd.h_hat, &est.sd.h_hat);
    let mut sig = linalg::identity(h_rd.nrows());
    sig += linalg::scale(&linalg::sandwich_diag(h_rd, q_r), k * rho);
    sig += linalg::scale(&est.rd.d_hat, linalg::trace_re(q_r));
    let leak = linalg::sandwich(h_sd, q_s);
    sig += linalg::scale(&leak, eta);
    sig += linalg::scale(&linalg::sandwich_diag(h_sd, q_s), k * eta);
    sig += linalg::scale(&est.sd.d_hat, linalg::trace_re(q_s));
    sig += linalg::scale(&linalg::diag_part(&linalg::sandwich(h_rd, q_r)), b * rho);
    sig += linalg::scale(&linalg::diag_part(&leak), b * eta);
    linalg::hermitian_part(&sig)
}

/// Noise and signal-plus-noise covariances at both receivers in one period.
pub struct PeriodCovs {
    pub sigma_r: CMatrix,
    pub s_r: CMatrix,
    pub sigma_d: CMatrix,
    pub s_d: CMatrix,
}

impl PeriodCovs {
    pub fn new(est: &EstimateBundle, params: &SystemParams, q_s: &CMatrix, q_r: &CMatrix, cancel: Cancellation) -> Self {
        let sigma_r = relay_noise(est, params, q_s, q_r, cancel);
        let s_r = linalg::hermitian_part(&(linalg::scale(&linalg::sandwich(&est.sr.h_hat, q_s), params.rho_r) + &sigma_r));
        let sigma_d = dest_noise(est, params, q_s, q_r);
        let s_d = linalg::hermitian_part(&(linalg::scale(&linalg::sandwich(&est.rd.h_hat, q_r), params.rho_d) + &sigma_d));
        Self { sigma_r, s_r, sigma_d, s_d }
    }

    pub fn rate_sr(&self) -> Result<f64> {
        two_logdet(&self.s_r, &self.sigma_r)
    }

    pub fn rate_rd(&self) -> Result<f64> {
        two_logdet(&self.s_d, &self.sigma_d)
    }
}

fn two_logdet(s: &CMatrix, sigma: &CMatrix) -> Result<f64> {
    let a = HermitianPd::new(s, "signal-plus-noise covariance")?.log2_det();
    let b = HermitianPd::new(sigma, "noise covariance")?.log2_det();
    Ok((a - b).max(0.0))
}

pub fn noise_cov_relay(
    est: &EstimateBundle,
    sched: &CovarianceSchedule,
    params: &SystemParams,
    l: Period,
    cancel: Cancellation,
) -> Result<CMatrix> {
    est.check_dims(params)?;
    let i = l.index();
    Ok(relay_noise(est, params, &sched.q_s[i], &sched.q_r[i], cancel))
}

pub fn noise_cov_dest(est: &EstimateBundle, sched: &CovarianceSchedule, params: &SystemParams, l: Period) -> Result<CMatrix> {
    est.check_dims(params)?;
    let i = l.index();
    Ok(dest_noise(est, params, &sched.q_s[i], &sched.q_r[i]))
}

pub fn rate_sr(
    est: &EstimateBundle,
    sched: &CovarianceSchedule,
    params: &SystemParams,
    l: Period,
    cancel: Cancellation,
) -> Result<f64> {
    est.check_dims(params)?;
    let i = l.index();
    let sigma = relay_noise(est, params, &sched.q_s[i], &sched.q_r[i], cancel);
    let s = linalg::scale(&linalg::sandwich(&est.sr.h_hat, &sched.q_s[i]), params.rho_r) + &sigma;
    two_logdet(&linalg::hermitian_part(&s), &sigma)
}

pub fn rate_rd(est: &EstimateBundle, sched: &CovarianceSchedule, params: &SystemParams, l: Period) -> Result<f64> {
    est.check_dims(params)?;
    let i = l.index();
    let sigma = dest_noise(est, params, &sched.q_s[i], &sched.q_r[i]);
    let s = linalg::scale(&linalg::sandwich(&est.rd.h_hat, &sched.q_r[i]), params.rho_d) + &sigma;
    two_logdet(&linalg::hermitian_part(&s), &sigma)
}

/// Per-period link rates without the dimension check.
pub(crate) fn period_rates(
    est: &EstimateBundle,
    sched: &CovarianceSchedule,
    params: &SystemParams,
    cancel: Cancellation,
) -> Result<([f64; 2], [f64; 2])> {
    let mut i_sr = [0.0; 2];
    let mut i_rd = [0.0; 2];
    for l in 0..2 {
        let covs = PeriodCovs::new(est, params, &sched.q_s[l], &sched.q_r[l], cancel);
        i_sr[l] = covs.rate_sr()?;
        i_rd[l] = covs.rate_rd()?;
    }
    Ok((i_sr, i_rd))
}

/// End-to-end rate. The upper bound reuses the same estimates and schedule
/// with the estimation-error covariances removed.
pub fn end_to_end_rate(
    est: &EstimateBundle,
    sched: &CovarianceSchedule,
    params: &SystemParams,
    bound: BoundKind,
    cancel: Cancellation,
) -> Result<RateReport> {
    est.check_dims(params)?;
    let (i_sr, i_rd) = match bound {
        BoundKind::Lower => period_rates(est, sched, params, cancel)?,
        BoundKind::Upper => period_rates(&est.without_error(), sched, params, cancel)?,
    };
    Ok(RateReport::new(i_sr, i_rd, sched.tau, bound))
}
