//! Closed-form rate approximation for symmetric antenna counts, no
//! source-to-destination leakage, equal time sharing and perfect CSI.
//!
//! The channels are replaced by diagonal ones with `R = min(M, N)` equal
//! gains `√(MN/R)`; the optimum is then approximated by the better of an
//! isotropic full-duplex schedule and an isotropic half-duplex schedule.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SystemParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeParams {
    pub n: usize,
    pub m: usize,
    pub r: usize,
    /// `R / (M (κ + β))`, infinite without distortion.
    pub theta: f64,
    pub rho_r: f64,
    pub rho_d: f64,
    pub eta_r: f64,
    pub kappa: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DuplexMode {
    Full,
    Half,
}

impl RegimeParams {
    pub fn new(n: usize, m: usize, rho_r: f64, rho_d: f64, eta_r: f64, kappa: f64, beta: f64) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::InvalidInput("antenna counts must be >= 1".into()));
        }
        for (name, v) in [("rho_r", rho_r), ("rho_d", rho_d), ("eta_r", eta_r), ("kappa", kappa), ("beta", beta)] {
            if !(v >= 0.0) || v.is_nan() {
                return Err(Error::InvalidInput(format!("{name} must be >= 0, got {v}")));
            }
        }
        if rho_d <= 0.0 {
            return Err(Error::InvalidInput("rho_d must be > 0".into()));
        }
        let r = n.min(m);
        let kb = kappa + beta;
        let theta = if kb > 0.0 { r as f64 / (m as f64 * kb) } else { f64::INFINITY };
        Ok(Self {
            n,
            m,
            r,
            theta,
            rho_r,
            rho_d,
            eta_r,
            kappa,
            beta,
        })
    }

    /// Takes `N = n_s = n_r` and `M = m_r = m_d`; ignores `η_d` and `T`.
    pub fn from_system(p: &SystemParams) -> Result<Self> {
        if p.n_s != p.n_r || p.m_r != p.m_d {
            return Err(Error::InvalidInput(
                "the approximation needs n_s = n_r and m_r = m_d".into(),
            ));
        }
        Self::new(p.n_s, p.m_r, p.rho_r, p.rho_d, p.eta_r, p.kappa, p.beta)
    }

    fn kb(&self) -> f64 {
        self.kappa + self.beta
    }

    fn rm(&self) -> f64 {
        self.r as f64 / self.m as f64
    }

    /// `η_r` below which full duplex is used regardless of `ρ_r`.
    pub fn eta_crit(&self) -> f64 {
        if self.kb() == 0.0 {
            return f64::INFINITY;
        }
        (self.rho_r / self.rho_d - 1.0) * self.theta
    }
}

fn sinr_log(r: f64, rho: f64, denom: f64) -> f64 {
    r * (1.0 + rho / denom).log2()
}

/// Full-duplex rate, piecewise form.
pub fn approx_rate_fd(p: &RegimeParams) -> f64 {
    let r = p.r as f64;
    let kb = p.kb();
    if p.rho_r / p.rho_d >= 1.0 + kb * p.eta_r / p.rm() {
        sinr_log(r, p.rho_d, p.rm() + kb * p.rho_d)
    } else {
        sinr_log(r, p.rho_r, p.rm() + kb * (p.rho_r + p.eta_r))
    }
}

/// Full-duplex rate, as the min of the two per-link SINRs.
pub fn approx_rate_fd_min(p: &RegimeParams) -> f64 {
    let kb = p.kb();
    let sr = p.rho_r / (p.rm() + kb * (p.rho_r + p.eta_r));
    let rd = p.rho_d / (p.rm() + kb * p.rho_d);
    p.r as f64 * (1.0 + sr.min(rd)).log2()
}

/// Half-duplex rate; does not depend on `η_r`.
pub fn approx_rate_hd(p: &RegimeParams) -> f64 {
    let half_r = 0.5 * p.r as f64;
    let rho = p.rho_r.min(p.rho_d);
    sinr_log(half_r, rho, 0.5 * p.rm() + p.kb() * rho)
}

/// Better of the two candidate schedules; ties go to full duplex.
pub fn approx_rate(p: &RegimeParams) -> (f64, DuplexMode) {
    let fd = approx_rate_fd(p);
    let hd = approx_rate_hd(p);
    if fd >= hd {
        (fd, DuplexMode::Full)
    } else {
        (hd, DuplexMode::Half)
    }
}

/// `η_r` at which the approximation switches from full to half duplex.
/// Infinite when full duplex always wins.
pub fn duplex_boundary(p: &RegimeParams) -> f64 {
    let kb = p.kb();
    if kb == 0.0 {
        return f64::INFINITY;
    }
    let th = p.theta;
    let ratio = p.rho_r / p.rho_d;
    if ratio <= 1.0 {
        let a = th + 2.0 * p.rho_r;
        0.5 * (a * a + 2.0 * p.rho_r / kb * a).sqrt() - 0.5 * th
    } else {
        // never below eta_crit, so it also covers the always-full-duplex case
        let a = th + 2.0 * p.rho_d;
        0.5 * ratio * (a * a + 2.0 * p.rho_d / kb * a).sqrt() - th * (1.0 - 0.5 * ratio)
    }
}

/// Per-antenna diagonal covariances for the two periods.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalSchedule {
    pub q_s: [Vec<f64>; 2],
    pub q_r: [Vec<f64>; 2],
}

impl DiagonalSchedule {
    /// `Q = I/N` for both nodes in both periods.
    pub fn full_duplex(n: usize) -> Self {
        let q = vec![1.0 / n as f64; n];
        Self {
            q_s: [q.clone(), q.clone()],
            q_r: [q.clone(), q],
        }
    }

    /// `Q_s[1] = Q_r[2] = 2I/N`, silent otherwise.
    pub fn half_duplex(n: usize) -> Self {
        let q = vec![2.0 / n as f64; n];
        let z = vec![0.0; n];
        Self {
            q_s: [q.clone(), z.clone()],
            q_r: [z, q],
        }
    }
}

/// Rate of the equal-gain diagonal channel model at `τ = 1/2`, evaluated on
/// the `R` active streams.
pub fn diagonal_channel_rate(p: &RegimeParams, s: &DiagonalSchedule) -> f64 {
    let g = (p.n * p.m) as f64 / p.r as f64;
    let kb = p.kb();
    let mut sr = 0.0;
    let mut rd = 0.0;
    for l in 0..2 {
        for i in 0..p.r {
            let (qs, qr) = (s.q_s[l][i], s.q_r[l][i]);
            sr += (1.0 + p.rho_r * g * qs / (1.0 + kb * g * (p.rho_r * qs + p.eta_r * qr))).log2();
            rd += (1.0 + p.rho_d * g * qr / (1.0 + kb * g * p.rho_d * qr)).log2();
        }
    }
    0.5 * sr.min(rd)
}
