//! Complex gradients of the ζ-weighted sum-rate.
//!
//! Convention: for a Hermitian perturbation `Δ` of `Q[l]` the first-order
//! change of the objective is `½ Re tr(G[l] Δ)`.

use std::f64::consts::LN_2;

use crate::error::Result;
use crate::linalg::{self, CMatrix, HermitianPd};
use crate::model::SystemParams;
use crate::rates::{Cancellation, CovarianceSchedule, EstimateBundle, Period, PeriodCovs};

use super::{check_zeta, Problem};

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub g_s: [CMatrix; 2],
    pub g_r: [CMatrix; 2],
}

struct Inverses {
    s_r_inv: CMatrix,
    w_r: CMatrix,
    s_d_inv: CMatrix,
    w_d: CMatrix,
}

impl Inverses {
    fn new(covs: &PeriodCovs) -> Result<Self> {
        let s_r_inv = HermitianPd::new(&covs.s_r, "S_r")?.inverse();
        let sig_r_inv = HermitianPd::new(&covs.sigma_r, "Sigma_r")?.inverse();
        let s_d_inv = HermitianPd::new(&covs.s_d, "S_d")?.inverse();
        let sig_d_inv = HermitianPd::new(&covs.sigma_d, "Sigma_d")?.inverse();
        Ok(Self {
            w_r: &s_r_inv - sig_r_inv,
            s_r_inv,
            w_d: &s_d_inv - sig_d_inv,
            s_d_inv,
        })
    }
}

/// Gradient contribution of a receiver whose signal path runs through `h`
/// (scaled by `rho`) and whose distortion terms also scale with `rho`.
fn signal_terms(h: &CMatrix, s_inv: &CMatrix, w: &CMatrix, rho: f64, kappa: f64, beta: f64) -> CMatrix {
    let mut inner = s_inv.clone();
    inner += linalg::scale(&linalg::diag_part(w), beta);
    let mut g = linalg::adjoint_sandwich(h, &inner);
    g += linalg::scale(&linalg::diag_part(&linalg::adjoint_sandwich(h, w)), kappa);
    linalg::scale(&g, rho)
}

/// Gradient contribution of an interference path `h` with power `eta`;
/// `full` adds the uncancelled `η H Q Hᴴ` term.
fn interference_terms(h: &CMatrix, w: &CMatrix, eta: f64, kappa: f64, beta: f64, full: bool) -> CMatrix {
    let hwh = linalg::adjoint_sandwich(h, w);
    let mut g = linalg::scale(&linalg::diag_part(&hwh), kappa);
    g += linalg::scale(&linalg::adjoint_sandwich(h, &linalg::diag_part(w)), beta);
    if full {
        g += &hwh;
    }
    linalg::scale(&g, eta)
}

fn period_gradients(
    problem: &Problem,
    q_s: &CMatrix,
    q_r: &CMatrix,
    zeta: f64,
    tau_l: f64,
    want_s: bool,
    want_r: bool,
) -> Result<(CMatrix, CMatrix)> {
    let Problem { est, params, cancel, .. } = *problem;
    let n_s = est.sr.tx_dim();
    let n_r = est.rr.tx_dim();
    if tau_l == 0.0 {
        return Ok((CMatrix::zeros(n_s, n_s), CMatrix::zeros(n_r, n_r)));
    }
    let covs = PeriodCovs::new(est, params, q_s, q_r, cancel);
    let inv = Inverses::new(&covs)?;
    let (k, b) = (params.kappa, params.beta);
    let c = 2.0 * tau_l / LN_2;

    let g_r = if want_r {
        let mut g = linalg::scale(
            &signal_terms(&est.rd.h_hat, &inv.s_d_inv, &inv.w_d, params.rho_d, k, b),
            1.0 - zeta,
        );
        let full = cancel == Cancellation::Disabled;
        g += linalg::scale(&interference_terms(&est.rr.h_hat, &inv.w_r, params.eta_r, k, b, full), zeta);
        let id_coef = (1.0 - zeta) * linalg::trace_product_re(&est.rd.d_hat, &inv.w_d)
            + zeta * linalg::trace_product_re(&est.rr.d_hat, &inv.w_r);
        g += linalg::scaled_identity(n_r, id_coef);
        linalg::scale(&linalg::hermitian_part(&g), c)
    } else {
        CMatrix::zeros(n_r, n_r)
    };

    let g_s = if want_s {
        let mut g = linalg::scale(
            &signal_terms(&est.sr.h_hat, &inv.s_r_inv, &inv.w_r, params.rho_r, k, b),
            zeta,
        );
        g += linalg::scale(&interference_terms(&est.sd.h_hat, &inv.w_d, params.eta_d, k, b, true), 1.0 - zeta);
        let id_coef = zeta * linalg::trace_product_re(&est.sr.d_hat, &inv.w_r)
            + (1.0 - zeta) * linalg::trace_product_re(&est.sd.d_hat, &inv.w_d);
        g += linalg::scaled_identity(n_s, id_coef);
        linalg::scale(&linalg::hermitian_part(&g), c)
    } else {
        CMatrix::zeros(n_s, n_s)
    };
    Ok((g_s, g_r))
}

pub(crate) fn block_gradients(
    problem: &Problem,
    sched: &CovarianceSchedule,
    zeta: f64,
    want_s: bool,
    want_r: bool,
) -> Result<Gradients> {
    let w = sched.weights();
    let (gs0, gr0) = period_gradients(problem, &sched.q_s[0], &sched.q_r[0], zeta, w[0], want_s, want_r)?;
    let (gs1, gr1) = period_gradients(problem, &sched.q_s[1], &sched.q_r[1], zeta, w[1], want_s, want_r)?;
    Ok(Gradients {
        g_s: [gs0, gs1],
        g_r: [gr0, gr1],
    })
}

/// Both source and relay gradients for both periods.
pub fn gradients(problem: &Problem, sched: &CovarianceSchedule, zeta: f64) -> Result<Gradients> {
    problem.est.check_dims(problem.params)?;
    check_zeta(zeta)?;
    block_gradients(problem, sched, zeta, true, true)
}

pub fn gradient_relay(
    est: &EstimateBundle,
    sched: &CovarianceSchedule,
    params: &SystemParams,
    zeta: f64,
    l: Period,
    cancel: Cancellation,
) -> Result<CMatrix> {
    let problem = Problem::new(est, params).with_cancel(cancel);
    est.check_dims(params)?;
    check_zeta(zeta)?;
    let i = l.index();
    let (_, g) = period_gradients(&problem, &sched.q_s[i], &sched.q_r[i], zeta, sched.weight(l), false, true)?;
    Ok(g)
}

pub fn gradient_source(
    est: &EstimateBundle,
    sched: &CovarianceSchedule,
    params: &SystemParams,
    zeta: f64,
    l: Period,
    cancel: Cancellation,
) -> Result<CMatrix> {
    let problem = Problem::new(est, params).with_cancel(cancel);
    est.check_dims(params)?;
    check_zeta(zeta)?;
    let i = l.index();
    let (g, _) = period_gradients(&problem, &sched.q_s[i], &sched.q_r[i], zeta, sched.weight(l), true, false)?;
    Ok(g)
}
