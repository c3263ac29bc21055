//! Block gradient projection with Armijo backtracking.

use log::trace;

use crate::error::Result;
use crate::linalg::{self, CMatrix};
use crate::rates::CovarianceSchedule;

use super::gradient::block_gradients;
use super::projection::project_constraint;
use super::{check_zeta, GpConfig, Problem, Structure};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    Relay,
    Source,
}

/// One block update, accepted or not.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub outer: usize,
    pub block: Block,
    pub objective_before: f64,
    pub objective_after: f64,
    /// Accepted stepsize `γ = ν^m`; zero when the block did not move.
    pub gamma: f64,
    /// `Σ_l Re tr(G[l] (Q̃[l] − Q[l]))`
    pub directional: f64,
    pub backtracks: usize,
    /// τ-weighted trace of the projected point minus one.
    pub budget_residual: f64,
}

impl StepRecord {
    pub fn accepted(&self) -> bool {
        self.gamma > 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GpRun {
    pub sched: CovarianceSchedule,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Filled only when [`GpConfig::record_steps`] is set.
    pub steps: Vec<StepRecord>,
}

/// Maximizes the ζ-weighted sum-rate from `init`, alternating a relay block
/// and a source block per outer iteration.
///
/// Stops when one outer iteration moves no covariance entry by more than
/// `eps_stop`, or after `max_outer_iters` (then `converged` is false).
pub fn gp_optimize(problem: &Problem, zeta: f64, init: &CovarianceSchedule, cfg: &GpConfig) -> Result<GpRun> {
    problem.est.check_dims(problem.params)?;
    check_zeta(zeta)?;
    let mut sched = init.clone();
    enforce_structure(&mut sched, problem.structure);
    let mut f = problem.weighted(&sched, zeta)?;
    let mut steps = Vec::new();

    for outer in 1..=cfg.max_outer_iters {
        let start = sched.clone();
        for block in [Block::Relay, Block::Source] {
            let rec = block_step(problem, zeta, &mut sched, &mut f, block, cfg, outer)?;
            trace!(
                "gp outer={outer} {:?} f={:.6} gamma={} dir={:e}",
                rec.block,
                rec.objective_after,
                rec.gamma,
                rec.directional
            );
            if cfg.record_steps {
                steps.push(rec);
            }
        }
        if sched.max_abs_diff(&start) < cfg.eps_stop {
            return Ok(GpRun {
                sched,
                objective: f,
                iterations: outer,
                converged: true,
                steps,
            });
        }
    }
    Ok(GpRun {
        sched,
        objective: f,
        iterations: cfg.max_outer_iters,
        converged: false,
        steps,
    })
}

fn enforce_structure(sched: &mut CovarianceSchedule, structure: Structure) {
    match structure {
        Structure::Free => {}
        Structure::Tied => {
            sched.q_s[1] = sched.q_s[0].clone();
            sched.q_r[1] = sched.q_r[0].clone();
        }
        Structure::HalfDuplex => {
            sched.q_s[1].fill(Default::default());
            sched.q_r[0].fill(Default::default());
        }
    }
}

fn block_step(
    problem: &Problem,
    zeta: f64,
    sched: &mut CovarianceSchedule,
    f: &mut f64,
    block: Block,
    cfg: &GpConfig,
    outer: usize,
) -> Result<StepRecord> {
    let is_relay = block == Block::Relay;
    let grads = block_gradients(problem, sched, zeta, !is_relay, is_relay)?;
    let (g, q, mask) = if is_relay {
        (grads.g_r, &sched.q_r, [problem.structure == Structure::HalfDuplex, false])
    } else {
        (grads.g_s, &sched.q_s, [false, problem.structure == Structure::HalfDuplex])
    };

    let ascent: [CMatrix; 2] = match problem.structure {
        Structure::Tied => {
            let sum = &g[0] + &g[1];
            [sum.clone(), sum]
        }
        _ => g.clone(),
    };
    let p: Vec<CMatrix> = (0..2)
        .map(|l| {
            if mask[l] {
                CMatrix::zeros(q[l].nrows(), q[l].ncols())
            } else {
                &q[l] + linalg::scale(&ascent[l], cfg.s_step)
            }
        })
        .collect();
    let proj = project_constraint(&p[0], &p[1], sched.tau)?;
    let delta = [&proj.q[0] - &q[0], &proj.q[1] - &q[1]];
    let directional = linalg::trace_product_re(&g[0], &delta[0]) + linalg::trace_product_re(&g[1], &delta[1]);
    let w = sched.weights();
    let budget_residual = w[0] * linalg::trace_re(&proj.q[0]) + w[1] * linalg::trace_re(&proj.q[1]) - 1.0;

    let mut rec = StepRecord {
        outer,
        block,
        objective_before: *f,
        objective_after: *f,
        gamma: 0.0,
        directional,
        backtracks: 0,
        budget_residual,
    };
    if !(directional > 0.0) {
        return Ok(rec);
    }

    let mut gamma = 1.0;
    for m in 0..=cfg.max_backtracks {
        let mut cand = sched.clone();
        let slot = if is_relay { &mut cand.q_r } else { &mut cand.q_s };
        for l in 0..2 {
            slot[l] = linalg::hermitian_part(&(&slot[l] + linalg::scale(&delta[l], gamma)));
        }
        let f_new = problem.weighted(&cand, zeta)?;
        if f_new - *f >= cfg.sigma * gamma * directional {
            debug_assert!(f_new >= *f);
            *sched = cand;
            *f = f_new;
            rec.objective_after = f_new;
            rec.gamma = gamma;
            rec.backtracks = m;
            return Ok(rec);
        }
        gamma *= cfg.nu;
    }
    rec.backtracks = cfg.max_backtracks;
    Ok(rec)
}
