//! Bisection on the link weight ζ.

use log::debug;

use crate::error::{Error, Result};
use crate::rates::{CovarianceSchedule, RateReport};

use super::gp::gp_optimize;
use super::{GpConfig, OptResult, Problem};

struct Candidate {
    sched: CovarianceSchedule,
    rate: RateReport,
    zeta: f64,
    converged: bool,
}

/// Searches for the ζ that equalizes the two τ-weighted link rates.
///
/// At each midpoint GP runs from every schedule in `inits` and keeps the run
/// with the larger min-rate. The returned schedule is the best min-rate seen
/// over all midpoints and the raw `inits` themselves.
pub fn bisect_zeta(problem: &Problem, tau: f64, inits: &[CovarianceSchedule], cfg: &GpConfig) -> Result<OptResult> {
    if inits.is_empty() {
        return Err(Error::InvalidInput("bisection needs at least one initial schedule".into()));
    }
    let mut iterations = 0;
    let mut best: Option<Candidate> = None;
    let offer = |c: Candidate, best: &mut Option<Candidate>| {
        if best.as_ref().is_none_or(|b| c.rate.i_end > b.rate.i_end) {
            *best = Some(c);
        }
    };

    for init in inits {
        let mut sched = init.clone();
        sched.tau = tau;
        let rate = problem.report(&sched)?;
        offer(
            Candidate {
                sched,
                rate,
                zeta: 0.5,
                converged: true,
            },
            &mut best,
        );
    }

    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut steps = 0;
    while steps < cfg.bisect_max_iters {
        steps += 1;
        let zeta = 0.5 * (lo + hi);
        let mut here: Option<Candidate> = None;
        for init in inits {
            let mut start = init.clone();
            start.tau = tau;
            let run = gp_optimize(problem, zeta, &start, cfg)?;
            iterations += run.iterations;
            let rate = problem.report(&run.sched)?;
            if here.as_ref().is_none_or(|h| rate.i_end > h.rate.i_end) {
                here = Some(Candidate {
                    sched: run.sched,
                    rate,
                    zeta,
                    converged: run.converged,
                });
            }
        }
        let here = here.expect("inits is non-empty");
        let diff = here.rate.sum_rd(tau) - here.rate.sum_sr(tau);
        debug!("bisect tau={tau} zeta={zeta} min={:.4} diff={diff:.4}", here.rate.i_end);
        offer(here, &mut best);
        if diff.abs() < cfg.bisect_tol {
            break;
        }
        if diff > 0.0 {
            lo = zeta;
        } else {
            hi = zeta;
        }
    }

    let best = best.expect("at least one candidate was offered");
    Ok(OptResult {
        sched: best.sched,
        zeta: best.zeta,
        rate: best.rate,
        tau_star: tau,
        iterations,
        bisection_steps: steps,
        zeta_interval: (lo, hi),
        converged: best.converged,
    })
}
