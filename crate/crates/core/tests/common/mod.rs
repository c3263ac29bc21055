//! Shared oracles for the integration tests.
#![allow(dead_code)]

use fdrelay::linalg::{self, CMatrix, C64};
use fdrelay::model::SystemParams;
use fdrelay::optimizer::Problem;
use fdrelay::rates::{CovarianceSchedule, EstimateBundle};
use fdrelay::rng::{complex_normal_matrix, TrialRng};

/// Random PSD matrix with trace `tr`.
pub fn random_psd(rng: &mut TrialRng, n: usize, tr: f64) -> CMatrix {
    let a = complex_normal_matrix(rng, n, n, 1.0);
    let mut q = &a * a.adjoint() + linalg::scaled_identity(n, 0.1);
    q = linalg::hermitian_part(&q);
    let t = linalg::trace_re(&q);
    linalg::scale(&q, tr / t)
}

/// Strictly feasible schedule with full-rank covariances.
pub fn random_schedule(rng: &mut TrialRng, n_s: usize, n_r: usize, tau: f64) -> CovarianceSchedule {
    // each period gets trace 0.9, so the weighted budget is 0.9
    CovarianceSchedule {
        q_s: [random_psd(rng, n_s, 0.9), random_psd(rng, n_s, 0.9)],
        q_r: [random_psd(rng, n_r, 0.9), random_psd(rng, n_r, 0.9)],
        tau,
    }
}

fn unit(n: usize, p: usize, q: usize, v: C64) -> CMatrix {
    let mut e = CMatrix::zeros(n, n);
    e[(p, q)] += v;
    if p != q {
        e[(q, p)] += v.conj();
    }
    e
}

/// Central-difference reconstruction of the complex gradient of the weighted
/// sum-rate w.r.t. `Q_s[l]` (`source = true`) or `Q_r[l]`, in the convention
/// `df = ½ Re tr(G Δ)`.
pub fn fd_gradient(
    problem: &Problem,
    sched: &CovarianceSchedule,
    zeta: f64,
    source: bool,
    l: usize,
    h: f64,
) -> CMatrix {
    let n = if source { sched.q_s[l].nrows() } else { sched.q_r[l].nrows() };
    let deriv = |dir: &CMatrix| -> f64 {
        let mut plus = sched.clone();
        let mut minus = sched.clone();
        let (a, b) = if source {
            (&mut plus.q_s[l], &mut minus.q_s[l])
        } else {
            (&mut plus.q_r[l], &mut minus.q_r[l])
        };
        *a += linalg::scale(dir, h);
        *b -= linalg::scale(dir, h);
        (problem.weighted(&plus, zeta).unwrap() - problem.weighted(&minus, zeta).unwrap()) / (2.0 * h)
    };
    let mut g = CMatrix::zeros(n, n);
    for p in 0..n {
        g[(p, p)] = C64::new(2.0 * deriv(&unit(n, p, p, C64::new(1.0, 0.0))), 0.0);
        for q in p + 1..n {
            let re = deriv(&unit(n, p, q, C64::new(1.0, 0.0)));
            let im = deriv(&unit(n, p, q, C64::new(0.0, 1.0)));
            g[(p, q)] = C64::new(re, im);
            g[(q, p)] = C64::new(re, -im);
        }
    }
    g
}

/// Relative error of `g` against the oracle, scaled by the oracle's largest entry.
pub fn rel_err(g: &CMatrix, oracle: &CMatrix) -> f64 {
    linalg::max_abs_diff(g, oracle) / linalg::max_abs_entry(oracle).max(1e-300)
}

/// Capacity of `y = √ρ H x + n` under `tr Q ≤ p` by water-filling on the
/// squared singular values.
pub fn waterfill_capacity(h: &CMatrix, rho: f64, p: f64) -> f64 {
    let (vals, _) = linalg::hermitian_eigen(&(h.adjoint() * h));
    let mut g: Vec<f64> = vals.into_iter().map(|v| v * rho).filter(|v| *v > 1e-12).collect();
    g.sort_by(|a, b| b.total_cmp(a));
    for k in (1..=g.len()).rev() {
        let level = (p + g[..k].iter().map(|x| 1.0 / x).sum::<f64>()) / k as f64;
        if level > 1.0 / g[k - 1] {
            return g[..k].iter().map(|x| (level * x).log2()).sum();
        }
    }
    0.0
}

pub fn default_params() -> SystemParams {
    SystemParams::default()
}

pub fn bundle(params: &SystemParams, seed: u64) -> EstimateBundle {
    let ch = fdrelay::model::draw_channels(params, seed);
    EstimateBundle::from_training(&ch, params, &mut fdrelay::rng::trial_rng(seed, 1)).unwrap()
}

fn cn_vec(rng: &mut TrialRng, n: usize) -> CMatrix {
    complex_normal_matrix(rng, n, 1, 1.0)
}

/// `CN(0, diag(var))` column.
fn cn_diag(rng: &mut TrialRng, var: &[f64]) -> CMatrix {
    let mut v = cn_vec(rng, var.len());
    for (z, s) in v.iter_mut().zip(var) {
        *z *= s.sqrt();
    }
    v
}

fn diag_re(a: &CMatrix) -> Vec<f64> {
    (0..a.nrows()).map(|i| a[(i, i)].re).collect()
}

/// Signal `x ~ CN(0, Q)`, its transmitter noise `c ~ CN(0, κ diag Q)`, and
/// the covariance `Q + κ diag Q` of their sum.
struct Tx {
    q_half: CMatrix,
    c_var: Vec<f64>,
    total: CMatrix,
}

impl Tx {
    fn new(q: &CMatrix, kappa: f64) -> Self {
        let c_var: Vec<f64> = diag_re(q).iter().map(|v| kappa * v).collect();
        Self {
            q_half: linalg::psd_sqrt(q),
            total: q + linalg::from_real_diag(&c_var),
            c_var,
        }
    }

    fn draw(&self, rng: &mut TrialRng) -> (CMatrix, CMatrix) {
        let x = &self.q_half * cn_vec(rng, self.q_half.nrows());
        let c = cn_diag(rng, &self.c_var);
        (x, c)
    }
}

/// Sample covariance of the aggregate relay noise `v_r(t)`, generated term by
/// term from its definition with the true channels drawn around the
/// estimates: `√α H = √α Ĥ − D̂^{1/2} H̃`.
pub fn sample_relay_noise(
    est: &EstimateBundle,
    params: &SystemParams,
    q_s: &CMatrix,
    q_r: &CMatrix,
    cancel: fdrelay::rates::Cancellation,
    draws: usize,
    seed: u64,
) -> CMatrix {
    let mut rng = fdrelay::rng::trial_rng(seed, 0);
    let m = est.sr.h_hat.nrows();
    let (rho, eta) = (params.rho_r.sqrt(), params.eta_r.sqrt());
    let d_sr = linalg::psd_sqrt(&est.sr.d_hat);
    let d_rr = linalg::psd_sqrt(&est.rr.d_hat);
    let (ts, tr) = (Tx::new(q_s, params.kappa), Tx::new(q_r, params.kappa));
    let mut acc = CMatrix::zeros(m, m);
    for _ in 0..draws {
        let e_sr = &d_sr * complex_normal_matrix(&mut rng, m, q_s.nrows(), 1.0);
        let e_rr = &d_rr * complex_normal_matrix(&mut rng, m, q_r.nrows(), 1.0);
        let (x_s, c_s) = ts.draw(&mut rng);
        let (x_r, c_r) = tr.draw(&mut rng);
        let a_sr = linalg::scale(&est.sr.h_hat, rho) - &e_sr;
        let a_rr = linalg::scale(&est.rr.h_hat, eta) - &e_rr;
        let phi = linalg::sandwich(&a_sr, &ts.total) + linalg::sandwich(&a_rr, &tr.total) + linalg::identity(m);
        let e_var: Vec<f64> = diag_re(&phi).iter().map(|v| params.beta * v).collect();
        let mut v = linalg::scale(&(&est.sr.h_hat * &c_s), rho) - &e_sr * (&x_s + &c_s)
            + cn_vec(&mut rng, m)
            + cn_diag(&mut rng, &e_var)
            + linalg::scale(&(&est.rr.h_hat * &c_r), eta)
            - &e_rr * (&x_r + &c_r);
        if cancel == fdrelay::rates::Cancellation::Disabled {
            v += linalg::scale(&(&est.rr.h_hat * &x_r), eta);
        }
        acc += &v * v.adjoint();
    }
    linalg::scale(&acc, 1.0 / draws as f64)
}

/// Sample covariance of the aggregate destination noise `v_d(t)`, generated
/// the same way as [`sample_relay_noise`].
pub fn sample_dest_noise(
    est: &EstimateBundle,
    params: &SystemParams,
    q_s: &CMatrix,
    q_r: &CMatrix,
    draws: usize,
    seed: u64,
) -> CMatrix {
    let mut rng = fdrelay::rng::trial_rng(seed, 0);
    let m = est.rd.h_hat.nrows();
    let (rho, eta) = (params.rho_d.sqrt(), params.eta_d.sqrt());
    let d_rd = linalg::psd_sqrt(&est.rd.d_hat);
    let d_sd = linalg::psd_sqrt(&est.sd.d_hat);
    let (ts, tr) = (Tx::new(q_s, params.kappa), Tx::new(q_r, params.kappa));
    let mut acc = CMatrix::zeros(m, m);
    for _ in 0..draws {
        let e_rd = &d_rd * complex_normal_matrix(&mut rng, m, q_r.nrows(), 1.0);
        let e_sd = &d_sd * complex_normal_matrix(&mut rng, m, q_s.nrows(), 1.0);
        let (x_s, c_s) = ts.draw(&mut rng);
        let (x_r, c_r) = tr.draw(&mut rng);
        let a_rd = linalg::scale(&est.rd.h_hat, rho) - &e_rd;
        let a_sd = linalg::scale(&est.sd.h_hat, eta) - &e_sd;
        let phi = linalg::sandwich(&a_rd, &tr.total) + linalg::sandwich(&a_sd, &ts.total) + linalg::identity(m);
        let e_var: Vec<f64> = diag_re(&phi).iter().map(|v| params.beta * v).collect();
        let s = &x_s + &c_s;
        let v = &a_rd * &c_r - &e_rd * &x_r
            + cn_vec(&mut rng, m)
            + cn_diag(&mut rng, &e_var)
            + linalg::scale(&(&est.sd.h_hat * &s), eta)
            - &e_sd * &s;
        acc += &v * v.adjoint();
    }
    linalg::scale(&acc, 1.0 / draws as f64)
}

/// Operating point for the noise-covariance oracles: moderate SNR and INR,
/// κ = β = 0.01 and short training so every term is visible.
pub fn noise_case(n: usize, m: usize, seed: u64) -> (SystemParams, EstimateBundle, CMatrix, CMatrix) {
    let params = SystemParams {
        rho_r: 10.0,
        rho_d: 5.0,
        eta_r: 10.0,
        eta_d: 2.0,
        kappa: 0.01,
        beta: 0.01,
        train_len: 2,
        ..SystemParams::default().with_antennas(n, m)
    };
    let est = bundle(&params, seed);
    let mut rng = fdrelay::rng::trial_rng(seed, 2);
    let q_s = random_psd(&mut rng, n, 1.0);
    let q_r = random_psd(&mut rng, n, 1.0);
    (params, est, q_s, q_r)
}

/// Largest relative error over the diagonal.
pub fn diag_rel_err(emp: &CMatrix, want: &CMatrix) -> f64 {
    (0..want.nrows())
        .map(|i| (emp[(i, i)].re / want[(i, i)].re - 1.0).abs())
        .fold(0.0, f64::max)
}

/// Water-filling covariance achieving [`waterfill_capacity`].
pub fn waterfill_covariance(h: &CMatrix, rho: f64, p: f64) -> CMatrix {
    let (vals, vecs) = linalg::hermitian_eigen(&(h.adjoint() * h));
    let g: Vec<f64> = vals.iter().map(|v| v * rho).collect();
    let mut order: Vec<usize> = (0..g.len()).filter(|&i| g[i] > 1e-12).collect();
    order.sort_by(|&a, &b| g[b].total_cmp(&g[a]));
    let mut powers = vec![0.0; g.len()];
    for k in (1..=order.len()).rev() {
        let level = (p + order[..k].iter().map(|&i| 1.0 / g[i]).sum::<f64>()) / k as f64;
        if level > 1.0 / g[order[k - 1]] {
            for &i in &order[..k] {
                powers[i] = level - 1.0 / g[i];
            }
            break;
        }
    }
    &vecs * linalg::from_real_diag(&powers) * vecs.adjoint()
}

/// κ = β = 0, no interference, perfect CSI.
pub fn ideal_params() -> SystemParams {
    SystemParams {
        eta_r: 0.0,
        eta_d: 0.0,
        kappa: 0.0,
        beta: 0.0,
        ..SystemParams::default()
    }
}

/// Largest relative error between analytic and central-difference gradients
/// over both blocks and periods, for one random schedule on `seed`'s draw.
pub fn gradient_max_err(params: &SystemParams, cancel: fdrelay::rates::Cancellation, seed: u64) -> f64 {
    let est = bundle(params, seed);
    let problem = Problem::new(&est, params).with_cancel(cancel);
    let mut rng = fdrelay::rng::trial_rng(seed, 99);
    let tau = 0.2 + 0.6 * (seed % 7) as f64 / 6.0;
    let sched = random_schedule(&mut rng, params.n_s, params.n_r, tau);
    let zeta = 0.1 + 0.8 * (seed % 5) as f64 / 4.0;
    let g = fdrelay::optimizer::gradients(&problem, &sched, zeta).unwrap();
    let mut worst = 0.0f64;
    for l in 0..2 {
        worst = worst.max(rel_err(&g.g_s[l], &fd_gradient(&problem, &sched, zeta, true, l, 1e-6)));
        worst = worst.max(rel_err(&g.g_r[l], &fd_gradient(&problem, &sched, zeta, false, l, 1e-6)));
    }
    worst
}

/// Sample covariance of `√α(Ĥ − H)`, pooled over columns, after `draws`
/// simulated trainings of the fixed channel `h`. Also returns the sample
/// cross-covariance of columns 0 and 1 (zero when `h` has one column) and the
/// number of pooled columns.
pub fn sample_ls_error(
    h: &CMatrix,
    alpha: f64,
    imp: fdrelay::model::Impairments,
    t: usize,
    draws: usize,
    seed: u64,
) -> (CMatrix, CMatrix, usize) {
    use fdrelay::model::{build_pilot, ls_estimate, simulate_training};
    let n = h.ncols();
    let pilot = build_pilot(n, t).unwrap();
    let m = h.nrows();
    let mut rng = fdrelay::rng::trial_rng(seed, 0);
    let mut cov = CMatrix::zeros(m, m);
    let mut cross = CMatrix::zeros(m, m);
    for _ in 0..draws {
        let y = simulate_training(h, alpha, &pilot, imp, &mut rng).unwrap();
        let h_hat = ls_estimate(&y, &pilot, alpha).unwrap();
        let e = linalg::scale(&(h_hat - h), alpha.sqrt());
        cov += &e * e.adjoint();
        if n > 1 {
            cross += e.column(0) * e.column(1).adjoint();
        }
    }
    let samples = draws * n;
    (
        linalg::scale(&cov, 1.0 / samples as f64),
        linalg::scale(&cross, 1.0 / draws as f64),
        samples,
    )
}
