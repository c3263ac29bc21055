//! System model: Rayleigh channels, limited transmitter/receiver dynamic
//! range, pilot training and least-squares channel estimation.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64};
use crate::rng::{self, complex_normal_matrix, row_scaled_normal_matrix};

/// Scenario scalars. All power ratios are linear.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// SNR at the relay.
    pub rho_r: f64,
    /// SNR at the destination.
    pub rho_d: f64,
    /// INR at the relay (self-interference).
    pub eta_r: f64,
    /// INR at the destination (source-to-destination leakage).
    pub eta_d: f64,
    /// Transmitter-noise fraction.
    pub kappa: f64,
    /// Receiver-distortion fraction.
    pub beta: f64,
    pub n_s: usize,
    pub n_r: usize,
    pub m_r: usize,
    pub m_d: usize,
    /// Pilot repetitions `T` per training period.
    pub train_len: usize,
}

impl Default for SystemParams {
    /// `N = 3`, `M = 4`, ρ_r = 15 dB, ρ_r/ρ_d = 2, η_r = 40 dB, η_d = 0 dB,
    /// κ = β = −40 dB, `T = 50`.
    fn default() -> Self {
        let rho_r = 10f64.powf(1.5);
        Self {
            rho_r,
            rho_d: rho_r / 2.0,
            eta_r: 1e4,
            eta_d: 1.0,
            kappa: 1e-4,
            beta: 1e-4,
            n_s: 3,
            n_r: 3,
            m_r: 4,
            m_d: 4,
            train_len: 50,
        }
    }
}

impl SystemParams {
    /// Same transmit count `n` at source and relay, same receive count `m` at
    /// relay and destination.
    pub fn with_antennas(mut self, n: usize, m: usize) -> Self {
        self.n_s = n;
        self.n_r = n;
        self.m_r = m;
        self.m_d = m;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let powers = [
            ("rho_r", self.rho_r),
            ("rho_d", self.rho_d),
            ("eta_r", self.eta_r),
            ("eta_d", self.eta_d),
        ];
        for (name, v) in powers {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidInput(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        for (name, v) in [("kappa", self.kappa), ("beta", self.beta)] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::InvalidInput(format!("{name} must lie in [0, 1), got {v}")));
            }
        }
        for (name, v) in [
            ("n_s", self.n_s),
            ("n_r", self.n_r),
            ("m_r", self.m_r),
            ("m_d", self.m_d),
            ("train_len", self.train_len),
        ] {
            if v == 0 {
                return Err(Error::InvalidInput(format!("{name} must be >= 1")));
            }
        }
        Ok(())
    }

    pub fn impairments(&self) -> Impairments {
        Impairments::new(self.kappa, self.beta)
    }
}

/// True propagation matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// `m_r × n_s`
    pub h_sr: CMatrix,
    /// `m_r × n_r`
    pub h_rr: CMatrix,
    /// `m_d × n_r`
    pub h_rd: CMatrix,
    /// `m_d × n_s`
    pub h_sd: CMatrix,
}

pub fn draw_channels(params: &SystemParams, seed: u64) -> ChannelSet {
    draw_channels_with(params, &mut rng::trial_rng(seed, 0))
}

/// Draws the four channels, in the order sr, rr, rd, sd, with i.i.d.
/// `CN(0, 1)` entries.
pub fn draw_channels_with<R: Rng + ?Sized>(params: &SystemParams, rng: &mut R) -> ChannelSet {
    let h_sr = complex_normal_matrix(rng, params.m_r, params.n_s, 1.0);
    let h_rr = complex_normal_matrix(rng, params.m_r, params.n_r, 1.0);
    let h_rd = complex_normal_matrix(rng, params.m_d, params.n_r, 1.0);
    let h_sd = complex_normal_matrix(rng, params.m_d, params.n_s, 1.0);
    ChannelSet { h_sr, h_rr, h_rd, h_sd }
}

/// `κ · diag(Q)`, the covariance of the transmitter noise added to an
/// intended signal with covariance `q`.
pub fn transmitter_noise_cov(q: &CMatrix, kappa: f64) -> Result<CMatrix> {
    linalg::check_psd(q, "transmit covariance")?;
    Ok(linalg::scale(&linalg::diag_part(q), kappa))
}

/// `β · diag(Φ)`, the covariance of the receiver distortion added to an
/// undistorted received vector with covariance `phi`.
pub fn receiver_distortion_cov(phi: &CMatrix, beta: f64) -> Result<CMatrix> {
    linalg::check_psd(phi, "received covariance")?;
    Ok(linalg::scale(&linalg::diag_part(phi), beta))
}

/// Dynamic-range parameters plus a switch for the thermal noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Impairments {
    pub kappa: f64,
    pub beta: f64,
    pub thermal_noise: bool,
}

impl Impairments {
    pub fn new(kappa: f64, beta: f64) -> Self {
        Self {
            kappa,
            beta,
            thermal_noise: true,
        }
    }

    /// No transmitter noise, no receiver distortion, no AWGN.
    pub fn noiseless() -> Self {
        Self {
            kappa: 0.0,
            beta: 0.0,
            thermal_noise: false,
        }
    }
}

/// `N × TN` pilot block with `(1/2T) X Xᴴ = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotMatrix {
    pub x: CMatrix,
    n: usize,
    t: usize,
}

impl PilotMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// Per-antenna intended covariance over the block, `X Xᴴ / (TN)`.
    pub fn spatial_cov(&self) -> CMatrix {
        linalg::scale(&(&self.x * self.x.adjoint()), 1.0 / (self.t * self.n) as f64)
    }
}

/// Rows of the `n`-point unitary DFT scaled by √2 and tiled `t` times.
pub fn build_pilot(n: usize, t: usize) -> Result<PilotMatrix> {
    if n == 0 || t == 0 {
        return Err(Error::InvalidInput(format!("pilot needs n >= 1 and t >= 1, got n={n}, t={t}")));
    }
    let amp = (2.0 / n as f64).sqrt();
    let mut x = CMatrix::zeros(n, n * t);
    for rep in 0..t {
        for j in 0..n {
            for k in 0..n {
                let phase = -2.0 * PI * ((j * k) % n) as f64 / n as f64;
                x[(j, rep * n + k)] = C64::from_polar(amp, phase);
            }
        }
    }
    Ok(PilotMatrix { x, n, t })
}

/// One noisy training observation `Y = √α H (X + C) + N + E`.
///
/// `C` has per-antenna variance `κ · diag(XXᴴ/TN)`; `E` has per-antenna
/// variance `β · diag(Φ)` with `Φ` the `H`-conditional covariance of the
/// undistorted receive signal. All three terms are temporally white.
pub fn simulate_training<R: Rng + ?Sized>(
    h: &CMatrix,
    alpha: f64,
    pilot: &PilotMatrix,
    imp: Impairments,
    rng: &mut R,
) -> Result<CMatrix> {
    if h.ncols() != pilot.n() {
        return Err(Error::DimensionMismatch(format!(
            "channel has {} columns but the pilot has {} rows",
            h.ncols(),
            pilot.n()
        )));
    }
    let m = h.nrows();
    let cols = pilot.x.ncols();
    let sqrt_alpha = alpha.sqrt();
    let q = pilot.spatial_cov();

    let tx_var: Vec<f64> = (0..pilot.n()).map(|i| imp.kappa * q[(i, i)].re).collect();
    let c = row_scaled_normal_matrix(rng, &tx_var, cols);
    let n_awgn = if imp.thermal_noise {
        complex_normal_matrix(rng, m, cols, 1.0)
    } else {
        CMatrix::zeros(m, cols)
    };

    // Φ = α H (Q + κ diag Q) Hᴴ + I
    let mut tx_cov = q.clone();
    for (i, v) in tx_var.iter().enumerate() {
        tx_cov[(i, i)] += C64::new(*v, 0.0);
    }
    let mut phi = linalg::scale(&linalg::sandwich(h, &tx_cov), alpha);
    if imp.thermal_noise {
        phi += linalg::identity(m);
    }
    let rx_var: Vec<f64> = (0..m).map(|i| imp.beta * phi[(i, i)].re).collect();
    let e = row_scaled_normal_matrix(rng, &rx_var, cols);

    let mut y = h * (&pilot.x + c);
    y.iter_mut().for_each(|z| *z *= sqrt_alpha);
    Ok(y + n_awgn + e)
}

/// Least-squares estimate `Ĥ` with `√α Ĥ = (1/2T) Y Xᴴ`.
pub fn ls_estimate(y: &CMatrix, pilot: &PilotMatrix, alpha: f64) -> Result<CMatrix> {
    if y.ncols() != pilot.x.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "observation has {} columns, pilot block has {}",
            y.ncols(),
            pilot.x.ncols()
        )));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidInput(format!("LS estimation needs alpha > 0, got {alpha}")));
    }
    let scale = 1.0 / (2.0 * pilot.t() as f64 * alpha.sqrt());
    Ok(linalg::scale(&(y * pilot.x.adjoint()), scale))
}

/// Which closed form of the estimation-error covariance to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCovForm {
    /// Keeps the `β(1 + κ)` and `(1 + β)` factors.
    Exact,
    /// First order in κ and β.
    Approximate,
}

/// `H`-conditional spatial covariance `D` of the LS error `√α(Ĥ − H)`.
pub fn estimation_error_cov(
    h: &CMatrix,
    alpha: f64,
    kappa: f64,
    beta: f64,
    n: usize,
    t: usize,
    form: ErrorCovForm,
) -> CMatrix {
    let (id_coef, diag_coef) = match form {
        ErrorCovForm::Exact => (1.0 + beta, 1.0 + kappa),
        ErrorCovForm::Approximate => (1.0, 1.0),
    };
    error_cov(h, alpha, kappa, beta * diag_coef, n, t, id_coef)
}

/// `Ĥ`-conditional error covariance `D̂` used by the rate expressions.
pub fn conditional_error_cov(h_hat: &CMatrix, alpha: f64, kappa: f64, beta: f64, n: usize, t: usize) -> CMatrix {
    error_cov(h_hat, alpha, kappa, beta, n, t, 1.0)
}

fn error_cov(h: &CMatrix, alpha: f64, kappa: f64, beta_eff: f64, n: usize, t: usize, id_coef: f64) -> CMatrix {
    let m = h.nrows();
    let gram = h * h.adjoint();
    let nf = n as f64;
    let mut d = linalg::scaled_identity(m, id_coef);
    d += linalg::scale(&gram, alpha * 2.0 * kappa / nf);
    d += linalg::scale(&linalg::diag_part(&gram), alpha * 2.0 * beta_eff / nf);
    linalg::scale(&linalg::hermitian_part(&d), 1.0 / (2.0 * t as f64))
}

/// Estimated channel together with its conditional error covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkEstimate {
    pub h_hat: CMatrix,
    pub d_hat: CMatrix,
    /// The link's power ratio α.
    pub alpha: f64,
}

impl LinkEstimate {
    /// Trains the link once and estimates it.
    ///
    /// A link with `α = 0` carries no signal; its estimate is the zero matrix
    /// with zero error covariance.
    pub fn from_training<R: Rng + ?Sized>(
        h: &CMatrix,
        alpha: f64,
        pilot: &PilotMatrix,
        imp: Impairments,
        rng: &mut R,
    ) -> Result<Self> {
        let y = simulate_training(h, alpha, pilot, imp, rng)?;
        if alpha == 0.0 {
            return Ok(Self {
                h_hat: CMatrix::zeros(h.nrows(), h.ncols()),
                d_hat: CMatrix::zeros(h.nrows(), h.nrows()),
                alpha,
            });
        }
        let h_hat = ls_estimate(&y, pilot, alpha)?;
        let d_hat = conditional_error_cov(&h_hat, alpha, imp.kappa, imp.beta, pilot.n(), pilot.t());
        Ok(Self { h_hat, d_hat, alpha })
    }

    /// Perfect channel knowledge.
    pub fn perfect(h: &CMatrix, alpha: f64) -> Self {
        Self {
            h_hat: h.clone(),
            d_hat: CMatrix::zeros(h.nrows(), h.nrows()),
            alpha,
        }
    }

    pub fn without_error(&self) -> Self {
        Self {
            h_hat: self.h_hat.clone(),
            d_hat: CMatrix::zeros(self.d_hat.nrows(), self.d_hat.ncols()),
            alpha: self.alpha,
        }
    }

    pub fn rx_dim(&self) -> usize {
        self.h_hat.nrows()
    }

    pub fn tx_dim(&self) -> usize {
        self.h_hat.ncols()
    }
}
