//! Seeded, counter-based random streams.
//!
//! Each Monte-Carlo trial owns its own ChaCha stream selected by the trial
//! index, so results do not depend on how trials are scheduled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{CMatrix, C64};

pub type TrialRng = ChaCha8Rng;

/// Generator for substream `stream` of the experiment seeded by `seed`.
pub fn trial_rng(seed: u64, stream: u64) -> TrialRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One draw of `CN(0, var)`.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, var: f64) -> C64 {
    let s = (0.5 * var).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(s * re, s * im)
}

/// Matrix of i.i.d. `CN(0, var)` entries, filled column by column.
pub fn complex_normal_matrix<R: Rng + ?Sized>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    var: f64,
) -> CMatrix {
    let mut out = CMatrix::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            out[(i, j)] = complex_normal(rng, var);
        }
    }
    out
}

/// Matrix whose row `i` is i.i.d. `CN(0, row_var[i])` (spatially independent,
/// temporally white noise with per-antenna variances).
pub fn row_scaled_normal_matrix<R: Rng + ?Sized>(
    rng: &mut R,
    row_var: &[f64],
    cols: usize,
) -> CMatrix {
    let rows = row_var.len();
    let mut out = CMatrix::zeros(rows, cols);
    for j in 0..cols {
        for (i, &v) in row_var.iter().enumerate() {
            out[(i, j)] = complex_normal(rng, v);
        }
    }
    out
}
