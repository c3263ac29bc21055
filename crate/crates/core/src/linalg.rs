//! Small dense complex linear-algebra helpers on top of `nalgebra`.
//!
//! Every matrix in this crate is a `DMatrix<Complex<f64>>`. Covariances are
//! kept Hermitian by symmetrizing after assembly, and log-determinants and
//! inverses of positive-definite matrices go through a Cholesky factor.

use nalgebra::{Cholesky, Complex, DMatrix, Dyn, SymmetricEigen};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

/// Tolerance used when deciding whether a matrix is PSD.
pub const PSD_TOL: f64 = 1e-10;

pub fn zeros(rows: usize, cols: usize) -> CMatrix {
    CMatrix::zeros(rows, cols)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn scaled_identity(n: usize, s: f64) -> CMatrix {
    CMatrix::from_diagonal_element(n, n, C64::new(s, 0.0))
}

pub fn scale(a: &CMatrix, s: f64) -> CMatrix {
    a.map(|z| z * s)
}

/// `(A + Aᴴ) / 2`
pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    let mut out = a + a.adjoint();
    out.iter_mut().for_each(|z| *z *= 0.5);
    out
}

/// Diagonal matrix holding the (real parts of the) diagonal of `a`.
pub fn diag_part(a: &CMatrix) -> CMatrix {
    let n = a.nrows().min(a.ncols());
    let mut out = zeros(a.nrows(), a.ncols());
    for i in 0..n {
        out[(i, i)] = C64::new(a[(i, i)].re, 0.0);
    }
    out
}

pub fn from_real_diag(d: &[f64]) -> CMatrix {
    let n = d.len();
    let mut out = zeros(n, n);
    for (i, &v) in d.iter().enumerate() {
        out[(i, i)] = C64::new(v, 0.0);
    }
    out
}

pub fn trace_re(a: &CMatrix) -> f64 {
    (0..a.nrows().min(a.ncols())).map(|i| a[(i, i)].re).sum()
}

/// `Re tr(A B)`; for Hermitian `A`, `B` this is the real inner product.
pub fn trace_product_re(a: &CMatrix, b: &CMatrix) -> f64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = 0.0;
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            let x = a[(i, k)] * b[(k, i)];
            acc += x.re;
        }
    }
    acc
}

/// `A · diag(Q) · Aᴴ`
pub fn sandwich_diag(a: &CMatrix, q: &CMatrix) -> CMatrix {
    let mut scaled = a.clone();
    for j in 0..a.ncols() {
        let w = q[(j, j)].re;
        scaled.column_mut(j).iter_mut().for_each(|z| *z *= w);
    }
    &scaled * a.adjoint()
}

/// `A · Q · Aᴴ`
pub fn sandwich(a: &CMatrix, q: &CMatrix) -> CMatrix {
    a * q * a.adjoint()
}

/// `Aᴴ · W · A`
pub fn adjoint_sandwich(a: &CMatrix, w: &CMatrix) -> CMatrix {
    a.adjoint() * w * a
}

pub fn max_abs_entry(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn is_square(a: &CMatrix) -> bool {
    a.nrows() == a.ncols()
}

/// Hermitian to a tolerance relative to the largest entry (absolute when the
/// matrix is tiny).
pub fn is_hermitian(a: &CMatrix, tol: f64) -> bool {
    if !is_square(a) {
        return false;
    }
    let scale = max_abs_entry(a).max(1.0);
    let n = a.nrows();
    for i in 0..n {
        for j in i..n {
            if (a[(i, j)] - a[(j, i)].conj()).norm() > tol * scale {
                return false;
            }
        }
    }
    true
}

/// Eigen-decomposition of a Hermitian matrix: real eigenvalues and unitary
/// eigenvectors (columns).
pub fn hermitian_eigen(a: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(hermitian_part(a));
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

pub fn min_eigenvalue(a: &CMatrix) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    hermitian_eigen(a).0.into_iter().fold(f64::INFINITY, f64::min)
}

/// Rebuilds `U · Diag(f(λ)) · Uᴴ`.
pub fn spectral_map(a: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let (vals, vecs) = hermitian_eigen(a);
    let mut scaled = vecs.clone();
    for (j, &v) in vals.iter().enumerate() {
        let w = f(v);
        scaled.column_mut(j).iter_mut().for_each(|z| *z *= w);
    }
    hermitian_part(&(&scaled * vecs.adjoint()))
}

/// Principal square root of a Hermitian PSD matrix (negative round-off
/// eigenvalues are clipped to zero).
pub fn psd_sqrt(a: &CMatrix) -> CMatrix {
    spectral_map(a, |v| v.max(0.0).sqrt())
}

/// Checks that `a` is square, Hermitian and PSD within [`PSD_TOL`].
pub fn check_psd(a: &CMatrix, what: &str) -> Result<()> {
    if !is_square(a) {
        return Err(Error::DimensionMismatch(format!(
            "{what} must be square, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if !is_hermitian(a, 1e-9) {
        return Err(Error::InvalidInput(format!("{what} is not Hermitian")));
    }
    let scale = max_abs_entry(a).max(1.0);
    let lam = min_eigenvalue(a);
    if lam < -PSD_TOL * scale {
        return Err(Error::InvalidInput(format!(
            "{what} is indefinite (min eigenvalue {lam:e})"
        )));
    }
    Ok(())
}

/// Cholesky factor of a Hermitian positive-definite matrix.
pub struct HermitianPd {
    chol: Cholesky<C64, Dyn>,
}

impl HermitianPd {
    pub fn new(a: &CMatrix, what: &'static str) -> Result<Self> {
        a.clone()
            .cholesky()
            .map(|chol| Self { chol })
            .ok_or(Error::NotPositiveDefinite(what))
    }

    /// Natural log of the determinant.
    pub fn ln_det(&self) -> f64 {
        let l = self.chol.l_dirty();
        (0..l.nrows()).map(|i| l[(i, i)].re.ln()).sum::<f64>() * 2.0
    }

    pub fn log2_det(&self) -> f64 {
        self.ln_det() / std::f64::consts::LN_2
    }

    pub fn inverse(&self) -> CMatrix {
        hermitian_part(&self.chol.inverse())
    }

    pub fn solve(&self, b: &CMatrix) -> CMatrix {
        self.chol.solve(b)
    }
}

/// `log2 det(A)` for Hermitian positive-definite `A`.
pub fn log2_det_pd(a: &CMatrix, what: &'static str) -> Result<f64> {
    Ok(HermitianPd::new(a, what)?.log2_det())
}
