//! Projection onto the τ-weighted trace budget: eigenvalue clipping with a
//! water level shared by the two periods.

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub q: [CMatrix; 2],
    /// Water level; zero when the budget is not active.
    pub mu: f64,
}

/// Smallest `μ ≥ 0` with `Σ w·max(λ − μ, 0) ≤ 1` over the weighted
/// eigenvalues `(w, λ)`. Solved exactly on the sorted breakpoints.
pub fn water_level(weighted: &[(f64, f64)]) -> f64 {
    let mut pos: Vec<(f64, f64)> = weighted.iter().copied().filter(|&(w, l)| w > 0.0 && l > 0.0).collect();
    let total: f64 = pos.iter().map(|&(w, l)| w * l).sum();
    if total <= 1.0 {
        return 0.0;
    }
    pos.sort_by(|a, b| b.1.total_cmp(&a.1));
    let (mut sw, mut swl) = (0.0, 0.0);
    for (k, &(w, l)) in pos.iter().enumerate() {
        sw += w;
        swl += w * l;
        let mu = (swl - 1.0) / sw;
        let next = pos.get(k + 1).map_or(0.0, |p| p.1);
        if mu >= next {
            return mu.max(0.0);
        }
    }
    unreachable!("the total exceeds the budget, so the last breakpoint brackets mu")
}

/// Projects `(p1, p2)` onto `{Q[l] ⪰ 0, τ tr Q[1] + (1 − τ) tr Q[2] ≤ 1}`.
///
/// A period with zero weight carries no power and is returned as zero.
pub fn project_constraint(p1: &CMatrix, p2: &CMatrix, tau: f64) -> Result<Projection> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::InvalidInput(format!("tau must lie in [0, 1], got {tau}")));
    }
    for p in [p1, p2] {
        if !linalg::is_hermitian(p, 1e-9) {
            return Err(Error::InvalidInput("projection input must be Hermitian".into()));
        }
    }
    let w = [tau, 1.0 - tau];
    let eig = [linalg::hermitian_eigen(p1), linalg::hermitian_eigen(p2)];
    let weighted: Vec<(f64, f64)> = (0..2)
        .flat_map(|l| eig[l].0.iter().map(move |&lam| (w[l], lam)))
        .collect();
    let mu = water_level(&weighted);

    let rebuild = |l: usize, n: usize| -> CMatrix {
        if w[l] == 0.0 {
            return CMatrix::zeros(n, n);
        }
        let (vals, vecs) = &eig[l];
        let mut scaled = vecs.clone();
        for (j, &v) in vals.iter().enumerate() {
            let c = (v - mu).max(0.0);
            scaled.column_mut(j).iter_mut().for_each(|z| *z *= C64::new(c, 0.0));
        }
        linalg::hermitian_part(&(&scaled * vecs.adjoint()))
    };
    Ok(Projection {
        q: [rebuild(0, p1.nrows()), rebuild(1, p2.nrows())],
        mu,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{from_real_diag, max_abs_diff, scaled_identity};
    use crate::rng::{complex_normal_matrix, trial_rng};
    use proptest::prelude::*;

    #[test]
    fn hand_solved_single_period() {
        let p = from_real_diag(&[3.0, 1.0]);
        let out = project_constraint(&p, &CMatrix::zeros(2, 2), 1.0).unwrap();
        assert_eq!(out.mu, 2.0);
        assert!(max_abs_diff(&out.q[0], &from_real_diag(&[1.0, 0.0])) < 1e-15);
        assert_eq!(out.q[1], CMatrix::zeros(2, 2));
    }

    #[test]
    fn interior_point_unchanged() {
        let p1 = scaled_identity(2, 0.25);
        let p2 = from_real_diag(&[0.3, 0.2]);
        let out = project_constraint(&p1, &p2, 0.5).unwrap();
        assert_eq!(out.mu, 0.0);
        assert!(max_abs_diff(&out.q[0], &p1) < 1e-14);
        assert!(max_abs_diff(&out.q[1], &p2) < 1e-14);
    }

    #[test]
    fn negative_definite_clips_to_zero() {
        let m = scaled_identity(3, -1.0);
        let out = project_constraint(&m, &m, 0.3).unwrap();
        assert!(linalg::max_abs_entry(&out.q[0]) < 1e-15);
        assert!(linalg::max_abs_entry(&out.q[1]) < 1e-15);
    }

    #[test]
    fn water_level_breakpoints() {
        assert_eq!(water_level(&[(1.0, 3.0), (1.0, 1.0)]), 2.0);
        // 0.5(4 − μ) + 0.5(2 − μ) = 1 → μ = 2, where the second term just vanishes
        assert!((water_level(&[(0.5, 4.0), (0.5, 2.0)]) - 2.0).abs() < 1e-15);
        assert_eq!(water_level(&[(0.5, 1.0), (0.5, 0.5)]), 0.0);
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut p = scaled_identity(2, 1.0);
        p[(0, 1)] = C64::new(1.0, 0.0);
        assert!(project_constraint(&p, &p, 0.5).is_err());
    }

    fn random_hermitian(seed: u64, n: usize, scale: f64) -> CMatrix {
        let a = complex_normal_matrix(&mut trial_rng(seed, 0), n, n, 1.0);
        linalg::scale(&linalg::hermitian_part(&a), scale)
    }

    proptest! {
        #[test]
        fn output_is_feasible_and_idempotent(seed in 0u64..10_000, tau in 0.05f64..0.95, scale in 0.01f64..20.0) {
            let p1 = random_hermitian(seed, 3, scale);
            let p2 = random_hermitian(seed + 1_000_000, 3, scale);
            let out = project_constraint(&p1, &p2, tau).unwrap();
            for q in &out.q {
                prop_assert!(linalg::min_eigenvalue(q) >= -1e-10);
            }
            let budget = tau * linalg::trace_re(&out.q[0]) + (1.0 - tau) * linalg::trace_re(&out.q[1]);
            prop_assert!(budget <= 1.0 + 1e-9);
            if out.mu > 0.0 {
                prop_assert!((budget - 1.0).abs() < 1e-9);
            }
            let again = project_constraint(&out.q[0], &out.q[1], tau).unwrap();
            prop_assert!(max_abs_diff(&again.q[0], &out.q[0]) < 1e-10);
            prop_assert!(max_abs_diff(&again.q[1], &out.q[1]) < 1e-10);
        }
    }
}
