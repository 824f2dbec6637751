//! Explicit gradient of the margin and its finite-difference check.
//!
//! At a differentiability point with unique minimizer `sigma*` and residual
//! `v = A sigma* - z`, the envelope theorem and the chain rule give
//! `|d M_q / d A_ij| = |sigma*_j| |v_i|^{q-1} / ||v||_q^{q-1}`.

use crate::error::{invalid, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;
use crate::sets::{lq_norm, ConstraintSet, Exponent, FeasibleSet};

use super::{margin_exact, margin_sphere_l2, MarginResult};

/// Entrywise absolute gradient `|d M_q / d A_ij|`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginGradient<T> {
    pub entries: Matrix<T>,
    pub sigma_star: Vec<T>,
    /// False when the formula was evaluated away from a point where it is the
    /// derivative: tied minimizers, or a residual taken from another exponent.
    pub well_defined: bool,
    pub q: Exponent<T>,
}

impl<T: Real> MarginGradient<T> {
    pub fn squared_norm(&self) -> T {
        self.entries.as_slice().iter().map(|&x| x * x).sum()
    }
}

/// Finite stand-in for `q = inf`: `ceil(log(M)^2)`, at least 2.
pub fn effective_exponent<T: Real>(m: usize, q: Exponent<T>) -> Exponent<T> {
    match q {
        Exponent::Finite(_) => q,
        Exponent::Infinity => {
            let log_m = T::from_count(m.max(1)).ln();
            Exponent::Finite((log_m * log_m).ceil().max(T::lit(2.0)))
        }
    }
}

/// `|sigma*_j| (|v_i| / ||v||_q)^{q-1}` from a margin result.
///
/// `q` must be finite; route `q = inf` through [`effective_exponent`] and
/// solve at that exponent first. The result is flagged not well defined if
/// `result` was computed at a different exponent or has a tied minimizer.
pub fn margin_gradient<T: Real>(
    a: &Matrix<T>,
    result: &MarginResult<T>,
    q: Exponent<T>,
) -> Result<MarginGradient<T>> {
    let Exponent::Finite(qv) = q else {
        return invalid("the margin gradient needs a finite q; substitute effective_exponent(M, inf)");
    };
    let (m, n) = a.shape();
    if result.v.len() != m || result.sigma_star.len() != n {
        return invalid("margin result does not match the shape of A");
    }
    let mut entries = Matrix::zeros(m, n);
    let norm = lq_norm(&result.v, q);
    if norm > T::zero() {
        let weights: Vec<T> = result
            .v
            .iter()
            .map(|vi| (vi.abs() / norm).powf(qv - T::one()))
            .collect();
        for (i, &w) in weights.iter().enumerate() {
            for (j, s) in result.sigma_star.iter().enumerate() {
                entries[(i, j)] = s.abs() * w;
            }
        }
    }
    let tied = result.gap().is_some_and(|g| g <= T::zero());
    Ok(MarginGradient {
        entries,
        sigma_star: result.sigma_star.clone(),
        well_defined: result.q_used == q && !tied,
        q,
    })
}

fn solve<T: Real>(
    a: &Matrix<T>,
    q_set: &FeasibleSet<T>,
    e: &ConstraintSet<T>,
    q: Exponent<T>,
) -> Result<T> {
    match q_set {
        FeasibleSet::UnitSphere { .. } => {
            if !matches!(e, ConstraintSet::SingletonZero { .. }) || !q.is_two() {
                return invalid("sphere margins are exact only for E = {0}, q = 2");
            }
            Ok(margin_sphere_l2(a)?.value)
        }
        _ => Ok(margin_exact(a, q_set, e, q)?.value),
    }
}

/// Central differences `(M_q(A + h e_ij) - M_q(A - h e_ij)) / 2h`. Signed.
pub fn finite_diff_gradient<T: Real>(
    a: &Matrix<T>,
    q_set: &FeasibleSet<T>,
    e: &ConstraintSet<T>,
    q: Exponent<T>,
    h: T,
) -> Result<Matrix<T>> {
    if !(h > T::zero()) {
        return invalid("finite-difference step must be positive");
    }
    let (m, n) = a.shape();
    let mut out = Matrix::zeros(m, n);
    let mut shifted = a.clone();
    for i in 0..m {
        for j in 0..n {
            let orig = a[(i, j)];
            shifted[(i, j)] = orig + h;
            let up = solve(&shifted, q_set, e, q)?;
            shifted[(i, j)] = orig - h;
            let down = solve(&shifted, q_set, e, q)?;
            shifted[(i, j)] = orig;
            out[(i, j)] = (up - down) / (h + h);
        }
    }
    Ok(out)
}
