//! The `l^q`-margin `M_q(A) = min_{sigma in Q} d_q(A sigma, E)`.

mod exact;
mod gradient;
mod sphere;

pub use exact::{margin_exact, margin_exact_multi, margin_exact_with_cap};
pub use gradient::{effective_exponent, finite_diff_gradient, margin_gradient, MarginGradient};
pub use sphere::{margin_continuous, margin_sphere_l2, SphereOptions};

use crate::error::{invalid, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;
use crate::sets::{ConstraintSet, Exponent, FeasibleSet};

/// Optimal value and witnesses of a margin computation.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginResult<T> {
    pub value: T,
    pub sigma_star: Vec<T>,
    /// Nearest point of `E` to `A sigma_star`.
    pub z: Vec<T>,
    /// `A sigma_star - z`.
    pub v: Vec<T>,
    pub abs_v: Vec<T>,
    /// True when `value` is a certified global minimum.
    pub exact: bool,
    pub q_used: Exponent<T>,
    /// Second-smallest objective seen by an exact solver. Candidates related by
    /// the sign symmetry `sigma -> -sigma` count once when `E = -E`.
    pub runner_up: Option<T>,
    /// Enumeration index of `sigma_star`, for exact solvers.
    pub index: Option<u64>,
}

impl<T: Real> MarginResult<T> {
    /// `runner_up - value`, `None` when there is no competing candidate.
    pub fn gap(&self) -> Option<T> {
        self.runner_up.map(|r| r - self.value)
    }

    pub(crate) fn from_point(
        a: &Matrix<T>,
        e: &ConstraintSet<T>,
        q: Exponent<T>,
        sigma: Vec<T>,
        exact: bool,
    ) -> Result<Self> {
        let x = a.mul_vec(&sigma);
        let d = e.lq_distance(&x, q)?;
        Ok(Self {
            value: d.dist,
            sigma_star: sigma,
            z: d.z,
            v: d.v,
            abs_v: d.abs_residual,
            exact,
            q_used: q,
            runner_up: None,
            index: None,
        })
    }
}

pub(crate) fn check_problem<T: Real>(
    a: &Matrix<T>,
    q_set: &FeasibleSet<T>,
    e: &ConstraintSet<T>,
) -> Result<()> {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return invalid("constraint matrix must be nonempty");
    }
    if n != q_set.dim() {
        return invalid(format!("A has {n} columns but Q lives in R^{}", q_set.dim()));
    }
    if m != e.dim() {
        return invalid(format!("A has {m} rows but E lives in R^{}", e.dim()));
    }
    if !a.is_finite() {
        return invalid("A has non-finite entries");
    }
    Ok(())
}
