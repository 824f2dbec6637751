//! Closed-form variance bounds and the gradient sums that feed them.
//!
//! Every evaluator normalizes the unknown universal constant to one.

use crate::error::{invalid, Result};
use crate::margin::MarginGradient;
use crate::scalar::Real;
use crate::sets::Exponent;

/// Bound values and gradient statistics for one concentration run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BoundReport<T> {
    pub theorem1_value: T,
    /// Block-symmetric bound, present when `E` has declared blocks.
    pub block_value: Option<T>,
    /// Gradient-based fields are present only when gradients were collected.
    pub poincare_rhs: Option<T>,
    pub l1l2_rhs: Option<T>,
    /// True when `sum_a2 = 0` made the log-ratio bound degenerate.
    pub l1l2_degenerate: bool,
    pub sum_a2: Option<T>,
    pub sum_b2: Option<T>,
}

/// `1 / (1 + (1/2 - 1/q) log M)`.
pub fn theorem1_bound<T: Real>(m: usize, q: Exponent<T>) -> Result<T> {
    if m == 0 {
        return invalid("M must be at least 1");
    }
    let coeff = T::lit(0.5) - q.reciprocal();
    if coeff < T::zero() {
        return invalid("q must be at least 2");
    }
    Ok(T::one() / (T::one() + coeff * T::from_count(m).ln()))
}

/// `(1 + log(max(m^{1-2/q} / k, 1)) / 2)^{-1}` with `m` the smallest block.
pub fn block_bound<T: Real>(block_sizes: &[usize], q: Exponent<T>) -> Result<T> {
    let Some(&m) = block_sizes.iter().min() else {
        return invalid("at least one block is required");
    };
    if m == 0 {
        return invalid("block sizes must be at least 1");
    }
    let expo = T::one() - T::lit(2.0) * q.reciprocal();
    if expo < T::zero() {
        return invalid("q must be at least 2");
    }
    let ratio = T::from_count(m).powf(expo) / T::from_count(block_sizes.len());
    Ok(T::one() / (T::one() + T::lit(0.5) * ratio.max(T::one()).ln()))
}

fn check_samples<T: Real>(samples: &[MarginGradient<T>]) -> Result<(usize, usize)> {
    if samples.len() < 2 {
        return invalid("at least two gradient samples are required");
    }
    let shape = samples[0].entries.shape();
    if samples.iter().any(|g| g.entries.shape() != shape) {
        return invalid("gradient samples have mismatched dimensions");
    }
    Ok(shape)
}

/// `(sum_ij mean(g_ij)^2, sum_ij mean(g_ij^2))` over the samples.
pub fn talagrand_sums<T: Real>(samples: &[MarginGradient<T>]) -> Result<(T, T)> {
    let (m, n) = check_samples(samples)?;
    let count = T::from_count(samples.len());
    let mut first = vec![T::zero(); m * n];
    let mut second = vec![T::zero(); m * n];
    for g in samples {
        for (k, &x) in g.entries.as_slice().iter().enumerate() {
            first[k] += x;
            second[k] += x * x;
        }
    }
    let mut sum_a2 = T::zero();
    let mut sum_b2 = T::zero();
    for k in 0..m * n {
        let mean = first[k] / count;
        sum_a2 += mean * mean;
        sum_b2 += second[k] / count;
    }
    Ok((sum_a2, sum_b2))
}

/// Mean squared gradient norm, the right side of the Gaussian Poincaré inequality.
pub fn poincare_rhs<T: Real>(samples: &[MarginGradient<T>]) -> Result<T> {
    Ok(talagrand_sums(samples)?.1)
}

/// `sum_b2 / (1 + log(sum_b2 / sum_a2) / 2)`, ratio clamped at one.
///
/// Returns `(value, degenerate)`; `sum_a2 = 0` gives `(0, true)`.
pub fn l1l2_rhs<T: Real>(sum_a2: T, sum_b2: T) -> Result<(T, bool)> {
    if !(sum_a2 >= T::zero()) || !(sum_b2 >= T::zero()) {
        return invalid("gradient sums must be nonnegative");
    }
    if sum_a2 == T::zero() {
        return Ok((T::zero(), true));
    }
    let ratio = (sum_b2 / sum_a2).max(T::one());
    Ok((sum_b2 / (T::one() + T::lit(0.5) * ratio.ln()), false))
}

/// Assembles a [`BoundReport`]; gradient fields are filled when `samples` has at least two entries.
pub fn bound_report<T: Real>(
    m: usize,
    q: Exponent<T>,
    block_sizes: Option<&[usize]>,
    samples: &[MarginGradient<T>],
) -> Result<BoundReport<T>> {
    let mut report = BoundReport {
        theorem1_value: theorem1_bound(m, q)?,
        block_value: block_sizes.map(|b| block_bound(b, q)).transpose()?,
        ..BoundReport::default()
    };
    if samples.len() >= 2 {
        let (a2, b2) = talagrand_sums(samples)?;
        let (rhs, degenerate) = l1l2_rhs(a2, b2)?;
        report.sum_a2 = Some(a2);
        report.sum_b2 = Some(b2);
        report.poincare_rhs = Some(b2);
        report.l1l2_rhs = Some(rhs);
        report.l1l2_degenerate = degenerate;
    }
    Ok(report)
}
