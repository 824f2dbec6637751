//! Exact margins over enumerable feasible sets.
//!
//! Images `A sigma` are accumulated column by column from zero, which rounds
//! exactly like a plain left-to-right mat-vec. On the hypercube the partial
//! sums are shared along a depth-first walk of the sign prefixes, so each leaf
//! costs `O(M)` amortized instead of `O(MN)`.

use crate::error::Result;
use crate::linalg::Matrix;
use crate::scalar::Real;
use crate::sets::{
    hypercube_coordinate, max_abs, ConstraintSet, CoordRule, Exponent, FeasibleSet, NormKernel,
    DEFAULT_ENUMERATION_CAP,
};

use super::{check_problem, MarginResult};

/// Running best and second-best objective for each requested exponent.
struct Tracker<T> {
    kernels: Vec<NormKernel<T>>,
    prune: Vec<T>,
    best: Vec<T>,
    best_index: Vec<Option<u64>>,
    second: Vec<T>,
}

impl<T: Real> Tracker<T> {
    fn new(qs: &[Exponent<T>]) -> Self {
        let kernels: Vec<_> = qs.iter().map(|&q| NormKernel::new(q)).collect();
        Self {
            prune: kernels.iter().map(NormKernel::prune_factor).collect(),
            kernels,
            best: vec![T::infinity(); qs.len()],
            best_index: vec![None; qs.len()],
            second: vec![T::infinity(); qs.len()],
        }
    }

    /// True when a residual whose sup norm is at least `partial` cannot change
    /// any best or second-best value. Mirrors the test in [`Self::offer`].
    #[inline]
    fn dominated(&self, partial: T) -> bool {
        (0..self.kernels.len()).all(|k| partial * self.prune[k] > self.second[k])
    }

    #[inline]
    fn offer(&mut self, index: u64, residual: &[T]) {
        let scale = max_abs(residual);
        for k in 0..self.kernels.len() {
            // every l^q norm is at least the sup norm
            if scale * self.prune[k] > self.second[k] {
                continue;
            }
            let value = self.kernels[k].norm_with_scale(residual, scale);
            if value < self.best[k] || self.best_index[k].is_none() {
                self.second[k] = self.best[k];
                self.best[k] = value;
                self.best_index[k] = Some(index);
            } else if value < self.second[k] {
                self.second[k] = value;
            }
        }
    }
}

/// Depth-first walk over sign prefixes, `+` before `-`, first coordinate slowest.
struct CubeWalk<'a, T> {
    e: &'a ConstraintSet<T>,
    /// Columns of `A` scaled by `N^{-1/2}`.
    columns: Vec<Vec<T>>,
    rows: usize,
    /// Row `k` holds the partial image after the first `k` signs.
    prefix: Vec<T>,
    residual: Vec<T>,
    /// Only walk `sigma_0 = +`; valid when `d(-x, E) = d(x, E)`.
    halve: bool,
    /// Per-coordinate residuals, present when `E` is coordinatewise.
    rules: Option<Vec<CoordRule<'a, T>>>,
}

impl<'a, T: Real> CubeWalk<'a, T> {
    fn new(a: &Matrix<T>, e: &'a ConstraintSet<T>) -> Self {
        let (m, n) = a.shape();
        let c = hypercube_coordinate::<T>(n);
        Self {
            e,
            columns: (0..n).map(|j| (0..m).map(|i| a[(i, j)] * c).collect()).collect(),
            rows: m,
            prefix: vec![T::zero(); (n + 1) * m],
            residual: vec![T::zero(); m],
            halve: e.is_negation_symmetric(),
            rules: e.coordinate_rules(),
        }
    }

    fn step(&mut self, depth: usize, negative: bool) {
        let m = self.rows;
        let (done, rest) = self.prefix.split_at_mut((depth + 1) * m);
        let prev = &done[depth * m..];
        let next = &mut rest[..m];
        let col = &self.columns[depth];
        if negative {
            for ((nx, &p), &c) in next.iter_mut().zip(prev).zip(col) {
                *nx = p - c;
            }
        } else {
            for ((nx, &p), &c) in next.iter_mut().zip(prev).zip(col) {
                *nx = p + c;
            }
        }
    }

    /// Offers the leaf below the last prefix with the given final sign.
    ///
    /// For coordinatewise `E` the scan stops as soon as the partial sup norm of
    /// the residual is dominated, which settles most leaves after a few rows.
    fn leaf(&mut self, negative: bool, index: u64, tracker: &mut Tracker<T>) {
        let n = self.columns.len();
        let m = self.rows;
        let prev = &self.prefix[(n - 1) * m..n * m];
        let col = &self.columns[n - 1];
        if let Some(rules) = &self.rules {
            let mut partial = T::zero();
            for i in 0..m {
                let x = if negative { prev[i] - col[i] } else { prev[i] + col[i] };
                let r = rules[i].residual(x).abs();
                if r > partial {
                    partial = r;
                    if tracker.dominated(partial) {
                        return;
                    }
                } else if r.is_nan() {
                    break;
                }
            }
            for (i, out) in self.residual.iter_mut().enumerate() {
                let x = if negative { prev[i] - col[i] } else { prev[i] + col[i] };
                *out = rules[i].residual(x);
            }
        } else {
            self.step(n - 1, negative);
            self.e.residual_into(&self.prefix[n * m..], &mut self.residual);
        }
        tracker.offer(index, &self.residual);
    }

    fn visit(&mut self, depth: usize, index: u64, tracker: &mut Tracker<T>) {
        let n = self.columns.len();
        let last = depth + 1 == n;
        if last {
            self.leaf(false, index, tracker);
        } else {
            self.step(depth, false);
            self.visit(depth + 1, index, tracker);
        }
        if depth == 0 && self.halve {
            return;
        }
        let index = index | 1 << (n - 1 - depth);
        if last {
            self.leaf(true, index, tracker);
        } else {
            self.step(depth, true);
            self.visit(depth + 1, index, tracker);
        }
    }
}

/// Exact `M_q(A)` over an enumerable `Q`, capped at [`DEFAULT_ENUMERATION_CAP`].
///
/// Ties go to the first minimizer in enumeration order.
pub fn margin_exact<T: Real>(
    a: &Matrix<T>,
    q_set: &FeasibleSet<T>,
    e: &ConstraintSet<T>,
    q: Exponent<T>,
) -> Result<MarginResult<T>> {
    margin_exact_with_cap(a, q_set, e, q, DEFAULT_ENUMERATION_CAP)
}

pub fn margin_exact_with_cap<T: Real>(
    a: &Matrix<T>,
    q_set: &FeasibleSet<T>,
    e: &ConstraintSet<T>,
    q: Exponent<T>,
    cap: u64,
) -> Result<MarginResult<T>> {
    Ok(margin_exact_multi(a, q_set, e, &[q], cap)?.remove(0))
}

/// Exact margins for several exponents from a single enumeration.
///
/// Projections onto product sets do not depend on `q`, so every candidate's
/// residual is computed once and aggregated under each exponent.
pub fn margin_exact_multi<T: Real>(
    a: &Matrix<T>,
    q_set: &FeasibleSet<T>,
    e: &ConstraintSet<T>,
    qs: &[Exponent<T>],
    cap: u64,
) -> Result<Vec<MarginResult<T>>> {
    check_problem(a, q_set, e)?;
    for &q in qs {
        e.check_exponent(q)?;
    }
    let count = q_set.checked_count(cap)?;
    let mut tracker = Tracker::new(qs);

    match q_set {
        FeasibleSet::ScaledHypercube { .. } => {
            CubeWalk::new(a, e).visit(0, 0, &mut tracker);
        }
        _ => {
            let mut residual = vec![T::zero(); a.rows()];
            for index in 0..count {
                let x = a.mul_vec(&q_set.member(index));
                e.residual_into(&x, &mut residual);
                tracker.offer(index, &residual);
            }
        }
    }

    qs.iter()
        .enumerate()
        .map(|(k, &q)| {
            let index = tracker.best_index[k].expect("enumeration visits at least one member");
            let mut result = MarginResult::from_point(a, e, q, q_set.member(index), true)?;
            debug_assert_eq!(result.value.to_f64_lossy(), tracker.best[k].to_f64_lossy());
            result.value = tracker.best[k];
            result.runner_up = tracker.second[k].is_finite().then_some(tracker.second[k]);
            result.index = Some(index);
            Ok(result)
        })
        .collect()
}
