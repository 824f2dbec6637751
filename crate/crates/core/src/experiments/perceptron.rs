use num_rational::Ratio;

use crate::error::{invalid, Result};
use crate::linalg::{dot, Matrix};
use crate::margin::margin_exact;
use crate::scalar::Real;
use crate::sets::{ConstraintSet, Exponent, FeasibleSet, DEFAULT_ENUMERATION_CAP};

/// Empirical capacity: the longest prefix of rows some `sigma` satisfies
/// strictly (`<A_i, sigma> > 0`), divided by `N`.
pub fn perceptron_capacity<T: Real>(rows: &[Vec<T>], q_set: &FeasibleSet<T>) -> Result<Ratio<usize>> {
    if rows.is_empty() {
        return invalid("no constraint rows");
    }
    let n = q_set.dim();
    if rows.iter().any(|r| r.len() != n) {
        return invalid(format!("every row must have {n} coordinates"));
    }
    let mut best = 0;
    for sigma in q_set.enumerate(DEFAULT_ENUMERATION_CAP)? {
        let prefix = rows.iter().take_while(|r| dot(r, &sigma) > T::zero()).count();
        best = best.max(prefix);
        if best == rows.len() {
            break;
        }
    }
    Ok(Ratio::new(best, n))
}

/// Margins against `E_K = [K, inf)^M` at `q = inf` over a grid of `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerceptronCurve<T> {
    pub k_grid: Vec<T>,
    pub margins: Vec<T>,
    /// `max_sigma min_i (A sigma)_i`; `margin(K) = max(0, K - k_c)`.
    pub k_c: T,
}

pub fn perceptron_margin_curve<T: Real>(
    a: &Matrix<T>,
    q_set: &FeasibleSet<T>,
    k_grid: &[T],
) -> Result<PerceptronCurve<T>> {
    if a.cols() != q_set.dim() {
        return invalid("A and Q dimensions differ");
    }
    let mut k_c = T::neg_infinity();
    for sigma in q_set.enumerate(DEFAULT_ENUMERATION_CAP)? {
        let worst = a.mul_vec(&sigma).into_iter().fold(T::infinity(), T::min);
        k_c = k_c.max(worst);
    }
    let margins = k_grid
        .iter()
        .map(|&k| {
            let e = ConstraintSet::at_least(a.rows(), k)?;
            Ok(margin_exact(a, q_set, &e, Exponent::Infinity)?.value)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PerceptronCurve {
        k_grid: k_grid.to_vec(),
        margins,
        k_c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{sample_gaussian_matrix, RandomStream};

    #[test]
    fn hand_enumerated_capacity() {
        let rows = vec![vec![1.0, 1.0], vec![1.0, -1.0], vec![-1.0, -1.0]];
        let cube = FeasibleSet::hypercube(2).unwrap();
        assert_eq!(perceptron_capacity(&rows, &cube).unwrap(), Ratio::new(1, 2));
    }

    #[test]
    fn aligned_rows_are_all_satisfiable() {
        let rows = vec![vec![1.0, 0.0, 0.0]; 5];
        let cube = FeasibleSet::hypercube(3).unwrap();
        assert_eq!(perceptron_capacity(&rows, &cube).unwrap(), Ratio::new(5, 3));
    }

    #[test]
    fn zero_first_row_gives_zero() {
        let rows = vec![vec![0.0, 0.0], vec![1.0, 1.0]];
        let cube = FeasibleSet::hypercube(2).unwrap();
        assert_eq!(perceptron_capacity(&rows, &cube).unwrap(), Ratio::new(0, 2));
        assert!(perceptron_capacity::<f64>(&[], &cube).is_err());
    }

    #[test]
    fn curve_matches_closed_form() {
        let mut s = RandomStream::new(8);
        let a: Matrix<f64> = sample_gaussian_matrix(&mut s, 6, 6).unwrap();
        let cube = FeasibleSet::hypercube(6).unwrap();
        let grid = [-1e6, -1.0, -0.2, 0.0, 0.3, 1.5];
        let c = perceptron_margin_curve(&a, &cube, &grid).unwrap();
        assert_eq!(c.margins[0], 0.0);
        for (k, m) in grid.iter().zip(&c.margins) {
            assert!((m - (k - c.k_c).max(0.0)).abs() <= 1e-10);
        }
        for w in c.margins.windows(2) {
            assert!(w[0] <= w[1]);
        }
    }
}
