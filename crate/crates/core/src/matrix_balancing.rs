//! Signing GOE matrices so the signed sum has small operator norm.

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::linalg::Matrix;
use crate::rng::{sample_goe, trial_seed, RandomStream};
use crate::scalar::Real;
use crate::sets::{FeasibleSet, DEFAULT_ENUMERATION_CAP};
use crate::stats;

const JACOBI_MAX_SWEEPS: usize = 100;
/// Restarts used when `N` exceeds the exact enumeration cap.
const FALLBACK_RESTARTS: usize = 20;
const FALLBACK_SWEEPS: usize = 1000;

/// `N` symmetric `d x d` matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct BalancingInstance<T> {
    matrices: Vec<Matrix<T>>,
    d: usize,
}

impl<T: Real> BalancingInstance<T> {
    pub fn new(matrices: Vec<Matrix<T>>) -> Result<Self> {
        let Some(first) = matrices.first() else {
            return invalid("at least one matrix is required");
        };
        let d = first.rows();
        for m in &matrices {
            if m.shape() != (d, d) || d == 0 {
                return invalid("matrices must be square and of equal size");
            }
            if m.asymmetry() != T::zero() {
                return invalid("matrices must be exactly symmetric");
            }
        }
        Ok(Self { matrices, d })
    }

    /// `N` independent GOE samples drawn in order from `stream`.
    pub fn sample(stream: &mut RandomStream, d: usize, n: usize) -> Result<Self> {
        if n == 0 {
            return invalid("N must be positive");
        }
        Self::new((0..n).map(|_| sample_goe(stream, d)).collect::<Result<_>>()?)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn matrices(&self) -> &[Matrix<T>] {
        &self.matrices
    }

    /// `sum_i sigma_i A_i`.
    pub fn signed_sum(&self, sigma: &[T]) -> Matrix<T> {
        let mut s = Matrix::zeros(self.d, self.d);
        for (a, &x) in self.matrices.iter().zip(sigma) {
            s.add_scaled(x, a);
        }
        s
    }

    /// `d^{-1/2} |sum_i sigma_i A_i|_op`.
    pub fn objective(&self, sigma: &[T]) -> Result<T> {
        Ok(operator_norm(&self.signed_sum(sigma))? / T::from_count(self.d).sqrt())
    }
}

/// Optimal signing with the extreme eigenpair of the signed sum.
#[derive(Debug, Clone, PartialEq)]
pub struct BalancingResult<T> {
    pub disc: T,
    /// Signs scaled by `N^{-1/2}`.
    pub sigma_star: Vec<T>,
    /// Eigenvalue of largest magnitude of the signed sum.
    pub top_eigenvalue: T,
    pub top_eigenvector: Vec<T>,
    pub exact: bool,
}

/// Eigenvalues in descending order; column `k` of `vectors` belongs to `values[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricEigen<T> {
    pub values: Vec<T>,
    pub vectors: Matrix<T>,
}

fn check_symmetric<T: Real>(s: &Matrix<T>) -> Result<()> {
    if !s.is_square() || s.rows() == 0 {
        return invalid("expected a nonempty square matrix");
    }
    if !s.is_finite() {
        return invalid("matrix has non-finite entries");
    }
    let scale = s.frobenius_norm().max(T::min_positive_value());
    if s.asymmetry() > T::lit(1e-12) * scale {
        return invalid("matrix is not symmetric");
    }
    Ok(())
}

fn off_diagonal_mass<T: Real>(a: &Matrix<T>) -> T {
    let d = a.rows();
    let mut acc = T::zero();
    for i in 0..d {
        for j in 0..d {
            if i != j {
                acc += a[(i, j)] * a[(i, j)];
            }
        }
    }
    acc.sqrt()
}

/// Cyclic Jacobi; `vectors` is updated alongside when present.
fn jacobi<T: Real>(a: &mut Matrix<T>, mut vectors: Option<&mut Matrix<T>>) {
    let d = a.rows();
    let target = T::lit(1e-12) * a.frobenius_norm();
    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_mass(a) <= target {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = a[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..d {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..d {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                if let Some(v) = vectors.as_deref_mut() {
                    for k in 0..d {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }
}

/// Full eigendecomposition by cyclic Jacobi rotations, run until the
/// off-diagonal Frobenius mass falls below `1e-12 |S|_F`.
pub fn symmetric_eigen<T: Real>(s: &Matrix<T>) -> Result<SymmetricEigen<T>> {
    check_symmetric(s)?;
    let d = s.rows();
    let mut a = s.clone();
    let mut v = Matrix::identity(d);
    jacobi(&mut a, Some(&mut v));
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| a[(j, j)].partial_cmp(&a[(i, i)]).expect("finite eigenvalues"));
    Ok(SymmetricEigen {
        values: order.iter().map(|&k| a[(k, k)]).collect(),
        vectors: Matrix::from_fn(d, d, |i, j| v[(i, order[j])]),
    })
}

fn eigenvalues<T: Real>(s: &Matrix<T>) -> Vec<T> {
    let mut a = s.clone();
    jacobi(&mut a, None);
    (0..a.rows()).map(|k| a[(k, k)]).collect()
}

/// Largest absolute eigenvalue.
pub fn operator_norm<T: Real>(s: &Matrix<T>) -> Result<T> {
    check_symmetric(s)?;
    Ok(eigenvalues(s).into_iter().fold(T::zero(), |m, x| m.max(x.abs())))
}

/// True when `t I + sign * S` is positive definite, by attempted Cholesky.
fn shifted_is_pd<T: Real>(s: &Matrix<T>, t: T, sign: T, work: &mut [T]) -> bool {
    let d = s.rows();
    for i in 0..d {
        for j in 0..=i {
            let mut x = sign * s[(i, j)];
            if i == j {
                x += t;
            }
            for k in 0..j {
                x -= work[i * d + k] * work[j * d + k];
            }
            if i == j {
                if !(x > T::zero()) {
                    return false;
                }
                work[i * d + i] = x.sqrt();
            } else {
                work[i * d + j] = x / work[j * d + j];
            }
        }
    }
    true
}

/// `|S|_op < t` via the inertia of `t I - S` and `t I + S`.
fn norm_below<T: Real>(s: &Matrix<T>, t: T, work: &mut [T]) -> bool {
    t.is_infinite() || (shifted_is_pd(s, t, -T::one(), work) && shifted_is_pd(s, t, T::one(), work))
}

fn finish<T: Real>(inst: &BalancingInstance<T>, signs: &[T], exact: bool) -> Result<BalancingResult<T>> {
    let scale = T::one() / T::from_count(inst.len()).sqrt();
    let sigma: Vec<T> = signs.iter().map(|&s| s * scale).collect();
    let sum = inst.signed_sum(&sigma);
    let eig = symmetric_eigen(&sum)?;
    let top = if eig.values[0].abs() >= eig.values[inst.d - 1].abs() { 0 } else { inst.d - 1 };
    let lambda = eig.values[top];
    Ok(BalancingResult {
        disc: lambda.abs() / T::from_count(inst.d).sqrt(),
        sigma_star: sigma,
        top_eigenvalue: lambda,
        top_eigenvector: eig.vectors.column(top),
        exact,
    })
}

struct SignWalk<'a, T> {
    inst: &'a BalancingInstance<T>,
    /// Unscaled partial sums, one per depth.
    prefix: Vec<Matrix<T>>,
    signs: Vec<T>,
    best: T,
    best_signs: Vec<T>,
    work: Vec<T>,
}

impl<T: Real> SignWalk<'_, T> {
    fn visit(&mut self, depth: usize) {
        let n = self.inst.len();
        if depth == n {
            let s = &self.prefix[n];
            if norm_below(s, self.best, &mut self.work) {
                let value = eigenvalues(s).into_iter().fold(T::zero(), |m, x| m.max(x.abs()));
                if value < self.best {
                    self.best = value;
                    self.best_signs.clone_from(&self.signs);
                }
            }
            return;
        }
        let signs: &[T] = if depth == 0 { &[T::one()] } else { &[T::one(), -T::one()] };
        for &sign in signs {
            let (head, tail) = self.prefix.split_at_mut(depth + 1);
            let next = tail[0].as_mut_slice();
            let a = self.inst.matrices[depth].as_slice();
            for ((x, &p), &aij) in next.iter_mut().zip(head[depth].as_slice()).zip(a) {
                *x = p + sign * aij;
            }
            self.signs[depth] = sign;
            self.visit(depth + 1);
        }
    }
}

/// Exact minimum over sign vectors with the first sign fixed to `+`.
///
/// Each leaf is screened by two Cholesky factorizations against the incumbent;
/// only improvements pay for an eigenvalue solve. Ties keep the first signing
/// in lexicographic order with `+` before `-`.
pub fn balance_exact<T: Real>(inst: &BalancingInstance<T>) -> Result<BalancingResult<T>> {
    let n = inst.len();
    FeasibleSet::<T>::hypercube(n)?.checked_count(DEFAULT_ENUMERATION_CAP)?;
    let d = inst.d;
    let mut walk = SignWalk {
        inst,
        prefix: vec![Matrix::zeros(d, d); n + 1],
        signs: vec![T::one(); n],
        best: T::infinity(),
        best_signs: vec![T::one(); n],
        work: vec![T::zero(); d * d],
    };
    walk.visit(0);
    finish(inst, &walk.best_signs, true)
}

/// Local search result with the best value after each restart.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalSearchOutcome<T> {
    pub result: BalancingResult<T>,
    /// Best disc found so far, one entry per restart.
    pub trace: Vec<T>,
}

/// Best-of-restarts steepest single-flip descent from uniform random signs.
pub fn balance_local_search<T: Real>(
    inst: &BalancingInstance<T>,
    restarts: usize,
    max_sweeps: usize,
    stream: &mut RandomStream,
) -> Result<LocalSearchOutcome<T>> {
    if restarts == 0 {
        return invalid("at least one restart is required");
    }
    let n = inst.len();
    let mut best = T::infinity();
    let mut best_signs = vec![T::one(); n];
    let mut trace = Vec::with_capacity(restarts);
    for _ in 0..restarts {
        let mut signs: Vec<T> = (0..n)
            .map(|_| if stream.next_u64() >> 63 == 0 { T::one() } else { -T::one() })
            .collect();
        let mut sum = inst.signed_sum(&signs);
        let mut value = operator_norm(&sum)?;
        for _ in 0..max_sweeps {
            let mut flip = None;
            let mut flip_value = value;
            for (k, (&sk, mk)) in signs.iter().zip(&inst.matrices).enumerate() {
                let mut trial = sum.clone();
                trial.add_scaled(-(sk + sk), mk);
                let v = operator_norm(&trial)?;
                if v < flip_value {
                    flip_value = v;
                    flip = Some(k);
                }
            }
            let Some(k) = flip else { break };
            sum.add_scaled(-(signs[k] + signs[k]), &inst.matrices[k]);
            signs[k] = -signs[k];
            value = flip_value;
        }
        if value < best {
            best = value;
            best_signs = signs;
        }
        trace.push(best / T::from_count(n * inst.d).sqrt());
    }
    Ok(LocalSearchOutcome {
        result: finish(inst, &best_signs, false)?,
        trace,
    })
}

/// `u u^T` for the unit eigenvector of the largest eigenvalue.
pub fn eig_gradient<T: Real>(s: &Matrix<T>) -> Result<Matrix<T>> {
    let eig = symmetric_eigen(s)?;
    let d = s.rows();
    if d > 1 && eig.values[0] - eig.values[1] < T::lit(1e-8) * s.frobenius_norm() {
        return Err(Error::Degenerate("largest eigenvalue is not simple".into()));
    }
    let u = eig.vectors.column(0);
    Ok(Matrix::from_fn(d, d, |i, j| u[i] * u[j]))
}

/// One trial of the balancing experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct BalancingTrial {
    pub trial: usize,
    pub seed: u64,
    pub disc: f64,
    pub lambda_top: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BalancingReport {
    pub d: usize,
    pub n: usize,
    pub records: Vec<BalancingTrial>,
    pub exact: bool,
    pub mean: f64,
    pub mean_se: f64,
    pub variance: f64,
    pub variance_se: f64,
    pub variance_ci: (f64, f64),
    /// `1/d`, the Poincaré ceiling for unit-variance entries.
    pub poincare_bound: f64,
    /// `mean / (sd sqrt(d))`.
    pub ratio: f64,
}

/// Exact discrepancy of `N` GOE matrices per trial (local search beyond the cap).
pub fn balancing_variance_experiment(d: usize, n: usize, trials: usize, seed: u64) -> Result<BalancingReport> {
    if trials < 2 {
        return invalid("at least two trials are required");
    }
    if d == 0 || n == 0 {
        return invalid("d and N must be positive");
    }
    let exact = FeasibleSet::<f64>::hypercube(n)?.checked_count(DEFAULT_ENUMERATION_CAP).is_ok();
    let records = (0..trials)
        .into_par_iter()
        .map(|t| {
            let seed = trial_seed(seed, t as u64);
            let mut stream = RandomStream::new(seed);
            let inst = BalancingInstance::<f64>::sample(&mut stream, d, n)?;
            let r = if exact {
                balance_exact(&inst)?
            } else {
                balance_local_search(&inst, FALLBACK_RESTARTS, FALLBACK_SWEEPS, &mut stream)?.result
            };
            Ok(BalancingTrial {
                trial: t,
                seed,
                disc: r.disc,
                lambda_top: r.top_eigenvalue,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let discs: Vec<f64> = records.iter().map(|r| r.disc).collect();
    let variance = stats::variance(&discs);
    let mean = stats::mean(&discs);
    let mut boot = RandomStream::new(trial_seed(seed, u64::MAX));
    Ok(BalancingReport {
        d,
        n,
        exact,
        mean,
        mean_se: stats::mean_se(&discs),
        variance,
        variance_se: stats::variance_se(&discs),
        variance_ci: stats::bootstrap_variance_ci(&discs, 1000, 0.05, &mut boot)?,
        poincare_bound: 1.0 / d as f64,
        ratio: mean / (variance.sqrt() * (d as f64).sqrt()),
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn brute_force(inst: &BalancingInstance<f64>) -> f64 {
        let n = inst.len();
        let c = 1.0 / (n as f64).sqrt();
        (0..1u64 << n)
            .map(|bits| {
                let sigma: Vec<f64> = (0..n).map(|j| if bits >> j & 1 == 1 { -c } else { c }).collect();
                inst.objective(&sigma).unwrap()
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn diagonal_eigen() {
        let s = Matrix::<f64>::diagonal(&[1.0, -5.0, 3.0]);
        let e = symmetric_eigen(&s).unwrap();
        assert_eq!(e.values, vec![3.0, 1.0, -5.0]);
        assert_eq!(operator_norm(&s).unwrap(), 5.0);
        assert_eq!(operator_norm(&Matrix::<f64>::zeros(3, 3)).unwrap(), 0.0);
    }

    #[test]
    fn swap_matrix_eigen() {
        let s = Matrix::<f64>::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let e = symmetric_eigen(&s).unwrap();
        assert_relative_eq!(e.values[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(e.values[1], -1.0, epsilon = 1e-15);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_relative_eq!(e.vectors[(0, 0)].abs(), h, epsilon = 1e-15);
        assert_relative_eq!(e.vectors[(0, 0)] * e.vectors[(1, 0)], 0.5, epsilon = 1e-15);
        assert_relative_eq!(e.vectors[(0, 1)] * e.vectors[(1, 1)], -0.5, epsilon = 1e-15);
    }

    #[test]
    fn reconstruction_and_orthonormality() {
        let mut s = RandomStream::new(3);
        for d in [1, 2, 5, 12] {
            let g: Matrix<f64> = sample_goe(&mut s, d).unwrap();
            let e = symmetric_eigen(&g).unwrap();
            let rebuilt = e
                .vectors
                .matmul(&Matrix::diagonal(&e.values))
                .matmul(&e.vectors.transpose());
            assert!(rebuilt.sub(&g).frobenius_norm() <= 1e-9 * g.frobenius_norm());
            let gram = e.vectors.transpose().matmul(&e.vectors);
            assert!(gram.sub(&Matrix::identity(d)).frobenius_norm() < 1e-9);
        }
    }

    #[test]
    fn asymmetric_rejected() {
        let s = Matrix::from_rows(&[vec![0.0, 1.0], vec![0.5, 0.0]]).unwrap();
        assert!(symmetric_eigen(&s).is_err());
        assert!(BalancingInstance::new(vec![s]).is_err());
    }

    #[test]
    fn goe_operator_norm_near_edge() {
        let mut s = RandomStream::new(50);
        let edge = 2.0 * 50f64.sqrt();
        for _ in 0..20 {
            let g: Matrix<f64> = sample_goe(&mut s, 50).unwrap();
            let op = operator_norm(&g).unwrap();
            assert!(op > 0.65 * edge && op < 1.35 * edge, "{op}");
        }
    }

    #[test]
    fn single_matrix() {
        let mut s = RandomStream::new(1);
        let inst = BalancingInstance::<f64>::sample(&mut s, 4, 1).unwrap();
        let r = balance_exact(&inst).unwrap();
        let expected = operator_norm(&inst.matrices()[0]).unwrap() / 2.0;
        assert_relative_eq!(r.disc, expected, epsilon = 1e-12);
    }

    #[test]
    fn identical_matrices_cancel() {
        let inst = BalancingInstance::new(vec![Matrix::<f64>::identity(2); 2]).unwrap();
        let r = balance_exact(&inst).unwrap();
        assert_eq!(r.disc, 0.0);
        assert!(r.sigma_star[0] > 0.0 && r.sigma_star[1] < 0.0);
    }

    #[test]
    fn exact_matches_brute_force() {
        let mut s = RandomStream::new(17);
        for _ in 0..5 {
            let inst = BalancingInstance::<f64>::sample(&mut s, 4, 8).unwrap();
            let r = balance_exact(&inst).unwrap();
            assert!((r.disc - brute_force(&inst)).abs() <= 1e-12);
            assert_relative_eq!(crate::linalg::norm2(&r.top_eigenvector), 1.0, epsilon = 1e-10);
            assert!((inst.objective(&r.sigma_star).unwrap() - r.disc).abs() <= 1e-9);
            // no single flip improves a global optimum
            for k in 0..8 {
                let mut flipped = r.sigma_star.clone();
                flipped[k] = -flipped[k];
                assert!(inst.objective(&flipped).unwrap() >= r.disc - 1e-12);
            }
        }
    }

    #[test]
    fn local_search_is_an_upper_bound() {
        let mut s = RandomStream::new(2);
        let inst = BalancingInstance::<f64>::sample(&mut s, 4, 10).unwrap();
        let exact = balance_exact(&inst).unwrap();
        let out = balance_local_search(&inst, 20, 100, &mut s).unwrap();
        assert!(!out.result.exact);
        assert!(out.result.disc >= exact.disc - 1e-12);
        assert!(out.trace.windows(2).all(|w| w[1] <= w[0]));
        assert_relative_eq!(*out.trace.last().unwrap(), out.result.disc, epsilon = 1e-9);
    }

    #[test]
    fn gradient_of_diagonal() {
        let g = eig_gradient(&Matrix::<f64>::diagonal(&[3.0, 1.0])).unwrap();
        assert_eq!(g, Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap());
        assert!(eig_gradient(&Matrix::<f64>::identity(3)).is_err());
    }

    #[test]
    fn gradient_trace_is_one() {
        let mut s = RandomStream::new(9);
        let g: Matrix<f64> = sample_goe(&mut s, 6).unwrap();
        let grad = eig_gradient(&g).unwrap();
        let trace: f64 = (0..6).map(|i| grad[(i, i)]).sum();
        assert_relative_eq!(trace, 1.0, epsilon = 1e-12);
        assert_relative_eq!(grad.frobenius_norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn invariances() {
        let mut s = RandomStream::new(4);
        let inst = BalancingInstance::<f64>::sample(&mut s, 3, 6).unwrap();
        let r = balance_exact(&inst).unwrap();
        let neg: Vec<f64> = r.sigma_star.iter().map(|x| -x).collect();
        assert!((inst.objective(&neg).unwrap() - r.disc).abs() <= 1e-9);
        // conjugate every matrix by the same rotation
        let q = symmetric_eigen(&sample_goe::<f64>(&mut s, 3).unwrap()).unwrap().vectors;
        let rotated = BalancingInstance::new(
            inst.matrices()
                .iter()
                .map(|a| {
                    let m = q.transpose().matmul(a).matmul(&q);
                    Matrix::from_fn(3, 3, |i, j| if i <= j { m[(i, j)] } else { m[(j, i)] })
                })
                .collect(),
        )
        .unwrap();
        assert!((balance_exact(&rotated).unwrap().disc - r.disc).abs() <= 1e-9);
    }

    #[test]
    fn oversized_instance() {
        let inst = BalancingInstance::new(vec![Matrix::<f64>::identity(1); 25]).unwrap();
        assert!(matches!(balance_exact(&inst), Err(Error::ResourceLimit { .. })));
    }
}
