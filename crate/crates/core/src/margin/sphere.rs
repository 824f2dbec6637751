//! Margins over the unit sphere.

use crate::error::{invalid, Error, Result};
use crate::linalg::{dot, norm2, right_singular, Matrix};
use crate::rng::RandomStream;
use crate::scalar::Real;
use crate::sets::{ConstraintSet, Exponent, FeasibleSet};

use super::{check_problem, MarginResult};

/// Closed form for `E = {0}`, `q = 2`: the smallest singular value of `A` and
/// its right singular vector.
pub fn margin_sphere_l2<T: Real>(a: &Matrix<T>) -> Result<MarginResult<T>> {
    let e = ConstraintSet::zero(a.rows());
    check_problem(a, &FeasibleSet::sphere(a.cols())?, &e)?;
    let svd = right_singular(a)?;
    let k = svd.argmin();
    let sigma = svd.vectors.column(k);
    MarginResult::from_point(a, &e, Exponent::Finite(T::lit(2.0)), sigma, true)
}

/// Step schedule and restart budget for [`margin_continuous`].
#[derive(Debug, Clone, PartialEq)]
pub struct SphereOptions {
    pub restarts: usize,
    /// Subgradient steps per restart.
    pub steps: usize,
    pub initial_step: f64,
    /// Step `t` has length `initial_step * decay^t`.
    pub decay: f64,
    /// Adaptive-step descent iterations spent refining the best restart.
    pub polish_steps: usize,
}

impl Default for SphereOptions {
    fn default() -> Self {
        Self {
            restarts: 32,
            steps: 200,
            initial_step: 0.5,
            decay: 0.995,
            polish_steps: 5000,
        }
    }
}

/// Objective `d_q(A sigma, E)` and its Riemannian subgradient on the sphere.
struct SphereObjective<'a, T> {
    a: &'a Matrix<T>,
    e: &'a ConstraintSet<T>,
    q: Exponent<T>,
    residual: Vec<T>,
}

impl<'a, T: Real> SphereObjective<'a, T> {
    fn value(&mut self, sigma: &[T]) -> Result<T> {
        let x = self.a.mul_vec(sigma);
        self.e.residual_into(&x, &mut self.residual);
        let v = crate::sets::lq_norm(&self.residual, self.q);
        if v.is_nan() {
            return Err(Error::NumericalFailure("objective evaluated to NaN".into()));
        }
        Ok(v)
    }

    /// Tangent subgradient at `sigma`, using the residual from the last `value` call.
    fn tangent_subgradient(&self, sigma: &[T], value: T) -> Vec<T> {
        let m = self.residual.len();
        let mut g = vec![T::zero(); m];
        if value > T::zero() {
            match self.q {
                Exponent::Infinity => {
                    let mut arg = 0;
                    for i in 1..m {
                        if self.residual[i].abs() > self.residual[arg].abs() {
                            arg = i;
                        }
                    }
                    g[arg] = self.residual[arg].signum();
                }
                Exponent::Finite(q) if self.e.is_coordinatewise() => {
                    for (gi, &vi) in g.iter_mut().zip(&self.residual) {
                        *gi = vi.signum() * (vi.abs() / value).powf(q - T::one());
                    }
                }
                Exponent::Finite(_) => {
                    // Euclidean ball, q = 2
                    for (gi, &vi) in g.iter_mut().zip(&self.residual) {
                        *gi = vi / value;
                    }
                }
            }
        }
        let mut grad = self.a.tr_mul_vec(&g);
        let radial = dot(&grad, sigma);
        for (gr, &s) in grad.iter_mut().zip(sigma) {
            *gr -= radial * s;
        }
        grad
    }
}

fn retract<T: Real>(sigma: &[T], direction: &[T], step: T) -> Result<Vec<T>> {
    let mut out: Vec<T> = sigma.iter().zip(direction).map(|(&s, &d)| s - step * d).collect();
    let norm = norm2(&out);
    if !norm.is_finite() || norm == T::zero() {
        return Err(Error::NumericalFailure("iterate left the sphere".into()));
    }
    out.iter_mut().for_each(|x| *x /= norm);
    Ok(out)
}

fn unit<T: Real>(v: &[T]) -> Option<Vec<T>> {
    let n = norm2(v);
    (n > T::zero() && n.is_finite()).then(|| v.iter().map(|&x| x / n).collect())
}

/// Heuristic `min_{|sigma|=1} d_q(A sigma, E)`.
///
/// Each restart runs normalized projected subgradient descent from a uniform
/// random point, renormalizing to the sphere after every step. The best point
/// is then refined by descent with a doubling/halving step. The returned value
/// is attained by the returned `sigma_star`, so it upper-bounds the margin.
pub fn margin_continuous<T: Real>(
    a: &Matrix<T>,
    e: &ConstraintSet<T>,
    q: Exponent<T>,
    options: &SphereOptions,
    stream: &mut RandomStream,
) -> Result<MarginResult<T>> {
    let n = a.cols();
    check_problem(a, &FeasibleSet::sphere(n)?, e)?;
    e.check_exponent(q)?;
    if options.restarts == 0 {
        return invalid("at least one restart is required");
    }
    let mut obj = SphereObjective {
        a,
        e,
        q,
        residual: vec![T::zero(); a.rows()],
    };

    let mut best: Option<(T, Vec<T>)> = None;
    for _ in 0..options.restarts {
        let mut sigma: Vec<T> = stream.unit_vector(n);
        let mut value = obj.value(&sigma)?;
        let mut local = (value, sigma.clone());
        let mut step = options.initial_step;
        for _ in 0..options.steps {
            let grad = obj.tangent_subgradient(&sigma, value);
            let Some(dir) = unit(&grad) else { break };
            sigma = retract(&sigma, &dir, T::lit(step))?;
            value = obj.value(&sigma)?;
            if value < local.0 {
                local = (value, sigma.clone());
            }
            step *= options.decay;
        }
        if best.as_ref().is_none_or(|b| local.0 < b.0) {
            best = Some(local);
        }
    }

    let (mut value, mut sigma) = best.expect("at least one restart");
    let mut step = T::lit(options.initial_step * options.decay.powi(options.steps as i32));
    let floor = T::epsilon() * T::epsilon();
    for _ in 0..options.polish_steps {
        if value == T::zero() || step < floor {
            break;
        }
        obj.value(&sigma)?;
        let grad = obj.tangent_subgradient(&sigma, value);
        let Some(dir) = unit(&grad) else { break };
        let candidate = retract(&sigma, &dir, step)?;
        let cv = obj.value(&candidate)?;
        if cv < value {
            value = cv;
            sigma = candidate;
            step = (step + step).min(T::one());
        } else {
            step *= T::lit(0.5);
        }
    }
    MarginResult::from_point(a, e, q, sigma, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::sample_gaussian_matrix;
    use approx::assert_relative_eq;

    #[test]
    fn diagonal_closed_form() {
        let a = Matrix::<f64>::diagonal(&[2.0, 3.0]);
        let r = margin_sphere_l2(&a).unwrap();
        assert_relative_eq!(r.value, 2.0, epsilon = 1e-14);
        assert_relative_eq!(r.sigma_star[0].abs(), 1.0, epsilon = 1e-14);
        assert!(r.exact);
    }

    #[test]
    fn zero_matrix_has_zero_margin() {
        let r = margin_sphere_l2(&Matrix::<f64>::zeros(3, 3)).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn heuristic_matches_closed_form_on_5x5() {
        let mut s = RandomStream::new(31);
        let a: Matrix<f64> = sample_gaussian_matrix(&mut s, 5, 5).unwrap();
        let exact = margin_sphere_l2(&a).unwrap();
        let opts = SphereOptions {
            restarts: 50,
            ..SphereOptions::default()
        };
        let heur = margin_continuous(&a, &ConstraintSet::zero(5), Exponent::Finite(2.0), &opts, &mut s).unwrap();
        assert!(!heur.exact);
        assert!((heur.value - exact.value).abs() <= 1e-6, "{} vs {}", heur.value, exact.value);
    }

    /// Dense grid over the unit circle as an independent oracle.
    #[test]
    fn circle_sup_margin_matches_grid() {
        let mut s = RandomStream::new(4);
        for _ in 0..5 {
            let a: Matrix<f64> = sample_gaussian_matrix(&mut s, 2, 2).unwrap();
            let e = ConstraintSet::zero(2);
            let heur = margin_continuous(&a, &e, Exponent::Infinity, &SphereOptions::default(), &mut s).unwrap();
            let grid = (0..100_000)
                .map(|k| {
                    let t = 2.0 * std::f64::consts::PI * k as f64 / 100_000.0;
                    let x = a.mul_vec(&[t.cos(), t.sin()]);
                    x[0].abs().max(x[1].abs())
                })
                .fold(f64::INFINITY, f64::min);
            assert!((heur.value - grid).abs() <= 1e-4, "{} vs {grid}", heur.value);
        }
    }

    #[test]
    fn lowering_the_bound_cannot_lower_the_margin() {
        let mut s = RandomStream::new(6);
        let mut a: Matrix<f64> = sample_gaussian_matrix(&mut s, 4, 3).unwrap();
        for j in 0..3 {
            a[(2, j)] = 0.0;
        }
        let opts = SphereOptions::default();
        let loose = ConstraintSet::rectangle(vec![0.0; 4]).unwrap();
        let tight = ConstraintSet::rectangle(vec![-0.5; 4]).unwrap();
        let r_loose = margin_continuous(&a, &loose, Exponent::Infinity, &opts, &mut RandomStream::new(1)).unwrap();
        let r_tight = margin_continuous(&a, &tight, Exponent::Infinity, &opts, &mut RandomStream::new(1)).unwrap();
        assert!(r_loose.value <= r_tight.value + 1e-9);
        // the zero row can never reach -0.5
        assert!(r_tight.value >= 0.5 - 1e-12);
    }

    #[test]
    fn ball_constraint_supported_at_q2() {
        let mut s = RandomStream::new(2);
        let a: Matrix<f64> = sample_gaussian_matrix(&mut s, 3, 3).unwrap();
        let e = ConstraintSet::ball(3, 0.1).unwrap();
        let r = margin_continuous(&a, &e, Exponent::Finite(2.0), &SphereOptions::default(), &mut s).unwrap();
        let closed = margin_sphere_l2(&a).unwrap().value;
        assert!((r.value - (closed - 0.1).max(0.0)).abs() < 1e-6);
        assert!(margin_continuous(&a, &e, Exponent::Infinity, &SphereOptions::default(), &mut s).is_err());
    }
}
