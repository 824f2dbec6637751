//! Monte Carlo harness: margin concentration, threshold windows, discrepancy
//! scaling and perceptron capacity.

mod concentration;
mod disc;
mod perceptron;
mod threshold;

pub use concentration::{block_experiment, run_concentration, ConcentrationReport, TrialRecord};
pub use disc::{disc_scaling, DiscRow};
pub use perceptron::{perceptron_capacity, perceptron_margin_curve, PerceptronCurve};
pub use threshold::{run_threshold, threshold_from_margins, ThresholdReport};

use std::fmt;

use crate::error::{invalid, Result};
use crate::margin::SphereOptions;
use crate::scalar::Real;
use crate::sets::{ConstraintSet, CoordinateSet, Exponent, FeasibleSet, Symmetry};

/// Description of `Q`, instantiated at a concrete dimension.
#[derive(Debug, Clone, PartialEq)]
pub enum FeasibleSpec {
    Hypercube,
    Sphere,
    /// First standard basis vector.
    Basis,
    Singleton(Vec<f64>),
    /// Integer range `[lo, hi]` in every coordinate.
    Lattice { lo: i64, hi: i64 },
}

impl FeasibleSpec {
    pub fn build<T: Real>(&self, n: usize) -> Result<FeasibleSet<T>> {
        match self {
            FeasibleSpec::Hypercube => FeasibleSet::hypercube(n),
            FeasibleSpec::Sphere => FeasibleSet::sphere(n),
            FeasibleSpec::Basis => {
                let mut e1 = vec![T::zero(); n];
                if let Some(x) = e1.first_mut() {
                    *x = T::one();
                }
                FeasibleSet::singleton(e1)
            }
            FeasibleSpec::Singleton(u) => {
                if u.len() != n {
                    return invalid(format!("singleton has {} coordinates but N = {n}", u.len()));
                }
                FeasibleSet::singleton(u.iter().map(|&x| T::lit(x)).collect())
            }
            FeasibleSpec::Lattice { lo, hi } => FeasibleSet::lattice_box(vec![(*lo, *hi); n]),
        }
    }
}

impl fmt::Display for FeasibleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeasibleSpec::Hypercube => f.write_str("hypercube"),
            FeasibleSpec::Sphere => f.write_str("sphere"),
            FeasibleSpec::Basis => f.write_str("basis"),
            FeasibleSpec::Singleton(u) => {
                let parts: Vec<String> = u.iter().map(f64::to_string).collect();
                write!(f, "singleton({})", parts.join(","))
            }
            FeasibleSpec::Lattice { lo, hi } => write!(f, "lattice({lo},{hi})"),
        }
    }
}

/// Description of `E`, instantiated at a concrete dimension.
#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintSpec {
    Zero,
    /// `[k, inf)^M`.
    AtLeast(f64),
    /// `(-inf, k]^M`.
    AtMost(f64),
    Ball(f64),
    /// Block product alternating `[k, inf)` and `(-inf, -k]` factors.
    Blocks { sizes: Vec<usize>, k: f64 },
}

impl ConstraintSpec {
    pub fn build<T: Real>(&self, m: usize) -> Result<ConstraintSet<T>> {
        match self {
            ConstraintSpec::Zero => Ok(ConstraintSet::zero(m)),
            ConstraintSpec::AtLeast(k) => ConstraintSet::at_least(m, T::lit(*k)),
            ConstraintSpec::AtMost(k) => ConstraintSet::at_most(m, T::lit(*k)),
            ConstraintSpec::Ball(r) => ConstraintSet::ball(m, T::lit(*r)),
            ConstraintSpec::Blocks { sizes, k } => {
                let total: usize = sizes.iter().sum();
                if total != m {
                    return invalid(format!("block sizes sum to {total} but M = {m}"));
                }
                let blocks = sizes
                    .iter()
                    .enumerate()
                    .map(|(i, &size)| {
                        let coords = if i % 2 == 0 {
                            CoordinateSet::at_least(T::lit(*k))?
                        } else {
                            CoordinateSet::at_most(T::lit(-*k))?
                        };
                        Ok(ConstraintSet::interval_product(size, coords))
                    })
                    .collect::<Result<Vec<_>>>()?;
                ConstraintSet::block_product(blocks)
            }
        }
    }
}

impl fmt::Display for ConstraintSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstraintSpec::Zero => f.write_str("zero"),
            ConstraintSpec::AtLeast(k) => write!(f, "at-least({k})"),
            ConstraintSpec::AtMost(k) => write!(f, "at-most({k})"),
            ConstraintSpec::Ball(r) => write!(f, "ball({r})"),
            ConstraintSpec::Blocks { sizes, k } => {
                let parts: Vec<String> = sizes.iter().map(usize::to_string).collect();
                write!(f, "blocks({};{k})", parts.join(","))
            }
        }
    }
}

/// One Monte Carlo experiment over Gaussian `M x N` matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub feasible: FeasibleSpec,
    pub constraint: ConstraintSpec,
    pub q: Exponent<f64>,
    /// Rows of `A`.
    pub m: usize,
    /// Columns of `A`.
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub sphere: SphereOptions,
    /// Collect margin gradients for the Poincaré and log-ratio bounds (exact solvers only).
    pub collect_gradients: bool,
    /// Bootstrap resamples for the variance interval.
    pub bootstrap: usize,
}

impl ExperimentConfig {
    /// Gaussian `M x N` problem with default solver settings and gradient collection on.
    pub fn new(feasible: FeasibleSpec, constraint: ConstraintSpec, q: Exponent<f64>, m: usize, n: usize) -> Self {
        Self {
            feasible,
            constraint,
            q,
            m,
            n,
            trials: 100,
            seed: 0,
            sphere: SphereOptions::default(),
            collect_gradients: true,
            bootstrap: 1000,
        }
    }

    pub fn with_trials(mut self, trials: usize) -> Self {
        self.trials = trials;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < 2 {
            return invalid("at least two trials are required");
        }
        if self.m == 0 || self.n == 0 {
            return invalid("M and N must be positive");
        }
        let q_set = self.feasible.build::<f64>(self.n)?;
        let e = self.constraint.build::<f64>(self.m)?;
        e.check_exponent(self.q)?;
        if q_set.is_enumerable() {
            q_set.checked_count(crate::sets::DEFAULT_ENUMERATION_CAP)?;
        }
        Ok(())
    }

    pub(crate) fn block_sizes(&self) -> Option<Vec<usize>> {
        match self.constraint.build::<f64>(self.m).ok()?.symmetry() {
            Symmetry::Blocks(sizes) => Some(sizes),
            _ => None,
        }
    }
}
