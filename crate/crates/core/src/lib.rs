//! Numerical laboratory for the `l^q`-margin of random feasibility problems.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar. Monte Carlo statistics and CLI reports use `f64`.

// `!(x > y)` is used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod margin;
pub mod matrix_balancing;
pub mod rng;
pub mod scalar;
pub mod sets;
pub mod stats;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Matrix64 = linalg::Matrix<f64>;
pub type Matrix32 = linalg::Matrix<f32>;
pub type Exponent64 = sets::Exponent<f64>;
pub type Exponent32 = sets::Exponent<f32>;
pub type FeasibleSet64 = sets::FeasibleSet<f64>;
pub type FeasibleSet32 = sets::FeasibleSet<f32>;
pub type ConstraintSet64 = sets::ConstraintSet<f64>;
pub type ConstraintSet32 = sets::ConstraintSet<f32>;
pub type MarginResult64 = margin::MarginResult<f64>;
pub type MarginResult32 = margin::MarginResult<f32>;
pub type MarginGradient64 = margin::MarginGradient<f64>;
pub type MarginGradient32 = margin::MarginGradient<f32>;
pub type BoundReport64 = bounds::BoundReport<f64>;
pub type BalancingInstance64 = matrix_balancing::BalancingInstance<f64>;
pub type BalancingInstance32 = matrix_balancing::BalancingInstance<f32>;
pub type BalancingResult64 = matrix_balancing::BalancingResult<f64>;
pub type BalancingResult32 = matrix_balancing::BalancingResult<f32>;
