use rayon::prelude::*;

use crate::bounds::{bound_report, BoundReport};
use crate::error::{invalid, Error, Result};
use crate::linalg::Matrix;
use crate::margin::{
    effective_exponent, margin_continuous, margin_exact_multi, margin_gradient, margin_sphere_l2,
    MarginGradient,
};
use crate::rng::{sample_gaussian_matrix, trial_seed, RandomStream};
use crate::scalar::Real;
use crate::sets::{ConstraintSet, Exponent, FeasibleSet, DEFAULT_ENUMERATION_CAP};
use crate::stats;

use super::ExperimentConfig;

/// Trial index reserved for the bootstrap stream; `trial_seed` is injective in
/// the trial index, so it never collides with a real trial.
const BOOTSTRAP_TRIAL: u64 = u64::MAX;

/// Outcome of one Monte Carlo trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    /// Seed of the trial's sub-stream.
    pub seed: u64,
    pub margin: f64,
    /// Margin at `q' = effective_exponent(M, inf)` when `q = inf` and `Q` is enumerable.
    pub margin_qprime: Option<f64>,
    /// Gap to the runner-up candidate, for exact solvers.
    pub gap: Option<f64>,
    pub exact: bool,
}

/// Per-trial margins with moments, a variance interval and bound values.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationReport {
    pub records: Vec<TrialRecord>,
    /// Margins of the successful trials in trial order.
    pub margins: Vec<f64>,
    pub failed: usize,
    pub mean: f64,
    pub mean_se: f64,
    pub variance: f64,
    pub variance_se: f64,
    /// 95% percentile-bootstrap interval for the variance.
    pub variance_ci: (f64, f64),
    pub bounds: BoundReport<f64>,
    pub var_over_theorem1: f64,
    pub mean_over_sd: f64,
    /// Exponent the gradients were evaluated at, if any were collected.
    pub gradient_q: Option<Exponent<f64>>,
}

struct TrialOutput<T> {
    record: TrialRecord,
    gradient: Option<MarginGradient<T>>,
}

fn gradient_to_f64<T: Real>(g: MarginGradient<T>) -> MarginGradient<f64> {
    let (m, n) = g.entries.shape();
    MarginGradient {
        entries: Matrix::from_fn(m, n, |i, j| g.entries[(i, j)].to_f64_lossy()),
        sigma_star: g.sigma_star.iter().map(|x| x.to_f64_lossy()).collect(),
        well_defined: g.well_defined,
        q: g.q.cast(),
    }
}

fn run_trial<T: Real>(
    config: &ExperimentConfig,
    q_set: &FeasibleSet<T>,
    e: &ConstraintSet<T>,
    trial: usize,
) -> Result<TrialOutput<T>> {
    let seed = trial_seed(config.seed, trial as u64);
    let mut stream = RandomStream::new(seed);
    let a: Matrix<T> = sample_gaussian_matrix(&mut stream, config.m, config.n)?;
    let q: Exponent<T> = config.q.cast();
    let mut record = TrialRecord {
        trial,
        seed,
        margin: 0.0,
        margin_qprime: None,
        gap: None,
        exact: true,
    };

    if q_set.is_enumerable() {
        let q_prime = effective_exponent(config.m, q);
        let mut qs = vec![q];
        if !q.is_finite() {
            qs.push(q_prime);
        }
        let results = margin_exact_multi(&a, q_set, e, &qs, DEFAULT_ENUMERATION_CAP)?;
        record.margin = results[0].value.to_f64_lossy();
        record.gap = results[0].gap().map(Real::to_f64_lossy);
        record.margin_qprime = results.get(1).map(|r| r.value.to_f64_lossy());
        let gradient = if config.collect_gradients {
            let grad_result = results.last().expect("one result per exponent");
            Some(margin_gradient(&a, grad_result, q_prime)?)
        } else {
            None
        };
        return Ok(TrialOutput { record, gradient });
    }

    let closed_form = matches!(e, ConstraintSet::SingletonZero { .. }) && q.is_two();
    let result = if closed_form {
        margin_sphere_l2(&a)?
    } else {
        margin_continuous(&a, e, q, &config.sphere, &mut stream)?
    };
    if !result.value.is_finite() {
        return Err(Error::NumericalFailure(format!("trial {trial} produced a non-finite margin")));
    }
    record.margin = result.value.to_f64_lossy();
    record.exact = result.exact;
    let gradient = if config.collect_gradients && result.exact {
        Some(margin_gradient(&a, &result, q)?)
    } else {
        None
    };
    Ok(TrialOutput { record, gradient })
}

/// Independent margins over `config.trials` Gaussian matrices.
///
/// Trial `t` draws from the sub-stream seeded by `trial_seed(seed, t)`, so the
/// report does not depend on scheduling or thread count. Failed trials are
/// excluded and counted; more than 1% failures fails the run.
pub fn run_concentration<T: Real>(config: &ExperimentConfig) -> Result<ConcentrationReport> {
    config.validate()?;
    let q_set: FeasibleSet<T> = config.feasible.build(config.n)?;
    let e: ConstraintSet<T> = config.constraint.build(config.m)?;

    let outcomes: Vec<Result<TrialOutput<T>>> = (0..config.trials)
        .into_par_iter()
        .map(|t| run_trial(config, &q_set, &e, t))
        .collect();

    let mut records = Vec::with_capacity(config.trials);
    let mut gradients = Vec::new();
    let mut failures = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(out) => {
                records.push(out.record);
                gradients.extend(out.gradient.map(gradient_to_f64));
            }
            Err(err) => failures.push(err),
        }
    }
    if failures.len() * 100 > config.trials {
        let first = failures.swap_remove(0);
        return Err(match first {
            Error::NumericalFailure(msg) => Error::NumericalFailure(format!(
                "{} of {} trials failed, first: {msg}",
                failures.len() + 1,
                config.trials
            )),
            other => other,
        });
    }
    if records.len() < 2 {
        return invalid("fewer than two trials succeeded");
    }

    let margins: Vec<f64> = records.iter().map(|r| r.margin).collect();
    let mean = stats::mean(&margins);
    let variance = stats::variance(&margins);
    let mut boot = RandomStream::new(trial_seed(config.seed, BOOTSTRAP_TRIAL));
    let variance_ci = stats::bootstrap_variance_ci(&margins, config.bootstrap.max(1), 0.05, &mut boot)?;
    let gradient_q = gradients.first().map(|g| g.q);
    let block_sizes = config.block_sizes();
    let bounds = bound_report(config.m, config.q, block_sizes.as_deref(), &gradients)?;
    let sd = variance.sqrt();

    Ok(ConcentrationReport {
        failed: config.trials - records.len(),
        mean,
        mean_se: stats::mean_se(&margins),
        variance,
        variance_se: stats::variance_se(&margins),
        variance_ci,
        var_over_theorem1: variance / bounds.theorem1_value,
        mean_over_sd: if sd > 0.0 { mean / sd } else { f64::INFINITY },
        bounds,
        gradient_q,
        records,
        margins,
    })
}

/// [`run_concentration`] for a block-symmetric `E`; the report carries the block bound.
pub fn block_experiment<T: Real>(config: &ExperimentConfig) -> Result<ConcentrationReport> {
    if config.block_sizes().is_none() {
        return invalid("block experiment needs a block-symmetric constraint set");
    }
    run_concentration::<T>(config)
}
