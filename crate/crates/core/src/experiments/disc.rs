use crate::error::{invalid, Result};
use crate::rng::trial_seed;
use crate::sets::Exponent;

use super::{run_concentration, ConstraintSpec, ExperimentConfig, FeasibleSpec, TrialRecord};

/// Offset separating per-dimension seeds from per-trial seeds.
const DIM_SEED_TAG: u64 = 1 << 40;

/// Discrepancy statistics at one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscRow {
    pub n: usize,
    pub mean: f64,
    pub mean_se: f64,
    pub sd: f64,
    /// `mean / sd`.
    pub ratio: f64,
    pub records: Vec<TrialRecord>,
}

/// `min_sigma |A sigma|_q` over the scaled hypercube for square Gaussian `A`, one row per `N`.
///
/// Dimension `N` runs with seed `trial_seed(seed, 2^40 + N)`.
pub fn disc_scaling(n_list: &[usize], q: Exponent<f64>, trials: usize, seed: u64) -> Result<Vec<DiscRow>> {
    if n_list.is_empty() {
        return invalid("no dimensions given");
    }
    n_list
        .iter()
        .map(|&n| {
            let mut cfg = ExperimentConfig::new(FeasibleSpec::Hypercube, ConstraintSpec::Zero, q, n, n)
                .with_trials(trials)
                .with_seed(trial_seed(seed, DIM_SEED_TAG + n as u64));
            cfg.collect_gradients = false;
            cfg.bootstrap = 1;
            let r = run_concentration::<f64>(&cfg)?;
            let sd = r.variance.sqrt();
            Ok(DiscRow {
                n,
                mean: r.mean,
                mean_se: r.mean_se,
                sd,
                ratio: r.mean_over_sd,
                records: r.records,
            })
        })
        .collect()
}
