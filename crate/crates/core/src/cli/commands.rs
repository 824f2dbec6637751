use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::experiments::{
    block_experiment, disc_scaling, perceptron_capacity, perceptron_margin_curve, run_concentration,
    run_threshold, ConcentrationReport, ExperimentConfig, FeasibleSpec,
};
use crate::linalg::Matrix;
use crate::margin::{
    effective_exponent, finite_diff_gradient, margin_continuous, margin_exact, margin_gradient,
    margin_sphere_l2, MarginResult, SphereOptions,
};
use crate::matrix_balancing::balancing_variance_experiment;
use crate::rng::{sample_gaussian_matrix, trial_seed, RandomStream};
use crate::sets::{ConstraintSet, Exponent, Symmetry};

use super::config::Settings;
use super::output::{num, opt, RunManifest, Table};

const DEFAULT_OUT: &str = "results";

pub(super) fn apply_defaults(command: &str, s: &mut Settings) -> Result<()> {
    s.set_default("out", DEFAULT_OUT)?;
    match command {
        "margin" | "concentrate" | "threshold" | "gradcheck" => {
            s.set_default("q", "inf")?;
            s.set_default("set_q", "hypercube")?;
            s.set_default("set_e", "zero")?;
            if matches!(s.get("set_e"), Some("at-least" | "at_least" | "at-most" | "at_most" | "blocks")) {
                s.set_default("k", "0")?;
            }
            if s.get("set_q") == Some("sphere") {
                s.set_default("restarts", &SphereOptions::default().restarts.to_string())?;
                s.set_default("steps", &SphereOptions::default().steps.to_string())?;
            }
            if command != "margin" {
                s.set_default("trials", "100")?;
            }
            if matches!(command, "concentrate" | "threshold") {
                s.set_default("bootstrap", "1000")?;
            }
            if command == "gradcheck" {
                s.set_default("h", "1e-5")?;
            }
        }
        "disc-scaling" => {
            s.set_default("q", "inf")?;
            s.set_default("trials", "100")?;
        }
        "perceptron" => {
            s.set_default("set_q", "hypercube")?;
            s.set_default("trials", "100")?;
            s.set_default("k_grid", "-1,-0.5,0,0.5,1")?;
        }
        "balance" => {
            s.set_default("trials", "100")?;
        }
        other => return Err(Error::Config(format!("unknown command '{other}'"))),
    }
    Ok(())
}

fn experiment(s: &Settings) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::new(s.feasible()?, s.constraint()?, s.exponent()?, s.count("m")?, s.count("n")?)
        .with_seed(s.u64("seed")?);
    if s.has("trials") {
        cfg.trials = s.count("trials")?;
    }
    if s.has("bootstrap") {
        cfg.bootstrap = s.count("bootstrap")?;
    }
    if s.has("restarts") {
        cfg.sphere.restarts = s.count("restarts")?;
    }
    if s.has("steps") {
        cfg.sphere.steps = s.count("steps")?;
    }
    Ok(cfg)
}

pub(super) fn dispatch(command: &str, s: &Settings, out: &Path, manifest: &RunManifest) -> Result<String> {
    match command {
        "margin" => margin(s, out, manifest),
        "concentrate" => concentrate(s, out, manifest),
        "threshold" => threshold(s, out, manifest),
        "disc-scaling" => disc(s, out, manifest),
        "perceptron" => perceptron(s, out, manifest),
        "balance" => balance(s, out, manifest),
        "gradcheck" => gradcheck(s, out, manifest),
        other => Err(Error::Config(format!("unknown command '{other}'"))),
    }
}

fn solve_single(cfg: &ExperimentConfig, a: &Matrix<f64>, stream: &mut RandomStream) -> Result<MarginResult<f64>> {
    let q_set = cfg.feasible.build::<f64>(cfg.n)?;
    let e: ConstraintSet<f64> = cfg.constraint.build(cfg.m)?;
    if q_set.is_enumerable() {
        margin_exact(a, &q_set, &e, cfg.q)
    } else if matches!(e, ConstraintSet::SingletonZero { .. }) && cfg.q.is_two() {
        margin_sphere_l2(a)
    } else {
        margin_continuous(a, &e, cfg.q, &cfg.sphere, stream)
    }
}

fn margin(s: &Settings, out: &Path, manifest: &RunManifest) -> Result<String> {
    let cfg = experiment(s)?;
    let seed = trial_seed(cfg.seed, 0);
    let mut stream = RandomStream::new(seed);
    let a: Matrix<f64> = sample_gaussian_matrix(&mut stream, cfg.m, cfg.n)?;
    let r = solve_single(&cfg, &a, &mut stream)?;

    let mut summary = Table::new(&["config_hash", "margin", "exact", "gap", "q"]);
    summary.push(vec![
        manifest.config_hash.clone(),
        num(r.value),
        r.exact.to_string(),
        opt(r.gap()),
        r.q_used.to_string(),
    ]);
    summary.write(&out.join("summary.csv"), manifest)?;
    let mut trials = Table::new(&["trial", "seed", "margin"]);
    trials.push(vec!["0".into(), seed.to_string(), num(r.value)]);
    trials.write(&out.join("trials.csv"), manifest)?;
    Ok(format!("margin = {} (exact: {})\n", num(r.value), r.exact))
}

const SUMMARY_COLUMNS: [&str; 11] = [
    "config_hash",
    "mean",
    "var",
    "var_ci_lo",
    "var_ci_hi",
    "theorem1_bound",
    "block_bound",
    "poincare_rhs",
    "l1l2_rhs",
    "sum_a2",
    "sum_b2",
];

fn summary_row(hash: &str, r: &ConcentrationReport) -> Vec<String> {
    let b = &r.bounds;
    vec![
        hash.to_string(),
        num(r.mean),
        num(r.variance),
        num(r.variance_ci.0),
        num(r.variance_ci.1),
        num(b.theorem1_value),
        opt(b.block_value),
        opt(b.poincare_rhs),
        opt(b.l1l2_rhs),
        opt(b.sum_a2),
        opt(b.sum_b2),
        r.records.len().to_string(),
        r.failed.to_string(),
        num(r.variance_se),
        num(r.mean_se),
        num(r.var_over_theorem1),
        num(r.mean_over_sd),
        r.gradient_q.map(|q| q.to_string()).unwrap_or_default(),
    ]
}

const SUMMARY_EXTRAS: [&str; 7] = [
    "trials",
    "failed",
    "var_se",
    "mean_se",
    "var_over_theorem1",
    "mean_over_sd",
    "gradient_q",
];

fn write_trials(out: &Path, manifest: &RunManifest, r: &ConcentrationReport) -> Result<()> {
    let mut trials = Table::new(&["trial", "seed", "margin"]);
    for rec in &r.records {
        trials.push(vec![rec.trial.to_string(), rec.seed.to_string(), num(rec.margin)]);
    }
    trials.write(&out.join("trials.csv"), manifest)
}

fn run_report(s: &Settings) -> Result<ConcentrationReport> {
    let cfg = experiment(s)?;
    let blocks = matches!(cfg.constraint.build::<f64>(cfg.m)?.symmetry(), Symmetry::Blocks(_));
    if blocks {
        block_experiment::<f64>(&cfg)
    } else {
        run_concentration::<f64>(&cfg)
    }
}

fn describe(r: &ConcentrationReport) -> String {
    let mut text = format!(
        "trials = {} (failed {})\nmean = {}\nvar = {} [{}, {}]\ntheorem1_bound = {}\n",
        r.records.len(),
        r.failed,
        num(r.mean),
        num(r.variance),
        num(r.variance_ci.0),
        num(r.variance_ci.1),
        num(r.bounds.theorem1_value)
    );
    if let Some(p) = r.bounds.poincare_rhs {
        let _ = writeln!(text, "poincare_rhs = {}", num(p));
    }
    text
}

fn concentrate(s: &Settings, out: &Path, manifest: &RunManifest) -> Result<String> {
    let r = run_report(s)?;
    let mut summary = Table::new(&[&SUMMARY_COLUMNS[..], &SUMMARY_EXTRAS[..]].concat());
    summary.push(summary_row(&manifest.config_hash, &r));
    summary.write(&out.join("summary.csv"), manifest)?;
    write_trials(out, manifest, &r)?;
    Ok(describe(&r))
}

fn threshold(s: &Settings, out: &Path, manifest: &RunManifest) -> Result<String> {
    let cfg = experiment(s)?;
    let grid = if s.has("delta_grid") { Some(s.reals("delta_grid")?) } else { None };
    let (r, t) = run_threshold::<f64>(&cfg, grid.as_deref())?;
    let columns = [
        &SUMMARY_COLUMNS[..],
        &SUMMARY_EXTRAS[..],
        &["delta_05", "delta_95", "window", "out_of_range_low", "out_of_range_high"][..],
    ]
    .concat();
    let mut summary = Table::new(&columns);
    let mut row = summary_row(&manifest.config_hash, &r);
    row.extend([
        opt(t.delta_05),
        opt(t.delta_95),
        opt(t.window),
        t.out_of_range_low.to_string(),
        t.out_of_range_high.to_string(),
    ]);
    summary.push(row);
    summary.write(&out.join("summary.csv"), manifest)?;
    write_trials(out, manifest, &r)?;
    let mut curve = Table::new(&["delta", "freq_raw", "freq_isotonic"]);
    for k in 0..t.grid.len() {
        curve.push(vec![num(t.grid[k]), num(t.freq_raw[k]), num(t.freq_isotonic[k])]);
    }
    curve.write(&out.join("threshold.csv"), manifest)?;
    let mut text = describe(&r);
    match t.window {
        Some(w) => {
            let _ = writeln!(text, "window = {}", num(w));
        }
        None => {
            let _ = writeln!(
                text,
                "window: grid does not span the transition (low: {}, high: {})",
                t.out_of_range_low, t.out_of_range_high
            );
        }
    }
    Ok(text)
}

fn disc(s: &Settings, out: &Path, manifest: &RunManifest) -> Result<String> {
    let rows = disc_scaling(&s.counts("n_list")?, s.exponent()?, s.count("trials")?, s.u64("seed")?)?;
    let mut summary = Table::new(&["config_hash", "n", "mean", "sd", "ratio", "mean_se"]);
    let mut trials = Table::new(&["n", "trial", "seed", "margin"]);
    let mut text = String::new();
    for row in &rows {
        summary.push(vec![
            manifest.config_hash.clone(),
            row.n.to_string(),
            num(row.mean),
            num(row.sd),
            num(row.ratio),
            num(row.mean_se),
        ]);
        for rec in &row.records {
            trials.push(vec![row.n.to_string(), rec.trial.to_string(), rec.seed.to_string(), num(rec.margin)]);
        }
        let _ = writeln!(text, "N = {}: mean = {}, sd = {}, ratio = {}", row.n, num(row.mean), num(row.sd), num(row.ratio));
    }
    summary.write(&out.join("summary.csv"), manifest)?;
    trials.write(&out.join("trials.csv"), manifest)?;
    Ok(text)
}

fn perceptron(s: &Settings, out: &Path, manifest: &RunManifest) -> Result<String> {
    let (m, n, count, seed) = (s.count("m")?, s.count("n")?, s.count("trials")?, s.u64("seed")?);
    let q_set = s.feasible()?.build::<f64>(n)?;
    if matches!(s.feasible()?, FeasibleSpec::Sphere) {
        return Err(Error::Config("perceptron needs an enumerable set_q".into()));
    }
    let k_grid = s.reals("k_grid")?;
    let mut trials = Table::new(&["trial", "seed", "capacity", "k_c"]);
    let mut margin_sums = vec![0.0; k_grid.len()];
    let mut zero_counts = vec![0usize; k_grid.len()];
    let mut capacities = Vec::with_capacity(count);
    let mut kcs = Vec::with_capacity(count);
    for t in 0..count {
        let tseed = trial_seed(seed, t as u64);
        let mut stream = RandomStream::new(tseed);
        let a: Matrix<f64> = sample_gaussian_matrix(&mut stream, m, n)?;
        let rows: Vec<Vec<f64>> = (0..m).map(|i| a.row(i).to_vec()).collect();
        let cap = perceptron_capacity(&rows, &q_set)?;
        let curve = perceptron_margin_curve(&a, &q_set, &k_grid)?;
        for (j, &v) in curve.margins.iter().enumerate() {
            margin_sums[j] += v;
            zero_counts[j] += usize::from(v == 0.0);
        }
        let alpha = *cap.numer() as f64 / *cap.denom() as f64;
        capacities.push(alpha);
        kcs.push(curve.k_c);
        trials.push(vec![t.to_string(), tseed.to_string(), num(alpha), num(curve.k_c)]);
    }
    let mean_cap = crate::stats::mean(&capacities);
    let mean_kc = crate::stats::mean(&kcs);
    let mut summary = Table::new(&["config_hash", "trials", "mean_capacity", "mean_k_c", "sd_k_c"]);
    summary.push(vec![
        manifest.config_hash.clone(),
        count.to_string(),
        num(mean_cap),
        num(mean_kc),
        num(crate::stats::std_dev(&kcs)),
    ]);
    summary.write(&out.join("summary.csv"), manifest)?;
    trials.write(&out.join("trials.csv"), manifest)?;
    let mut curve = Table::new(&["k", "mean_margin", "freq_feasible"]);
    for (j, &k) in k_grid.iter().enumerate() {
        curve.push(vec![
            num(k),
            num(margin_sums[j] / count as f64),
            num(zero_counts[j] as f64 / count as f64),
        ]);
    }
    curve.write(&out.join("curve.csv"), manifest)?;
    Ok(format!("mean capacity = {}\nmean K_c = {}\n", num(mean_cap), num(mean_kc)))
}

fn balance(s: &Settings, out: &Path, manifest: &RunManifest) -> Result<String> {
    let (d, big_n) = (s.count("d")?, s.count("big_n")?);
    let r = balancing_variance_experiment(d, big_n, s.count("trials")?, s.u64("seed")?)?;
    let mut summary = Table::new(&[
        "config_hash",
        "mean",
        "var",
        "var_ci_lo",
        "var_ci_hi",
        "poincare_bound",
        "ratio",
        "var_se",
        "mean_se",
        "exact",
        "d",
        "N",
    ]);
    summary.push(vec![
        manifest.config_hash.clone(),
        num(r.mean),
        num(r.variance),
        num(r.variance_ci.0),
        num(r.variance_ci.1),
        num(r.poincare_bound),
        num(r.ratio),
        num(r.variance_se),
        num(r.mean_se),
        r.exact.to_string(),
        d.to_string(),
        big_n.to_string(),
    ]);
    summary.write(&out.join("summary.csv"), manifest)?;
    let mut trials = Table::new(&["trial", "seed", "disc", "d", "N", "lambda_top"]);
    for rec in &r.records {
        trials.push(vec![
            rec.trial.to_string(),
            rec.seed.to_string(),
            num(rec.disc),
            d.to_string(),
            big_n.to_string(),
            num(rec.lambda_top),
        ]);
    }
    trials.write(&out.join("trials.csv"), manifest)?;
    Ok(format!(
        "mean disc = {}\nvar = {} (1/d = {})\nmean/(sd sqrt(d)) = {}\n",
        num(r.mean),
        num(r.variance),
        num(r.poincare_bound),
        num(r.ratio)
    ))
}

fn gradcheck(s: &Settings, out: &Path, manifest: &RunManifest) -> Result<String> {
    let cfg = experiment(s)?;
    let h = s.real("h")?;
    let q_set = cfg.feasible.build::<f64>(cfg.n)?;
    let e: ConstraintSet<f64> = cfg.constraint.build(cfg.m)?;
    let q = effective_exponent(cfg.m, cfg.q);
    let mut trials = Table::new(&["trial", "seed", "margin", "gap", "checked", "max_abs_deviation"]);
    let (mut checked, mut worst) = (0usize, None::<f64>);
    for t in 0..cfg.trials {
        let seed = trial_seed(cfg.seed, t as u64);
        let mut stream = RandomStream::new(seed);
        let a: Matrix<f64> = sample_gaussian_matrix(&mut stream, cfg.m, cfg.n)?;
        let exp_cfg = ExperimentConfig { q, ..cfg.clone() };
        let r = solve_single(&exp_cfg, &a, &mut stream)?;
        let unique = r.gap().is_none_or(|g| g > 10.0 * h);
        let deviation = if unique {
            let g = margin_gradient(&a, &r, q)?;
            let fd = finite_diff_gradient(&a, &q_set, &e, q, h)?;
            let dev = g
                .entries
                .as_slice()
                .iter()
                .zip(fd.as_slice())
                .map(|(x, y)| (x - y.abs()).abs())
                .fold(0.0, f64::max);
            checked += 1;
            worst = Some(worst.map_or(dev, |w: f64| w.max(dev)));
            Some(dev)
        } else {
            None
        };
        trials.push(vec![
            t.to_string(),
            seed.to_string(),
            num(r.value),
            opt(r.gap()),
            usize::from(unique).to_string(),
            opt(deviation),
        ]);
    }
    let mut summary = Table::new(&["config_hash", "q", "trials", "checked", "max_abs_deviation"]);
    summary.push(vec![
        manifest.config_hash.clone(),
        Exponent::to_string(&q),
        cfg.trials.to_string(),
        checked.to_string(),
        opt(worst),
    ]);
    summary.write(&out.join("summary.csv"), manifest)?;
    trials.write(&out.join("trials.csv"), manifest)?;
    Ok(format!(
        "checked {checked} of {} instances at q = {q}; max |deviation| = {}\n",
        cfg.trials,
        opt(worst)
    ))
}
