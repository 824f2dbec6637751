//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits nonzero
//! if any criterion fails.

use std::time::Instant;

use lqmargin::experiments::{
    disc_scaling, run_concentration, threshold_from_margins, ConcentrationReport, ConstraintSpec,
    ExperimentConfig, FeasibleSpec, TrialRecord,
};
use lqmargin::linalg::Matrix;
use lqmargin::margin::{
    effective_exponent, finite_diff_gradient, margin_continuous, margin_exact, margin_gradient,
    margin_sphere_l2, SphereOptions,
};
use lqmargin::matrix_balancing::{balancing_variance_experiment, eig_gradient, symmetric_eigen};
use lqmargin::rng::{sample_gaussian_matrix, sample_goe, RandomStream};
use lqmargin::sets::{ConstraintSet, Exponent, FeasibleSet};

struct Verdict {
    pass: bool,
    detail: String,
}

/// Concentration runs and `q = inf` records collected across criteria.
#[derive(Default)]
struct Ledger {
    runs: Vec<(String, ConcentrationReport)>,
    sandwich: Vec<(usize, TrialRecord)>,
}

impl Ledger {
    fn record(&mut self, label: String, m: usize, report: ConcentrationReport) -> ConcentrationReport {
        for rec in &report.records {
            if rec.margin_qprime.is_some() {
                self.sandwich.push((m, rec.clone()));
            }
        }
        self.runs.push((label, report.clone()));
        report
    }

    fn run(&mut self, label: String, cfg: &ExperimentConfig) -> ConcentrationReport {
        let report = run_concentration::<f64>(cfg).expect("concentration run");
        self.record(label, cfg.m, report)
    }
}

fn cube(n: usize, q: Exponent<f64>, trials: usize, seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(FeasibleSpec::Hypercube, ConstraintSpec::Zero, q, n, n)
        .with_trials(trials)
        .with_seed(seed);
    cfg.bootstrap = 200;
    cfg
}

fn fq(q: f64) -> Exponent<f64> {
    Exponent::new(q).unwrap()
}

/// Brute force: every sign vector in enumeration order, strict improvement only.
fn brute_force(a: &Matrix<f64>, e: &ConstraintSet<f64>, q: Exponent<f64>) -> (f64, Vec<f64>) {
    let n = a.cols();
    let c = 1.0 / (n as f64).sqrt();
    let mut best = (f64::INFINITY, Vec::new());
    for bits in 0..1u64 << n {
        let sigma: Vec<f64> = (0..n).map(|j| if bits >> (n - 1 - j) & 1 == 1 { -c } else { c }).collect();
        let d = e.distance(&a.mul_vec(&sigma), q).unwrap();
        if d < best.0 {
            best = (d, sigma);
        }
    }
    best
}

fn criterion_1() -> Verdict {
    let mut s = RandomStream::new(1001);
    let qs = [fq(2.0), fq(4.0), Exponent::Infinity];
    let mut mismatches = 0;
    for inst in 0..200 {
        let n = 1 + s.index(10);
        let m = 1 + s.index(10);
        let q = qs[inst % 3];
        let e = match inst % 3 {
            0 => ConstraintSet::zero(m),
            1 => ConstraintSet::at_least(m, s.gaussian()).unwrap(),
            _ => ConstraintSpec::Blocks { sizes: vec![m / 2, m - m / 2], k: s.gaussian().abs() }
                .build(m)
                .unwrap_or_else(|_| ConstraintSet::at_most(m, 0.3).unwrap()),
        };
        let a: Matrix<f64> = sample_gaussian_matrix(&mut s, m, n).unwrap();
        let r = margin_exact(&a, &FeasibleSet::hypercube(n).unwrap(), &e, q).unwrap();
        let (value, sigma) = brute_force(&a, &e, q);
        if r.value.to_bits() != value.to_bits() || r.sigma_star != sigma {
            mismatches += 1;
        }
    }
    Verdict {
        pass: mismatches == 0,
        detail: format!("{mismatches} of 200 instances differ from brute force (bitwise value and minimizer)"),
    }
}

fn criterion_2() -> Verdict {
    let mut s = RandomStream::new(2002);
    let h = 1e-5;
    let q = fq(4.0);
    let cube = FeasibleSet::hypercube(4).unwrap();
    let e = ConstraintSet::zero(4);
    let (mut checked, mut drawn, mut worst) = (0, 0, 0.0f64);
    while checked < 120 {
        drawn += 1;
        let a: Matrix<f64> = sample_gaussian_matrix(&mut s, 4, 4).unwrap();
        let r = margin_exact(&a, &cube, &e, q).unwrap();
        if r.gap().unwrap() <= 10.0 * h {
            continue;
        }
        checked += 1;
        let g = margin_gradient(&a, &r, q).unwrap();
        let fd = finite_diff_gradient(&a, &cube, &e, q, h).unwrap();
        for (x, y) in g.entries.as_slice().iter().zip(fd.as_slice()) {
            worst = worst.max((x - y.abs()).abs());
        }
    }
    Verdict {
        pass: worst <= 1e-3,
        detail: format!("max |analytic - |fd|| = {worst:.2e} over {checked} unique-minimizer instances ({drawn} drawn)"),
    }
}

fn criterion_3(ledger: &mut Ledger) -> Verdict {
    let cases = [(8usize, 8usize, fq(4.0)), (12, 12, Exponent::Infinity), (16, 8, fq(2.0))];
    let mut pass = true;
    let mut parts = Vec::new();
    for (k, &(m, n, q)) in cases.iter().enumerate() {
        let mut cfg = ExperimentConfig::new(FeasibleSpec::Hypercube, ConstraintSpec::Zero, q, m, n)
            .with_trials(500)
            .with_seed(3000 + k as u64);
        cfg.bootstrap = 200;
        let r = ledger.run(format!("c3 M={m} N={n} q={q}"), &cfg);
        let (a2, b2) = (r.bounds.sum_a2.unwrap(), r.bounds.sum_b2.unwrap());
        // gradients at q = inf are taken at q', so the bound is evaluated there
        let qg = effective_exponent(m, q);
        let cap_a = (m as f64).powf(2.0 * qg.reciprocal() - 1.0);
        let ok = b2 <= 1.05 && a2 <= cap_a + 0.05;
        pass &= ok;
        let tight = if q.is_finite() { String::new() } else { format!(", 1/M+0.05={:.4}", 1.0 / m as f64 + 0.05) };
        parts.push(format!("({m},{n},{q}): a2={a2:.4} <= {:.4}{tight}, b2={b2:.4}", cap_a + 0.05));
    }
    Verdict {
        pass,
        detail: parts.join("; "),
    }
}

fn criterion_4(ledger: &Ledger) -> Verdict {
    let mut violations = Vec::new();
    let mut checked = 0;
    for (label, r) in &ledger.runs {
        let Some(rhs) = r.bounds.poincare_rhs else { continue };
        checked += 1;
        if r.variance > rhs + 3.0 * r.variance_se {
            violations.push(label.clone());
        }
    }
    Verdict {
        pass: violations.is_empty() && checked > 0,
        detail: format!("{} of {checked} gradient-carrying runs exceed poincare_rhs + 3 SE {violations:?}", violations.len()),
    }
}

/// Extra runs on other sets so that criteria 4 and 11 see more than the hypercube at `E = {0}`.
fn reference_runs(ledger: &mut Ledger) {
    let mut chi = ExperimentConfig::new(FeasibleSpec::Basis, ConstraintSpec::Zero, fq(2.0), 6, 3)
        .with_trials(2000)
        .with_seed(4001);
    chi.bootstrap = 200;
    ledger.run("basis M=6 q=2".into(), &chi);
    ledger.run("cube N=10 inf".into(), &cube(10, Exponent::Infinity, 500, 4002));
    let mut blocks = ExperimentConfig::new(
        FeasibleSpec::Hypercube,
        ConstraintSpec::Blocks { sizes: vec![4, 4], k: 0.0 },
        Exponent::Infinity,
        8,
        8,
    )
    .with_trials(300)
    .with_seed(4003);
    blocks.bootstrap = 200;
    ledger.run("blocks 4,4 K=0".into(), &blocks);
}

fn criterion_5(ledger: &mut Ledger) -> Verdict {
    let dims = [8usize, 12, 16, 20];
    let reps = 10;
    let (mut monotone, mut banded) = (0, 0);
    let mut example = String::new();
    let mut spreads = Vec::new();
    for rep in 0..reps {
        let vars: Vec<f64> = dims
            .iter()
            .map(|&n| {
                let r = ledger.run(format!("c5 N={n} rep={rep}"), &cube(n, Exponent::Infinity, 1000, 5000 + 100 * rep + n as u64));
                r.variance
            })
            .collect();
        if vars.windows(2).all(|w| w[1] <= w[0]) {
            monotone += 1;
        }
        let scaled: Vec<f64> = vars
            .iter()
            .zip(&dims)
            .map(|(v, &m)| v * (1.0 + 0.5 * (m as f64).ln()))
            .collect();
        let hi = scaled.iter().copied().fold(f64::MIN, f64::max);
        let lo = scaled.iter().copied().fold(f64::MAX, f64::min);
        spreads.push(hi / lo);
        if hi / lo <= 4.0 {
            banded += 1;
        }
        if rep == 0 {
            example = format!("{:?}", vars.iter().map(|v| format!("{v:.5}")).collect::<Vec<_>>());
        }
    }
    let (lo, hi) = spreads.iter().fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
    Verdict {
        pass: monotone * 10 >= 9 * reps && banded == reps,
        detail: format!(
            "variance non-increasing in {monotone}/{reps} reps; max/min of Var*(1+ln(M)/2) in [{lo:.2}, {hi:.2}], within 4 in {banded}/{reps}; rep 0 vars {example}"
        ),
    }
}

fn criterion_6(ledger: &mut Ledger) -> Verdict {
    let reps = 20;
    let mut shrinks = 0;
    let mut unresolved = 0;
    for rep in 0..reps {
        let w: Vec<Option<f64>> = [8usize, 16]
            .iter()
            .map(|&n| {
                let r = ledger.run(format!("c6 N={n} rep={rep}"), &cube(n, Exponent::Infinity, 2000, 6000 + 100 * rep + n as u64));
                threshold_from_margins(&r.margins, None).unwrap().window
            })
            .collect();
        match (w[0], w[1]) {
            (Some(w8), Some(w16)) if w16 < w8 => shrinks += 1,
            (Some(_), Some(_)) => {}
            _ => unresolved += 1,
        }
    }
    Verdict {
        pass: shrinks * 10 >= 9 * reps,
        detail: format!("window(16) < window(8) in {shrinks}/{reps} reps ({unresolved} unresolved)"),
    }
}

fn criterion_7() -> Verdict {
    let reps = 10;
    let mut parts = Vec::new();
    let mut pass = true;
    for q in [Exponent::Infinity, fq(4.0)] {
        let mut ok = 0;
        for rep in 0..reps {
            let rows = disc_scaling(&[8, 12, 16], q, 300, 7000 + rep).unwrap();
            if rows.windows(2).all(|w| w[1].ratio > w[0].ratio) {
                ok += 1;
            }
        }
        pass &= ok * 10 >= 9 * reps;
        parts.push(format!("q={q}: increasing in {ok}/{reps}"));
    }
    Verdict {
        pass,
        detail: parts.join(", "),
    }
}

fn criterion_8() -> Verdict {
    let opts = SphereOptions {
        restarts: 50,
        ..SphereOptions::default()
    };
    let e = ConstraintSet::zero(8);
    let mut within = 0;
    let mut worst = 0.0f64;
    for seed in 0..100 {
        let mut s = RandomStream::new(8000 + seed);
        let a: Matrix<f64> = sample_gaussian_matrix(&mut s, 8, 8).unwrap();
        let exact = margin_sphere_l2(&a).unwrap().value;
        let heur = margin_continuous(&a, &e, fq(2.0), &opts, &mut s).unwrap().value;
        let dev = (heur - exact).abs();
        worst = worst.max(dev);
        if dev <= 1e-6 {
            within += 1;
        }
    }
    Verdict {
        pass: within >= 95,
        detail: format!("{within}/100 within 1e-6 of the smallest singular value (worst {worst:.2e})"),
    }
}

fn criterion_9() -> Verdict {
    let mut s = RandomStream::new(9000);
    let cube = FeasibleSet::hypercube(6).unwrap();
    let ks = [-1.0, -0.25, 0.0, 0.25, 1.0];
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let a: Matrix<f64> = sample_gaussian_matrix(&mut s, 6, 6).unwrap();
        let k_c = cube
            .enumerate(1 << 24)
            .unwrap()
            .map(|sigma| a.mul_vec(&sigma).into_iter().fold(f64::INFINITY, f64::min))
            .fold(f64::NEG_INFINITY, f64::max);
        for &k in &ks {
            let e = ConstraintSet::at_least(6, k).unwrap();
            let m = margin_exact(&a, &cube, &e, Exponent::Infinity).unwrap().value;
            worst = worst.max((m - (k - k_c).max(0.0)).abs());
        }
    }
    Verdict {
        pass: worst <= 1e-10,
        detail: format!("max |margin(K) - max(0, K - K_c)| = {worst:.2e} over 500 (instance, K) pairs"),
    }
}

fn criterion_10() -> Verdict {
    let r = balancing_variance_experiment(10, 16, 200, 10_000).unwrap();
    let var_ok = r.variance <= 0.1 + 3.0 * r.variance_se;
    let mean_ok = r.mean >= 0.2;

    let mut s = RandomStream::new(10_001);
    let h = 1e-5;
    let (mut checked, mut worst) = (0, 0.0f64);
    while checked < 50 {
        let g: Matrix<f64> = sample_goe(&mut s, 5).unwrap();
        let eig = symmetric_eigen(&g).unwrap();
        if eig.values[0] - eig.values[1] <= 0.1 {
            continue;
        }
        checked += 1;
        let grad = eig_gradient(&g).unwrap();
        let top = |m: &Matrix<f64>| symmetric_eigen(m).unwrap().values[0];
        for i in 0..5 {
            for j in i..5 {
                // symmetric perturbation moves both (i, j) and (j, i)
                let bump = |t: f64| {
                    let mut m = g.clone();
                    m[(i, j)] += t;
                    if i != j {
                        m[(j, i)] += t;
                    }
                    m
                };
                let (up, down) = (bump(h), bump(-h));
                let fd = (top(&up) - top(&down)) / (2.0 * h);
                let per_entry = if i == j { fd } else { fd / 2.0 };
                worst = worst.max((per_entry - grad[(i, j)]).abs() / grad.frobenius_norm());
            }
        }
    }
    let grad_ok = worst <= 1e-6;
    Verdict {
        pass: var_ok && mean_ok && grad_ok,
        detail: format!(
            "var {:.5} vs 1/d + 3 SE = {:.5}; mean {:.4}; eig gradient rel. dev {worst:.2e} on {checked} matrices",
            r.variance,
            0.1 + 3.0 * r.variance_se,
            r.mean
        ),
    }
}

fn criterion_11(ledger: &Ledger) -> Verdict {
    let mut violations = 0;
    for (m, rec) in &ledger.sandwich {
        let qp = effective_exponent(*m, Exponent::<f64>::Infinity);
        let upper = (*m as f64).powf(qp.reciprocal()) * rec.margin;
        let mq = rec.margin_qprime.unwrap();
        if !(rec.margin <= mq + 1e-10 && mq <= upper + 1e-10) {
            violations += 1;
        }
    }
    Verdict {
        pass: violations == 0 && !ledger.sandwich.is_empty(),
        detail: format!("{violations} violations over {} q = inf instances", ledger.sandwich.len()),
    }
}

fn main() {
    let mut ledger = Ledger::default();
    let mut failures = 0;
    let mut report = |id: &str, name: &str, f: &mut dyn FnMut() -> Verdict| {
        let start = Instant::now();
        let v = f();
        let status = if v.pass { "PASS" } else { "FAIL" };
        println!("{status} [{id}] {name}: {} ({:.1} s)", v.detail, start.elapsed().as_secs_f64());
        if !v.pass {
            failures += 1;
        }
    };
    report("1", "oracle equivalence", &mut criterion_1);
    report("2", "gradient identity", &mut criterion_2);
    report("3", "gradient moment inequalities", &mut || criterion_3(&mut ledger));
    report("5", "concentration trend", &mut || criterion_5(&mut ledger));
    report("6", "sharp-threshold window", &mut || criterion_6(&mut ledger));
    report("7", "discrepancy scaling", &mut criterion_7);
    report("8", "sphere oracle", &mut criterion_8);
    report("9", "perceptron duality", &mut criterion_9);
    report("10", "matrix balancing", &mut criterion_10);
    reference_runs(&mut ledger);
    report("4", "Poincare ceiling", &mut || criterion_4(&ledger));
    report("11", "inf-approximation sandwich", &mut || criterion_11(&ledger));
    if failures > 0 {
        println!("{failures} acceptance check(s) failed");
        std::process::exit(1);
    }
}
