//! Command-line front end. See [`run`].

mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::rng::entropy_seed;

use config::Settings;

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "lqmargin",
    version,
    about = "Monte Carlo laboratory for the l^q-margin min_{sigma in Q} d_q(A sigma, E) of Gaussian A",
    after_help = "Exit status: 0 ok, 2 config error, 3 resource limit, 4 numerical failure, 1 other.\n\
                  Every CSV starts with '#' manifest lines; strip one leading '#' to get a config that reruns it."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Margin of one Gaussian instance (trial 0 of the seed).
    Margin(Options),
    /// Margin distribution over many trials with variance bounds.
    Concentrate(Options),
    /// Feasibility frequency P(margin <= delta) over a delta grid.
    Threshold(Options),
    /// Hypercube discrepancy mean/sd across square dimensions (--n-list).
    DiscScaling(Options),
    /// Perceptron capacity and margin curve over a K grid.
    Perceptron(Options),
    /// Matrix balancing of N GOE matrices (off-diagonal variance 1, diagonal variance 2).
    Balance(Options),
    /// Analytic margin gradient against central finite differences.
    Gradcheck(Options),
}

/// Shared flags. Each overrides the matching key of `--config`.
#[derive(Debug, Args, Default)]
struct Options {
    /// Config file: `key = value` lines under [run] [dims] [sets] [solver] [grid].
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed; drawn from system entropy and recorded when absent.
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    /// Columns of A (dimension of Q).
    #[arg(long)]
    n: Option<String>,
    /// Rows of A (dimension of E).
    #[arg(long)]
    m: Option<String>,
    /// Exponent: a number >= 2 or `inf`. Gradients at `inf` use ceil(log(M)^2).
    #[arg(long)]
    q: Option<String>,
    /// Feasible set: hypercube, sphere, basis, lattice:LO:HI.
    #[arg(long)]
    set_q: Option<String>,
    /// Constraint set: zero, at-least (uses --k), at-most (uses --k), ball (uses --radius),
    /// blocks (uses --blocks, --k; alternates [K,inf) and (-inf,-K]).
    #[arg(long)]
    set_e: Option<String>,
    /// Comma-separated block sizes.
    #[arg(long)]
    blocks: Option<String>,
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    radius: Option<String>,
    /// Comma-separated K values (perceptron).
    #[arg(long)]
    k_grid: Option<String>,
    /// Comma-separated, strictly increasing deltas (threshold); default 41 points over the sampled range.
    #[arg(long)]
    delta_grid: Option<String>,
    /// Comma-separated dimensions (disc-scaling).
    #[arg(long)]
    n_list: Option<String>,
    /// Matrix size (balance).
    #[arg(long)]
    d: Option<String>,
    /// Number of matrices (balance).
    #[arg(long)]
    big_n: Option<String>,
    /// Restarts of the sphere solver.
    #[arg(long)]
    restarts: Option<String>,
    /// Subgradient steps per restart of the sphere solver.
    #[arg(long)]
    steps: Option<String>,
    /// Finite-difference step (gradcheck).
    #[arg(long)]
    h: Option<String>,
    /// Bootstrap resamples for the variance interval.
    #[arg(long)]
    bootstrap: Option<String>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
}

impl Options {
    fn settings(&self) -> Result<Settings> {
        let mut s = match &self.config {
            Some(path) => Settings::from_file(path)?,
            None => Settings::default(),
        };
        let flags = [
            ("seed", &self.seed),
            ("trials", &self.trials),
            ("n", &self.n),
            ("m", &self.m),
            ("q", &self.q),
            ("set_q", &self.set_q),
            ("set_e", &self.set_e),
            ("blocks", &self.blocks),
            ("k", &self.k),
            ("radius", &self.radius),
            ("k_grid", &self.k_grid),
            ("delta_grid", &self.delta_grid),
            ("n_list", &self.n_list),
            ("d", &self.d),
            ("big_n", &self.big_n),
            ("restarts", &self.restarts),
            ("steps", &self.steps),
            ("h", &self.h),
            ("bootstrap", &self.bootstrap),
            ("threads", &self.threads),
            ("out", &self.out),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                s.set(key, v)?;
            }
        }
        Ok(s)
    }
}

impl Command {
    fn parts(&self) -> (&'static str, &Options) {
        match self {
            Command::Margin(o) => ("margin", o),
            Command::Concentrate(o) => ("concentrate", o),
            Command::Threshold(o) => ("threshold", o),
            Command::DiscScaling(o) => ("disc-scaling", o),
            Command::Perceptron(o) => ("perceptron", o),
            Command::Balance(o) => ("balance", o),
            Command::Gradcheck(o) => ("gradcheck", o),
        }
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::InvalidArgument(_) | Error::Unsupported(_) | Error::NotEnumerable(_) => EXIT_CONFIG,
        Error::ResourceLimit { .. } => EXIT_RESOURCE,
        Error::NumericalFailure(_) => EXIT_NUMERICAL,
        Error::Degenerate(_) | Error::Io(_) => EXIT_OTHER,
    }
}

fn execute(command: &str, mut settings: Settings) -> Result<()> {
    if !settings.has("seed") {
        settings.set("seed", &entropy_seed().to_string())?;
        settings.seed_from_entropy = true;
    }
    commands::apply_defaults(command, &mut settings)?;
    let out = PathBuf::from(settings.get("out").expect("defaulted"));
    std::fs::create_dir_all(&out)?;
    let threads = if settings.has("threads") { settings.count("threads")? } else { 0 };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {threads} threads: {e}")))?;
    let manifest = output::RunManifest::new(command, &settings);
    let started = Instant::now();
    let summary = pool.install(|| commands::dispatch(command, &settings, &out, &manifest))?;
    manifest.write_manifest(&out, started.elapsed())?;
    print!("{summary}");
    Ok(())
}

/// Parses `args` (program name first), runs the command and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let (command, options) = cli.command.parts();
    match options.settings().and_then(|s| execute(command, s)) {
        Ok(()) => EXIT_OK,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code(&err)
        }
    }
}
