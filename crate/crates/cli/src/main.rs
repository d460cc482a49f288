mod classify;
mod error;
mod input;
mod output;
mod propagate;
mod score;
mod stats;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};

use nominal_uq::bayes::McAveraging;
use nominal_uq::propagate::DEFAULT_HISTOGRAM_BINS;
use nominal_uq::scoring::{TieRule, DEFAULT_EPS_CLIP};
use nominal_uq::{NormPolicy, DEFAULT_EPS_MODE, DEFAULT_EPS_NORM};

use crate::error::{exit, CliError, CliResult};
use crate::output::{Format, RunConfig};

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  1  file could not be read or written
  2  invalid command line or option value
  3  input could not be parsed (row and line reported)
  4  input failed validation (bad PMF, label, shape, prior, ...)
  5  numerical failure (degenerate prior, singular matrix, underflow)

Set NOMINAL_UQ_THREADS to cap the number of worker threads.";

#[derive(Parser, Debug)]
#[command(name = "nominal-uq", version, about = "Uncertainty evaluation for nominal properties", after_help = EXIT_CODES)]
struct Cli {
    /// More log output on stderr (repeat for more).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Dispersion statistics for each PMF row plus a dataset summary.
    Stats(stats::StatsArgs),
    /// Classification loss, expected cross entropy, expected Brier score and
    /// the confusion matrix for labeled probability rows.
    Score(score::ScoreArgs),
    /// Mean and variance of a quantity whose model depends on a nominal input.
    Propagate(propagate::PropagateArgs),
    /// Fit the Bayesian QDA classifier and evaluate predictive PMFs on a test set.
    Classify(classify::ClassifyArgs),
    /// Run the classification chain on a synthetic Gaussian dataset.
    Demo(classify::DemoArgs),
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    /// Report destination; standard output when omitted.
    #[arg(short, long)]
    pub output: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

/// Numerical tolerances and the dispersion parameter shared by subcommands.
#[derive(Args, Debug, Clone)]
pub struct Tolerances {
    /// Allowed deviation of a PMF sum from 1.
    #[arg(long, default_value_t = DEFAULT_EPS_NORM)]
    pub eps_norm: f64,

    /// Relative tolerance for ties with the modal probability.
    #[arg(long, default_value_t = DEFAULT_EPS_MODE)]
    pub eps_mode: f64,

    /// Probability floor inside the cross-entropy logarithm.
    #[arg(long, default_value_t = DEFAULT_EPS_CLIP)]
    pub eps_clip: f64,

    /// Exponent of the α-quadratic entropy, in (0, 1].
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,

    /// Rescale rows to sum to 1 instead of rejecting them.
    #[arg(long)]
    pub renormalize: bool,
}

impl Tolerances {
    pub fn validate(&self) -> CliResult<()> {
        for (name, v) in [
            ("--eps-norm", self.eps_norm),
            ("--eps-mode", self.eps_mode),
            ("--eps-clip", self.eps_clip),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Usage(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(CliError::Usage(format!("--alpha must lie in (0, 1], got {}", self.alpha)));
        }
        Ok(())
    }

    pub fn policy(&self) -> NormPolicy {
        if self.renormalize {
            NormPolicy::Renormalize
        } else {
            NormPolicy::Strict {
                eps_norm: self.eps_norm,
            }
        }
    }

    pub fn echo(&self, config: &mut RunConfig) {
        config
            .set("norm_policy", if self.renormalize { "renormalize" } else { "strict" })
            .set_f64("eps_norm", self.eps_norm)
            .set_f64("eps_mode", self.eps_mode)
            .set_f64("eps_clip", self.eps_clip)
            .set_f64("alpha", self.alpha)
            .set("histogram_bins", DEFAULT_HISTOGRAM_BINS);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TieRuleArg {
    /// Predict the lowest-indexed of the tied classes.
    LowestIndex,
    /// Fail on tied maxima.
    Error,
}

impl TieRuleArg {
    pub fn rule(self) -> TieRule {
        match self {
            TieRuleArg::LowestIndex => TieRule::LowestIndex,
            TieRuleArg::Error => TieRule::Error,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    /// Exact Student-t posterior predictive.
    Closed,
    /// Monte Carlo average over posterior parameter draws.
    Mc,
    /// Posterior-mean parameters only.
    PlugIn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AveragingArg {
    /// Average class-weighted densities over draws, then normalize.
    Joint,
    /// Normalize per draw, then average class probabilities.
    Conditional,
}

impl AveragingArg {
    pub fn averaging(self) -> McAveraging {
        match self {
            AveragingArg::Joint => McAveraging::Joint,
            AveragingArg::Conditional => McAveraging::Conditional,
        }
    }
}

/// Command-line spelling of an enum option.
pub fn value_name<T: ValueEnum>(v: T) -> String {
    v.to_possible_value().expect("no skipped variants").get_name().to_owned()
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("NOMINAL_UQ_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("NOMINAL_UQ_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot configure thread pool: {e}")))
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    match cli.command {
        Command::Stats(a) => stats::run(&a),
        Command::Score(a) => score::run(&a),
        Command::Propagate(a) => propagate::run(&a),
        Command::Classify(a) => classify::run_classify(&a),
        Command::Demo(a) => classify::run_demo(&a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE } else { exit::OK });
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
    match run(cli) {
        Ok(()) => ExitCode::from(exit::OK),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
