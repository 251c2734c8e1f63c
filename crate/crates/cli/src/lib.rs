//! Command-line front end.
//!
//! [`run`] parses arguments, executes one command and returns its exit code
//! together with what it would print, so the binary is a thin wrapper and
//! tests can drive commands in-process.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use issa_core::exponent::SearchConfig;
use issa_core::Error;

mod commands;
mod perturb;
mod simulate;

/// Process exit codes. Every code has exactly one meaning.
pub mod exit {
    /// Success; for `analyze` this also means the system is ES.
    pub const OK: i32 = 0;
    pub const ES: i32 = 0;
    pub const INTERNAL: i32 = 1;
    pub const INPUT: i32 = 2;
    pub const EU: i32 = 10;
    pub const ALPHA_PRECONDITION: i32 = 11;
    pub const DECAY_FAILED: i32 = 12;
    pub const UNDETERMINED: i32 = 20;
    pub const NO_WITNESS: i32 = 21;
    pub const INFINITE: i32 = 30;
    pub const MINUS_INFINITY: i32 = 40;
}

#[derive(Debug, Parser)]
#[command(
    name = "issa",
    version,
    about = "Stability analysis of impulsive linear switched systems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by all commands. Each can also be set through an
/// `ISSA_`-prefixed environment variable.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Maximal word length explored.
    #[arg(long, env = "ISSA_DEPTH", default_value_t = 6)]
    pub depth: usize,
    /// Grid step for the dwell-time parameter.
    #[arg(long, env = "ISSA_GRID", default_value_t = 0.1)]
    pub grid: f64,
    /// Largest gridded dwell time; longer ones are bounded analytically.
    #[arg(long, env = "ISSA_TMAX", default_value_t = 10.0)]
    pub tmax: f64,
    /// Bisection tolerance on the upper bound.
    #[arg(long, env = "ISSA_TOL", default_value_t = 1e-3)]
    pub tol: f64,
    #[arg(long, env = "ISSA_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (defaults to the number of cores).
    #[arg(long, env = "ISSA_WORKERS")]
    pub workers: Option<usize>,
    /// Write the report here instead of standard output.
    #[arg(long, env = "ISSA_OUT")]
    pub out: Option<PathBuf>,
    /// Node budget of each word search.
    #[arg(long, env = "ISSA_BUDGET", default_value_t = 200_000)]
    pub budget: usize,
    /// Frontier cap of the best-first search.
    #[arg(long, env = "ISSA_BEAM", default_value_t = 2000)]
    pub beam: usize,
    /// Block weight horizon of the upper-bound certificate.
    #[arg(long, env = "ISSA_HORIZON", default_value_t = 1.0)]
    pub horizon: f64,
    /// Contraction margin required of certificate blocks.
    #[arg(long, env = "ISSA_MARGIN", default_value_t = 0.999)]
    pub margin: f64,
}

impl Common {
    pub fn search_config(&self) -> Result<SearchConfig, Error> {
        let cfg = SearchConfig {
            max_depth: self.depth,
            grid_step: self.grid,
            t_max: self.tmax,
            beam_width: self.beam,
            node_budget: self.budget,
            bisect_tol: self.tol,
            block_horizon: self.horizon,
            margin: self.margin,
            seed: self.seed,
            ..SearchConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bracket the maximal Lyapunov exponent and classify the system.
    Analyze {
        system: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Sample a trajectory as CSV.
    Simulate {
        system: PathBuf,
        signal: PathBuf,
        #[arg(long)]
        dt: f64,
        /// Final time.
        #[arg(long = "T", visible_alias = "t-end")]
        t_end: f64,
        /// Initial state, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x0: Vec<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Build and validate a Lyapunov norm with decay rate gamma.
    Certify {
        system: PathBuf,
        #[arg(long)]
        gamma: f64,
        /// Sphere points used by the decay check.
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Find a periodic signal and initial state with exponential growth.
    Witness {
        system: PathBuf,
        /// Periods written to the signal and simulated by the self-check.
        #[arg(long, default_value_t = 20)]
        periods: usize,
        #[arg(long)]
        signal_out: Option<PathBuf>,
        #[arg(long)]
        x0_out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Invariant subspaces, block structure and jump-product boundedness.
    Structure {
        system: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Recompute bounds under random perturbations of the modes.
    Perturb {
        system: PathBuf,
        /// Perturbation sizes, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        eps: Vec<f64>,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        /// Perturb the jump maps as well as the flows.
        #[arg(long)]
        jumps: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Compare norm growth with spectral growth over word length.
    BwCheck {
        /// System file, or weighted system file with an `atoms` list.
        system: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Analyze { common, .. }
            | Command::Simulate { common, .. }
            | Command::Certify { common, .. }
            | Command::Witness { common, .. }
            | Command::Structure { common, .. }
            | Command::Perturb { common, .. }
            | Command::BwCheck { common, .. } => common,
        }
    }
}

/// Result of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    pub(crate) fn report(code: i32, stdout: String) -> Self {
        Self {
            code,
            stdout,
            stderr: String::new(),
        }
    }

    pub(crate) fn failure(code: i32, message: impl std::fmt::Display) -> Self {
        Self {
            code,
            stdout: String::new(),
            stderr: format!("error: {message}\n"),
        }
    }
}

/// Maps a library error to an exit code: bad data is an input error,
/// numerical breakdowns are internal.
fn error_outcome(e: Error) -> Outcome {
    let code = match e {
        Error::Invalid(_) | Error::Json(_) | Error::Domain(_) => exit::INPUT,
        Error::Numerical(_) | Error::Overflow(_) => exit::INTERNAL,
    };
    Outcome::failure(code, e)
}

pub(crate) fn read_input(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))
}

/// Prefixes parse errors with the file name.
pub(crate) fn in_file<T>(path: &Path, r: Result<T, Error>) -> Result<T, Error> {
    r.map_err(|e| match e {
        Error::Json(j) => Error::Invalid(format!("{}: {j}", path.display())),
        Error::Invalid(m) => Error::Invalid(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            let code = e.exit_code();
            return if code == 0 {
                Outcome::report(0, text)
            } else {
                Outcome {
                    code: exit::INPUT,
                    stdout: String::new(),
                    stderr: text,
                }
            };
        }
    };
    let common = cli.command.common().clone();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = common.workers {
        if n == 0 {
            return Outcome::failure(exit::INPUT, "--workers must be at least 1");
        }
        builder = builder.num_threads(n);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => return Outcome::failure(exit::INTERNAL, e),
    };
    let outcome = pool.install(|| match commands::execute(&cli.command) {
        Ok(o) => o,
        Err(e) => error_outcome(e),
    });
    match (&common.out, outcome.stdout.is_empty()) {
        (Some(path), false) => match std::fs::write(path, &outcome.stdout) {
            Ok(()) => Outcome {
                stdout: String::new(),
                ..outcome
            },
            Err(e) => Outcome::failure(exit::INPUT, format!("{}: {e}", path.display())),
        },
        _ => outcome,
    }
}
