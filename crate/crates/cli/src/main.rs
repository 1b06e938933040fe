//! `spectra`: command-line front end for the spectrum engines.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use spectra_core::SpectraError;

#[derive(Parser)]
#[command(name = "spectra", version, about = "Markov and Lagrange spectra of horseshoes and skew products")]
struct Cli {
    /// Worker threads; output does not depend on this.
    #[arg(long, global = true, env = "SPECTRA_THREADS")]
    threads: Option<usize>,
    /// Output file; `.csv` or `.json` picks the format. Defaults to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Markov values of periodic continued fractions over a digit set.
    Classical {
        #[arg(long, value_delimiter = ',', default_value = "1,2")]
        digits: Vec<u64>,
        #[arg(long, default_value_t = 8)]
        max_period: usize,
    },
    /// Skew-product Markov values of the periodic points of a model.
    SkewMarkov {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 6)]
        max_period: usize,
        /// Initial fiber angle.
        #[arg(long, default_value_t = 0.0)]
        t: f64,
        #[arg(long, default_value_t = 1000)]
        horizon: u64,
    },
    /// Certificate for an interval inside the Lagrange spectrum.
    Interval {
        #[arg(long, value_enum)]
        case: Case,
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        cert: CertArgs,
    },
    /// Point whose skew Markov value avoids the shifted surface spectrum.
    WitnessSeparation {
        /// Witness setup JSON; the base-17 example when absent.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        horizon: Option<u64>,
        #[arg(long)]
        max_period: Option<usize>,
    },
    /// Dimension bounds of threshold sets along a grid.
    #[command(name = "profile-L")]
    ProfileL {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        t_min: f64,
        #[arg(long, allow_hyphen_values = true)]
        t_max: f64,
        #[arg(long, default_value_t = 20)]
        points: usize,
        /// Block length used to build the sub-shifts.
        #[arg(long, default_value_t = 6)]
        depth: usize,
    },
    /// Random Lagrange estimates of a product observable and level classification.
    Levels {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        /// Orbit length of each estimate.
        #[arg(long, default_value_t = 100_000)]
        horizon: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "-0.1,0.1")]
        levels: Vec<f64>,
        #[arg(long, default_value_t = 6)]
        depth: usize,
        #[arg(long, default_value_t = 256)]
        grid: usize,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Case {
    Periodic,
    Nonperiodic,
}

#[derive(Args)]
struct CertArgs {
    /// Rounds of the witness schedule used by each estimate.
    #[arg(long, default_value_t = 12)]
    horizon: usize,
    /// Cylinder depth of the maximum search.
    #[arg(long, default_value_t = 6)]
    depth: usize,
    /// Number of target angles.
    #[arg(long, default_value_t = 256)]
    grid: usize,
    /// Validation tolerance.
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
}

/// Error with its exit status.
pub struct Failure {
    code: u8,
    kind: String,
    message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            kind: "usage".into(),
            message: message.into(),
        }
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        Failure {
            code: 2,
            kind: "io".into(),
            message: format!("{}: {e}", path.display()),
        }
    }
}

impl From<SpectraError> for Failure {
    fn from(e: SpectraError) -> Self {
        Failure {
            code: if e.is_validation() { 2 } else { 3 },
            kind: e.kind().into(),
            message: e.to_string(),
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::usage(e.to_string()))?;
    }
    let report = commands::dispatch(cli.command)?;
    let text = report.render(cli.out.as_deref())?;
    match &cli.out {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::io(path, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // help and version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let f = Failure::usage(e.to_string().trim_end());
            return report_failure(f);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => report_failure(f),
    }
}

fn report_failure(f: Failure) -> ExitCode {
    let body = json!({"error": f.kind, "message": f.message, "exit_code": f.code});
    eprintln!("{body}");
    ExitCode::from(f.code)
}
