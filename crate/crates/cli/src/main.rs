use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gimag::commands::{self, Format};
use gimag::fuzz::{self, Suite};
use gimag::io::{emit, read_json};
use gimag::sweep::{run_dynamics, run_sweep, SweepSpec};
use gimag::CliError;

/// Gaussian imaginarity measures for continuous-variable states.
#[derive(Parser)]
#[command(name = "gimag", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a state or channel file and print its diagnostics.
    Validate {
        path: PathBuf,
        /// Threshold below which entries count as zero for the realness tests
        #[arg(long, default_value_t = 1e-12)]
        zero_tol: f64,
    },
    /// Evaluate all three measures on a state file.
    Measure {
        path: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        mu: f64,
        #[arg(long, default_value_t = 1e-12)]
        zero_tol: f64,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Measures over a one-parameter family described by a sweep spec.
    Sweep {
        spec: PathBuf,
        /// CSV destination; stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the spec's `mu`
        #[arg(long)]
        mu: Option<f64>,
        /// Overrides the spec's `zero_tol`
        #[arg(long)]
        zero_tol: Option<f64>,
    },
    /// Time trajectory in a Markovian bath, with the closed-form column.
    Dynamics {
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long)]
        zero_tol: Option<f64>,
    },
    /// Run a randomized property suite.
    Fuzz {
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        /// Allowed slack in each inequality; negative values force failures
        #[arg(long, default_value_t = 1e-9, allow_negative_numbers = true)]
        tol: f64,
        #[arg(long, default_value_t = 1e-12)]
        zero_tol: f64,
    },
}

fn load_spec(path: &Path, mu: Option<f64>, zero_tol: Option<f64>) -> Result<SweepSpec, CliError> {
    let mut spec: SweepSpec = read_json(path)?;
    if let Some(mu) = mu {
        commands::check_mu(mu)?;
        spec.mu = mu;
    }
    if let Some(z) = zero_tol {
        commands::check_zero_tol(z)?;
        spec.zero_tol = z;
    }
    Ok(spec)
}

fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Validate { path, zero_tol } => {
            commands::check_zero_tol(zero_tol)?;
            commands::validate(&path, zero_tol)
        }
        Command::Measure {
            path,
            mu,
            zero_tol,
            format,
        } => commands::measure(&path, mu, zero_tol, format),
        Command::Sweep {
            spec,
            out,
            mu,
            zero_tol,
        } => {
            let spec = load_spec(&spec, mu, zero_tol)?;
            emit(run_sweep(&spec)?, out.as_deref())
        }
        Command::Dynamics {
            spec,
            out,
            mu,
            zero_tol,
        } => {
            let spec = load_spec(&spec, mu, zero_tol)?;
            let res = run_dynamics(&spec)?;
            for note in &res.notes {
                eprintln!("{note}");
            }
            emit(res.csv, out.as_deref())
        }
        Command::Fuzz {
            suite,
            seed,
            count,
            tol,
            zero_tol,
        } => {
            commands::check_zero_tol(zero_tol)?;
            if tol.is_nan() {
                return Err(CliError::Usage("--tol must not be NaN".into()));
            }
            let summary = fuzz::run(suite, seed, count, tol, zero_tol);
            let text = summary.render();
            if summary.failures().next().is_some() {
                Err(CliError::Failed(text))
            } else {
                Ok(text)
            }
        }
    }
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors by itself
    let cli = Cli::parse();
    match run(cli) {
        Ok(text) => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(text.as_bytes());
            ExitCode::SUCCESS
        }
        Err(e) => {
            match &e {
                CliError::Failed(report) => print!("{report}"),
                _ => eprintln!("error: {e}"),
            }
            ExitCode::from(e.exit_code())
        }
    }
}
