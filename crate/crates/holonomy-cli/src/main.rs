//! Scenario-driven front end for the holonomy library.
//!
//! Exit codes: 0 success, 1 failed or unknown verification check, 2 scenario
//! schema error, 3 numerical failure.

mod engine;
mod scenario;

use clap::{Parser, Subcommand, ValueEnum};
use engine::{execute, write_rows, OutputFormat, RunError};
use scenario::Scenario;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "holonomy",
    about = "Non-Abelian adiabatic holonomies for pure and mixed quantum states",
    long_about = "Computes holonomies of closed loops in control-parameter space, the \
                  transported reduced density operators of the dark-state ion model, and \
                  slow-schedule dynamics cross-checks.\n\n\
                  All angles are radians. Scenario files are JSON with fail-closed field \
                  validation; identical scenarios produce bit-identical outputs. The \
                  environment variable HOLONOMY_SEED is reserved (no stochastic \
                  components at present)."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write result rows.
    Run {
        /// Path to the scenario JSON document.
        scenario: PathBuf,
        /// Output file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Output format.
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Maximum concurrent sweep points (default: number of processors).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Run one named verification check and print PASS/FAIL with errors.
    Verify {
        /// Check name; see `list-checks`.
        check: String,
    },
    /// List the published verification checks.
    ListChecks,
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { scenario, out, format, jobs } => run(&scenario, out.as_deref(), format, jobs),
        Command::Verify { check } => verify(&check),
        Command::ListChecks => {
            for info in holonomy_core::verify::checks() {
                println!("{:<24} {}", info.name, info.summary);
            }
            ExitCode::SUCCESS
        }
    }
}

fn run(path: &Path, out: Option<&Path>, format: Format, jobs: Option<usize>) -> ExitCode {
    let scenario_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".to_string());
    let result = read_and_execute(path, &scenario_id, jobs);
    let rows = match result {
        Ok(rows) => rows,
        Err(e) => {
            eprintln!("{e}");
            return match e {
                RunError::Schema(_) | RunError::Io(_) => ExitCode::from(2),
                RunError::Numerical(_) => ExitCode::from(3),
            };
        }
    };
    let format = match format {
        Format::Csv => OutputFormat::Csv,
        Format::Json => OutputFormat::Json,
    };
    let written = match out {
        Some(path) => std::fs::File::create(path)
            .map_err(RunError::from)
            .and_then(|f| write_rows(&rows, format, std::io::BufWriter::new(f))),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write_rows(&rows, format, &mut lock).and_then(|()| lock.flush().map_err(RunError::from))
        }
    };
    match written {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(3)
        }
    }
}

fn read_and_execute(
    path: &Path,
    scenario_id: &str,
    jobs: Option<usize>,
) -> Result<Vec<engine::ResultRow>, RunError> {
    let text = std::fs::read_to_string(path)?;
    let scenario = Scenario::parse(&text)?;
    match jobs {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| RunError::Numerical(format!("thread pool: {e}")))?;
            pool.install(|| execute(&scenario, scenario_id))
        }
        None => execute(&scenario, scenario_id),
    }
}

fn verify(name: &str) -> ExitCode {
    match holonomy_core::verify::run_check(name) {
        Some(outcome) => {
            for m in &outcome.measurements {
                println!("  {m}");
            }
            println!("{} {}", if outcome.passed { "PASS" } else { "FAIL" }, outcome.name);
            if outcome.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        None => {
            eprintln!("unknown check `{name}`; see `holonomy list-checks`");
            ExitCode::from(1)
        }
    }
}
