mod args;
mod cmd;
mod fail;
mod report;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::fail::Failure;
use crate::report::Report;

#[derive(Parser)]
#[command(name = "permdiv", version, about = "Verification runs for intersecting permutation families")]
struct Cli {
    /// Emit JSON instead of TSV.
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads; overrides PERMDIV_THREADS.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form counts against enumeration.
    Count(cmd::count::CountArgs),
    /// Build a named family and report its statistics.
    Construct(cmd::construct::ConstructArgs),
    /// Run the invariant suite.
    Verify(cmd::verify::VerifyArgs),
    /// Minimal hitting sets of a family's fragments.
    Hitting(cmd::hitting::HittingArgs),
    /// Spread approximation and spread lemma trials.
    #[command(subcommand)]
    Spread(cmd::spread::SpreadCommand),
    /// Exhaustive extremal frontier for small n.
    Search(cmd::search::SearchArgs),
}

/// A finished report plus the verdict that sets the exit code.
pub struct Run {
    pub report: Report,
    pub verdict: Result<(), Failure>,
}

impl From<Report> for Run {
    fn from(report: Report) -> Self {
        Run { report, verdict: Ok(()) }
    }
}

fn threads(flag: Option<usize>) -> Result<Option<usize>, Failure> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("PERMDIV_THREADS") {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Failure::Config(format!("PERMDIV_THREADS={v:?} is not a thread count"))),
        _ => Ok(None),
    }
}

fn execute(cli: Cli) -> Result<Run, Failure> {
    if let Some(t) = threads(cli.threads)? {
        if t == 0 {
            return Err(Failure::Config("thread count must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().map_err(|e| Failure::Config(e.to_string()))?;
    }
    match cli.command {
        Command::Count(a) => cmd::count::run(&a),
        Command::Construct(a) => cmd::construct::run(&a),
        Command::Verify(a) => cmd::verify::run(&a),
        Command::Hitting(a) => cmd::hitting::run(&a),
        Command::Spread(c) => cmd::spread::run(&c),
        Command::Search(a) => cmd::search::run(&a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let json = cli.json;
    match execute(cli) {
        Ok(run) => {
            let text = if json { run.report.to_json() } else { run.report.to_tsv() };
            print!("{text}");
            match run.verdict {
                Ok(()) => ExitCode::SUCCESS,
                Err(f) => {
                    eprintln!("permdiv: {f}");
                    f.exit_code()
                }
            }
        }
        Err(f) => {
            eprintln!("permdiv: {f}");
            f.exit_code()
        }
    }
}
