mod cli;
mod commands;
mod ctx;
mod error;

use std::process::ExitCode;

use clap::Parser;

use cli::{Cli, Command};
use error::{CliError, Result};

/// `ROUTECAST_THREADS` caps the worker pool.
fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("ROUTECAST_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| CliError::Usage(format!("ROUTECAST_THREADS={raw:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    let ctx = ctx::Ctx {
        root: cli.root,
        no_manifest: cli.no_manifest,
        created_at: ctx::timestamp()?,
    };
    match &cli.command {
        Command::Ingest(a) => commands::ingest(&ctx, a),
        Command::Convert(a) => commands::convert_cmd(&ctx, a),
        Command::Sample(a) => commands::sample(&ctx, a),
        Command::Stability(a) => commands::stability(&ctx, a),
        Command::BuildBenchmark(a) => commands::build(&ctx, a),
        Command::Evaluate(a) => commands::evaluate(&ctx, a),
        Command::Compare(a) => commands::compare(&ctx, a),
        Command::Report(a) => commands::report(&ctx, a),
        Command::Verify(a) => commands::verify(&ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // Help and version go to stdout and succeed; everything else is a
            // usage error.
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, CliError::Usage(_)) {
                eprintln!("run `routecast --help` for usage");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
