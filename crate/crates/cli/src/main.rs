use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use projlstd_cli::error::CliError;
use projlstd_cli::{resolve_jobs, run, Command, RunOptions, JOBS_ENV};

/// Projected LSTD(λ) experiments.
#[derive(Debug, Parser)]
#[command(name = "projlstd", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the config's "output" field.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed, overriding the config's "master_seed".
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; falls back to PROJLSTD_JOBS, then the CPU count.
    #[arg(long)]
    jobs: Option<usize>,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(CliError::Config(String::new()).exit_code() as u8);
        }
    };
    let env = std::env::var(JOBS_ENV).ok();
    let result = resolve_jobs(args.jobs, env.as_deref()).and_then(|jobs| {
        run(&RunOptions {
            command: args.command,
            config: args.config,
            out: args.out,
            seed: args.seed,
            jobs,
        })
    });
    match result {
        Ok(paths) => {
            for p in paths {
                eprintln!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("projlstd: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
