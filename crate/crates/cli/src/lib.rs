//! Experiment harness for projected LSTD(λ): config ingestion, estimator
//! comparisons, sweeps, timing runs and verification suites, all written as
//! CSV tables with a JSON sidecar.
//!
//! Every command is a deterministic function of the resolved config, so the
//! worker count never changes an output byte. Wall-clock measurements are the
//! exception and live in their own files (`*_timings.csv`, `bench.csv`).

pub mod bench;
pub mod config;
pub mod error;
pub mod estimate;
pub mod model;
pub mod output;
pub mod solve;
pub mod sweep;
pub mod verify;

use std::path::{Path, PathBuf};

use crate::config::ResolvedConfig;
use crate::error::{CliError, CliResult};
use crate::estimate::{Context, EstimateRecord, EstimateTiming, SweepRecord, SweepTiming};
use crate::model::{Dynamics, Model};
use crate::output::{config_hash, ensure_dir, write_sidecar, write_table, Record};
use crate::verify::{VerifyRow, Verifier};

/// Environment variable overriding the worker count when `--jobs` is absent.
pub const JOBS_ENV: &str = "PROJLSTD_JOBS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Solve,
    Estimate,
    Sweep,
    Bench,
    Verify,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Estimate => "estimate",
            Command::Sweep => "sweep",
            Command::Bench => "bench",
            Command::Verify => "verify",
        }
    }
}

/// Worker count: the flag, then the environment value, then the CPU count.
pub fn resolve_jobs(flag: Option<usize>, env: Option<&str>) -> CliResult<usize> {
    let jobs = match (flag, env) {
        (Some(j), _) => j,
        (None, Some(v)) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("{JOBS_ENV} must be a positive integer, got {v:?}")))?,
        (None, None) => return Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    };
    if jobs == 0 {
        return Err(CliError::Config("job count must be at least 1".into()));
    }
    Ok(jobs)
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub command: Command,
    pub config: PathBuf,
    /// Overrides the config's `output` field.
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub jobs: usize,
}

/// Loads and validates a config, returning it with its output directory.
pub fn prepare(opts: &RunOptions) -> CliResult<(ResolvedConfig, PathBuf)> {
    let raw = config::load(&opts.config)?;
    let out = match (&opts.out, &raw.output) {
        (Some(p), _) => p.clone(),
        (None, Some(p)) => PathBuf::from(p),
        (None, None) => return Err(CliError::Config("no output directory: pass --out or set \"output\"".into())),
    };
    Ok((raw.resolve(opts.seed)?, out))
}

/// Runs one command and returns the paths it wrote.
pub fn run(opts: &RunOptions) -> CliResult<Vec<PathBuf>> {
    let (cfg, out) = prepare(opts)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(CliError::runtime)?;
    pool.install(|| execute(opts.command, &cfg, &out))
}

fn finish(dir: &Path, command: Command, cfg: &ResolvedConfig, mut paths: Vec<PathBuf>) -> CliResult<Vec<PathBuf>> {
    let names: Vec<String> = paths
        .iter()
        .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect();
    let names: Vec<&str> = names.iter().map(String::as_str).collect();
    paths.push(write_sidecar(dir, command.as_str(), cfg, &names)?);
    Ok(paths)
}

fn wrap<R: Record>(rows: Vec<estimate::EstimateRow>, f: fn(estimate::EstimateRow) -> R) -> Vec<R> {
    rows.into_iter().map(f).collect()
}

pub fn execute(command: Command, cfg: &ResolvedConfig, out: &Path) -> CliResult<Vec<PathBuf>> {
    let hash = config_hash(cfg);
    // Timing runs skip the exact reference quantities.
    if command == Command::Bench {
        let dynamics = Dynamics::build(cfg)?;
        ensure_dir(out)?;
        let rows = bench::bench(cfg, &dynamics, &hash)?;
        return finish(out, command, cfg, vec![write_table(out, &rows)?]);
    }
    let model = Model::build(cfg)?;
    ensure_dir(out)?;
    match command {
        Command::Bench => unreachable!(),
        Command::Solve => {
            let (rows, states) = solve::solve(cfg, &model, &hash);
            let paths = vec![write_table(out, &rows)?, write_table(out, &states)?];
            finish(out, command, cfg, paths)
        }
        Command::Estimate => {
            let ctx = Context::new(cfg, &model, hash);
            let (rows, timings) = ctx.run_all(&estimate::cells(cfg));
            let timings: Vec<_> = timings.into_iter().map(EstimateTiming).collect();
            let paths = vec![
                write_table(out, &wrap(rows, EstimateRecord))?,
                write_table(out, &timings)?,
            ];
            finish(out, command, cfg, paths)
        }
        Command::Sweep => {
            let ctx = Context::new(cfg, &model, hash.clone());
            let (rows, timings) = ctx.run_all(&estimate::cells(cfg));
            let bounds = sweep::bound_table(cfg, &model, &hash);
            let summary = sweep::summary(cfg, &hash, &rows, &bounds);
            let timings: Vec<_> = timings.into_iter().map(SweepTiming).collect();
            let paths = vec![
                write_table(out, &wrap(rows, SweepRecord))?,
                write_table(out, &bounds)?,
                write_table(out, &summary)?,
                write_table(out, &timings)?,
            ];
            finish(out, command, cfg, paths)
        }
        Command::Verify => {
            let verifier = Verifier {
                cfg,
                model: &model,
                hash: &hash,
            };
            let rows: Vec<VerifyRow> = cfg.verify.suites.iter().flat_map(|&s| verifier.run(s)).collect();
            let paths = finish(out, command, cfg, vec![write_table(out, &rows)?])?;
            let failed: Vec<String> = rows
                .iter()
                .filter(|r| !r.pass)
                .map(|r| format!("{}/{} [{}]", r.suite, r.check, r.params))
                .collect();
            if failed.is_empty() {
                Ok(paths)
            } else {
                Err(CliError::Verification(failed.join("; ")))
            }
        }
    }
}
