//! Wall-clock comparison of the projected estimator against the full-feature
//! baseline on a shared trajectory. Runs on the calling thread only.

use std::time::Instant;

use projlstd_core::lstd::{lstd_lambda_batch, lstd_lambda_rp_incremental};
use projlstd_core::rp::sample_projection;
use serde::Serialize;

use crate::config::ResolvedConfig;
use crate::error::{CliError, CliResult};
use crate::model::{projection_seed, start_state, trajectory_seed, Dynamics};
use crate::output::{Record, SCHEMA_VERSION};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub schema_version: &'static str,
    pub config_hash: String,
    pub n: usize,
    pub big_d: usize,
    pub d: usize,
    pub lambda: f64,
    pub warmup: usize,
    pub repeats: usize,
    pub rp_median_s: f64,
    pub rp_min_s: f64,
    pub rp_max_s: f64,
    pub baseline_median_s: f64,
    pub baseline_min_s: f64,
    pub baseline_max_s: f64,
    pub speedup: f64,
}

impl Record for BenchRow {
    const FILE: &'static str = "bench.csv";
    const COLUMNS: &'static [&'static str] = &[
        "schema_version",
        "config_hash",
        "n",
        "big_d",
        "d",
        "lambda",
        "warmup",
        "repeats",
        "rp_median_s",
        "rp_min_s",
        "rp_max_s",
        "baseline_median_s",
        "baseline_min_s",
        "baseline_max_s",
        "speedup",
    ];
}

pub struct Stats {
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

pub fn stats(mut samples: Vec<f64>) -> Stats {
    samples.sort_by(f64::total_cmp);
    let k = samples.len();
    let median = if k % 2 == 1 {
        samples[k / 2]
    } else {
        0.5 * (samples[k / 2 - 1] + samples[k / 2])
    };
    Stats {
        median,
        min: samples[0],
        max: samples[k - 1],
    }
}

fn time<T>(warmup: usize, repeats: usize, mut f: impl FnMut() -> CliResult<T>) -> CliResult<Stats> {
    for _ in 0..warmup {
        f()?;
    }
    let mut samples = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let started = Instant::now();
        std::hint::black_box(f()?);
        samples.push(started.elapsed().as_secs_f64());
    }
    Ok(stats(samples))
}

/// One row per `(n, d)` at the first configured `λ` and trajectory seed.
/// The projected timing includes drawing the projection matrix.
pub fn bench(cfg: &ResolvedConfig, model: &Dynamics, hash: &str) -> CliResult<Vec<BenchRow>> {
    let lambda = cfg.lambdas[0];
    let seed = cfg.seeds[0];
    let gamma = model.mrp.gamma();
    let big_d = model.phi.dim();
    let (warmup, repeats) = (cfg.bench.warmup, cfg.bench.repeats);
    let sampler = projlstd_core::chain::TrajectorySampler::new(&model.mrp);
    let mut rows = Vec::new();
    for &n in &cfg.ns {
        let trajectory = sampler
            .sample(n, trajectory_seed(cfg.master_seed, seed, n), start_state(cfg, &model.mu))
            .map_err(CliError::runtime)?;
        let baseline = time(warmup, repeats, || {
            lstd_lambda_batch(&trajectory, &model.phi, gamma, lambda).map_err(CliError::runtime)
        })?;
        for &d in &cfg.ds {
            let pseed = projection_seed(cfg.master_seed, cfg.projection.seed, seed, d);
            let rp = time(warmup, repeats, || {
                let h = sample_projection(d, big_d, pseed).map_err(CliError::runtime)?;
                lstd_lambda_rp_incremental(&trajectory, &model.phi, &h, gamma, lambda).map_err(CliError::runtime)
            })?;
            rows.push(BenchRow {
                schema_version: SCHEMA_VERSION,
                config_hash: hash.to_owned(),
                n,
                big_d,
                d,
                lambda,
                warmup,
                repeats,
                rp_median_s: rp.median,
                rp_min_s: rp.min,
                rp_max_s: rp.max,
                baseline_median_s: baseline.median,
                baseline_min_s: baseline.min,
                baseline_max_s: baseline.max,
                speedup: baseline.median / rp.median,
            });
        }
    }
    Ok(rows)
}
