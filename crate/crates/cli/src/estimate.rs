//! Per-cell estimation: one trajectory, one projection, every configured
//! estimator, errors against exact references, and the matching bounds.

use std::collections::HashMap;
use std::time::Instant;

use nalgebra::DVector;
use projlstd_core::bounds::{
    approximation_bound_unchecked, approximation_violations, estimation_bound_unchecked, estimation_violations,
    total_components_unchecked, total_violations, ApproxCoefficient,
};
use projlstd_core::chain::{mu_norm, TrajectorySampler};
use projlstd_core::lstd::{
    lstd_lambda_batch, lstd_lambda_rp_incremental, model_fixed_point, value_of, EstimatorSolution, ModelFixedPoint,
};
use projlstd_core::rp::{apply, sample_projection};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Estimator, ResolvedConfig};
use crate::model::{projection_seed, start_state, trajectory_seed, Model};
use crate::output::{Record, SCHEMA_VERSION};

/// Tolerance of the per-row triangle inequality check.
pub const TRIANGLE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub index: usize,
    pub seed: u64,
    pub n: usize,
    pub d: usize,
    pub lambda: f64,
}

/// The full factorial grid, ordered by `n`, then `d`, then `λ`, then seed.
pub fn cells(cfg: &ResolvedConfig) -> Vec<Cell> {
    let mut out = Vec::new();
    for &n in &cfg.ns {
        for &d in &cfg.ds {
            for &lambda in &cfg.lambdas {
                for &seed in &cfg.seeds {
                    out.push(Cell {
                        index: out.len(),
                        seed,
                        n,
                        d,
                        lambda,
                    });
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateRow {
    pub schema_version: &'static str,
    pub config_hash: String,
    pub cell: usize,
    pub estimator: &'static str,
    pub seed: u64,
    pub trajectory_seed: u64,
    pub projection_seed: Option<u64>,
    pub n: usize,
    pub big_d: usize,
    pub d: usize,
    pub lambda: f64,
    pub gamma: f64,
    pub estimation_error: Option<f64>,
    pub approximation_error: Option<f64>,
    pub total_error: Option<f64>,
    pub triangle_ok: Option<bool>,
    pub solve_kind: Option<&'static str>,
    pub condition_estimate: Option<f64>,
    pub estimation_bound: Option<f64>,
    pub approximation_bound: Option<f64>,
    pub total_bound: Option<f64>,
    pub bound_hypotheses_hold: Option<bool>,
    pub error: String,
}

pub const ESTIMATE_COLUMNS: &[&str] = &[
    "schema_version",
    "config_hash",
    "cell",
    "estimator",
    "seed",
    "trajectory_seed",
    "projection_seed",
    "n",
    "big_d",
    "d",
    "lambda",
    "gamma",
    "estimation_error",
    "approximation_error",
    "total_error",
    "triangle_ok",
    "solve_kind",
    "condition_estimate",
    "estimation_bound",
    "approximation_bound",
    "total_bound",
    "bound_hypotheses_hold",
    "error",
];

/// Rows of `estimate.csv`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct EstimateRecord(pub EstimateRow);

impl Record for EstimateRecord {
    const FILE: &'static str = "estimate.csv";
    const COLUMNS: &'static [&'static str] = ESTIMATE_COLUMNS;
}

/// Rows of `sweep.csv` (same layout as `estimate.csv`).
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct SweepRecord(pub EstimateRow);

impl Record for SweepRecord {
    const FILE: &'static str = "sweep.csv";
    const COLUMNS: &'static [&'static str] = ESTIMATE_COLUMNS;
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimingRow {
    pub schema_version: &'static str,
    pub cell: usize,
    pub estimator: &'static str,
    pub seconds: f64,
}

pub const TIMING_COLUMNS: &[&str] = &["schema_version", "cell", "estimator", "seconds"];

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct EstimateTiming(pub TimingRow);

impl Record for EstimateTiming {
    const FILE: &'static str = "estimate_timings.csv";
    const COLUMNS: &'static [&'static str] = TIMING_COLUMNS;
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct SweepTiming(pub TimingRow);

impl Record for SweepTiming {
    const FILE: &'static str = "sweep_timings.csv";
    const COLUMNS: &'static [&'static str] = TIMING_COLUMNS;
}

/// Everything shared by the cells of one run.
pub struct Context<'a> {
    pub cfg: &'a ResolvedConfig,
    pub model: &'a Model,
    pub hash: String,
    sampler: TrajectorySampler<'a>,
    /// Fixed points of the unprojected features, by `λ`.
    baseline: HashMap<u64, Result<ModelFixedPoint, String>>,
}

impl<'a> Context<'a> {
    pub fn new(cfg: &'a ResolvedConfig, model: &'a Model, hash: String) -> Self {
        let mut baseline = HashMap::new();
        if cfg.estimators.contains(&Estimator::LstdLambda) {
            for &lambda in &cfg.lambdas {
                baseline.entry(lambda.to_bits()).or_insert_with(|| {
                    model_fixed_point(&model.mrp, &model.mu, &model.phi, lambda).map_err(|e| e.to_string())
                });
            }
        }
        Self {
            cfg,
            model,
            hash,
            sampler: TrajectorySampler::new(&model.mrp),
            baseline,
        }
    }
}

struct Errors {
    estimation: f64,
    approximation: f64,
    total: f64,
}

fn errors(model: &Model, v_hat: &DVector<f64>, v_fixed: &DVector<f64>) -> Errors {
    let mu = &model.mu;
    let norm = |v: DVector<f64>| mu_norm(mu, &v).expect("lengths agree");
    Errors {
        estimation: norm(v_hat - v_fixed),
        approximation: norm(&model.value - v_fixed),
        total: norm(&model.value - v_hat),
    }
}

impl Context<'_> {
    fn blank_row(&self, cell: &Cell, estimator: Estimator, traj_seed: u64, proj_seed: Option<u64>) -> EstimateRow {
        let (d, lambda) = match estimator {
            Estimator::LstdLambdaRp => (cell.d, cell.lambda),
            Estimator::LstdRp => (cell.d, 0.0),
            Estimator::LstdLambda => (self.model.phi.dim(), cell.lambda),
        };
        EstimateRow {
            schema_version: SCHEMA_VERSION,
            config_hash: self.hash.clone(),
            cell: cell.index,
            estimator: estimator.as_str(),
            seed: cell.seed,
            trajectory_seed: traj_seed,
            projection_seed: proj_seed,
            n: cell.n,
            big_d: self.model.phi.dim(),
            d,
            lambda,
            gamma: self.model.mrp.gamma(),
            estimation_error: None,
            approximation_error: None,
            total_error: None,
            triangle_ok: None,
            solve_kind: None,
            condition_estimate: None,
            estimation_bound: None,
            approximation_bound: None,
            total_bound: None,
            bound_hypotheses_hold: None,
            error: String::new(),
        }
    }

    fn fill_bounds(&self, row: &mut EstimateRow) {
        let inputs = self.model.bound_inputs(self.cfg, row.n, row.d, row.lambda);
        let af = self.model.approx_error_f;
        row.estimation_bound = estimation_bound_unchecked(&inputs).ok();
        row.approximation_bound = approximation_bound_unchecked(&inputs, af, ApproxCoefficient::Standard).ok();
        row.total_bound = total_components_unchecked(&inputs, af).ok().map(|(e, a)| e + a);
        row.bound_hypotheses_hold = Some(
            estimation_violations(&inputs).is_empty()
                && approximation_violations(&inputs).is_empty()
                && total_violations(&inputs).is_empty(),
        );
    }

    fn fill_solution(&self, row: &mut EstimateRow, sol: &EstimatorSolution, v_hat: &DVector<f64>, v_fixed: &DVector<f64>) {
        let e = errors(self.model, v_hat, v_fixed);
        row.estimation_error = Some(e.estimation);
        row.approximation_error = Some(e.approximation);
        row.total_error = Some(e.total);
        row.triangle_ok = Some(e.total <= e.estimation + e.approximation + TRIANGLE_TOL);
        row.solve_kind = Some(sol.solve_kind.as_str());
        row.condition_estimate = Some(sol.condition_estimate);
    }

    /// Runs one cell. Estimator failures are recorded in the `error` column
    /// and never abort the cell.
    pub fn run_cell(&self, cell: &Cell) -> (Vec<EstimateRow>, Vec<TimingRow>) {
        let cfg = self.cfg;
        let model = self.model;
        let traj_seed = trajectory_seed(cfg.master_seed, cell.seed, cell.n);
        let proj_seed = projection_seed(cfg.master_seed, cfg.projection.seed, cell.seed, cell.d);
        let gamma = model.mrp.gamma();
        let mut rows = Vec::new();
        let mut timings = Vec::new();

        let trajectory = match self.sampler.sample(cell.n, traj_seed, start_state(cfg, &model.mu)) {
            Ok(t) => t,
            Err(e) => {
                for &est in &cfg.estimators {
                    let mut row = self.blank_row(cell, est, traj_seed, None);
                    row.error = format!("trajectory: {e}");
                    rows.push(row);
                }
                return (rows, timings);
            }
        };
        let h = sample_projection(cell.d, model.phi.dim(), proj_seed);

        for &est in &cfg.estimators {
            let uses_h = est != Estimator::LstdLambda;
            let mut row = self.blank_row(cell, est, traj_seed, uses_h.then_some(proj_seed));
            let lambda = row.lambda;
            let started = Instant::now();
            let outcome: Result<(), String> = (|| {
                if uses_h {
                    let h = h.as_ref().map_err(|e| e.to_string())?;
                    let sol = lstd_lambda_rp_incremental(&trajectory, &model.phi, h, gamma, lambda)
                        .map_err(|e| e.to_string())?;
                    let elapsed = started.elapsed().as_secs_f64();
                    timings.push(TimingRow {
                        schema_version: SCHEMA_VERSION,
                        cell: cell.index,
                        estimator: est.as_str(),
                        seconds: elapsed,
                    });
                    let psi = apply(h, &model.phi).map_err(|e| e.to_string())?;
                    let v_hat = value_of(&sol, &psi).map_err(|e| e.to_string())?;
                    let fp = model_fixed_point(&model.mrp, &model.mu, &psi, lambda)
                        .map_err(|e| format!("fixed point: {e}"))?;
                    self.fill_solution(&mut row, &sol, &v_hat, &fp.v_fixed);
                    self.fill_bounds(&mut row);
                } else {
                    let sol = lstd_lambda_batch(&trajectory, &model.phi, gamma, lambda).map_err(|e| e.to_string())?;
                    let elapsed = started.elapsed().as_secs_f64();
                    timings.push(TimingRow {
                        schema_version: SCHEMA_VERSION,
                        cell: cell.index,
                        estimator: est.as_str(),
                        seconds: elapsed,
                    });
                    let v_hat = value_of(&sol, &model.phi).map_err(|e| e.to_string())?;
                    let fp = self.baseline[&lambda.to_bits()]
                        .as_ref()
                        .map_err(|e| format!("fixed point: {e}"))?;
                    self.fill_solution(&mut row, &sol, &v_hat, &fp.v_fixed);
                }
                Ok(())
            })();
            if let Err(e) = outcome {
                row.error = e;
            }
            rows.push(row);
        }
        (rows, timings)
    }

    /// Runs `cells` on the current thread pool; output order follows cell order.
    pub fn run_all(&self, cells: &[Cell]) -> (Vec<EstimateRow>, Vec<TimingRow>) {
        let per_cell: Vec<_> = cells.par_iter().map(|c| self.run_cell(c)).collect();
        let mut rows = Vec::new();
        let mut timings = Vec::new();
        for (r, t) in per_cell {
            rows.extend(r);
            timings.extend(t);
        }
        (rows, timings)
    }
}
