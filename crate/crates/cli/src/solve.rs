//! Exact, model-based quantities for every `(d, λ)` of a config.

use nalgebra::DVector;
use projlstd_core::bounds::approximation_coefficient;
use projlstd_core::chain::{bellman_lambda, mu_norm};
use projlstd_core::features::gram;
use projlstd_core::lstd::model_fixed_point;
use projlstd_core::rp::{apply, sample_projection};
use projlstd_core::ProjectionOperator;
use serde::Serialize;

use crate::config::ResolvedConfig;
use crate::model::{projection_seed, Model};
use crate::output::{Record, SCHEMA_VERSION};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveRow {
    pub schema_version: &'static str,
    pub config_hash: String,
    pub d: usize,
    pub lambda: f64,
    pub projection_seed: u64,
    pub n_states: usize,
    pub big_d: usize,
    pub gamma: f64,
    pub v_max: f64,
    pub nu_f: f64,
    pub nu_g: Option<f64>,
    pub approx_error_f: f64,
    pub approx_error_g: Option<f64>,
    pub fixed_point_error: Option<f64>,
    pub approximation_inequality_rhs: Option<f64>,
    pub fixed_point_residual: Option<f64>,
    pub condition_estimate: Option<f64>,
    pub error: String,
}

impl Record for SolveRow {
    const FILE: &'static str = "solve_summary.csv";
    const COLUMNS: &'static [&'static str] = &[
        "schema_version",
        "config_hash",
        "d",
        "lambda",
        "projection_seed",
        "n_states",
        "big_d",
        "gamma",
        "v_max",
        "nu_f",
        "nu_g",
        "approx_error_f",
        "approx_error_g",
        "fixed_point_error",
        "approximation_inequality_rhs",
        "fixed_point_residual",
        "condition_estimate",
        "error",
    ];
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StateRow {
    pub schema_version: &'static str,
    pub d: usize,
    pub lambda: f64,
    pub state: usize,
    pub mu: f64,
    pub reward: f64,
    pub value: f64,
    pub projected_value_f: f64,
    pub projected_value_g: Option<f64>,
    pub v_fixed: Option<f64>,
}

impl Record for StateRow {
    const FILE: &'static str = "solve_states.csv";
    const COLUMNS: &'static [&'static str] = &[
        "schema_version",
        "d",
        "lambda",
        "state",
        "mu",
        "reward",
        "value",
        "projected_value_f",
        "projected_value_g",
        "v_fixed",
    ];
}

struct Exact {
    nu_g: f64,
    approx_error_g: f64,
    pi_g_v: DVector<f64>,
    v_fixed: DVector<f64>,
    fixed_point_error: f64,
    residual: f64,
    condition: f64,
}

fn exact(model: &Model, d: usize, lambda: f64, seed: u64) -> projlstd_core::Result<Exact> {
    let h = sample_projection(d, model.phi.dim(), seed)?;
    let psi = apply(&h, &model.phi)?;
    let nu_g = gram(&psi, &model.mu)?.nu_min;
    let op = ProjectionOperator::new(psi.clone(), model.mu.clone())?;
    let pi_g_v = op.apply(&model.value)?;
    let approx_error_g = mu_norm(&model.mu, &(&model.value - &pi_g_v))?;
    let fp = model_fixed_point(&model.mrp, &model.mu, &psi, lambda)?;
    let fixed_point_error = mu_norm(&model.mu, &(&model.value - &fp.v_fixed))?;
    let image = op.apply(&bellman_lambda(&model.mrp, lambda, &fp.v_fixed)?)?;
    let residual = mu_norm(&model.mu, &(&fp.v_fixed - image))?;
    Ok(Exact {
        nu_g,
        approx_error_g,
        pi_g_v,
        v_fixed: fp.v_fixed,
        fixed_point_error,
        residual,
        condition: fp.condition_estimate,
    })
}

/// The projection for dimension `d` is the one the first trajectory seed uses
/// in `estimate` and `sweep`.
pub fn solve(cfg: &ResolvedConfig, model: &Model, hash: &str) -> (Vec<SolveRow>, Vec<StateRow>) {
    let projected_f = &model.projected_f;
    let mut rows = Vec::new();
    let mut states = Vec::new();
    let weights = model.mu.weights();
    for &d in &cfg.ds {
        let seed = projection_seed(cfg.master_seed, cfg.projection.seed, cfg.seeds[0], d);
        for &lambda in &cfg.lambdas {
            let result = exact(model, d, lambda, seed);
            let gamma = model.mrp.gamma();
            let mut row = SolveRow {
                schema_version: SCHEMA_VERSION,
                config_hash: hash.to_owned(),
                d,
                lambda,
                projection_seed: seed,
                n_states: model.mrp.n_states(),
                big_d: model.phi.dim(),
                gamma,
                v_max: model.mrp.v_max(),
                nu_f: model.nu_f,
                nu_g: None,
                approx_error_f: model.approx_error_f,
                approx_error_g: None,
                fixed_point_error: None,
                approximation_inequality_rhs: None,
                fixed_point_residual: None,
                condition_estimate: None,
                error: String::new(),
            };
            match &result {
                Ok(e) => {
                    row.nu_g = Some(e.nu_g);
                    row.approx_error_g = Some(e.approx_error_g);
                    row.fixed_point_error = Some(e.fixed_point_error);
                    row.approximation_inequality_rhs = Some(approximation_coefficient(lambda, gamma) * e.approx_error_g);
                    row.fixed_point_residual = Some(e.residual);
                    row.condition_estimate = Some(e.condition);
                }
                Err(e) => row.error = e.to_string(),
            }
            rows.push(row);
            for x in 0..model.mrp.n_states() {
                let ok = result.as_ref().ok();
                states.push(StateRow {
                    schema_version: SCHEMA_VERSION,
                    d,
                    lambda,
                    state: x,
                    mu: weights[x],
                    reward: model.mrp.rewards()[x],
                    value: model.value[x],
                    projected_value_f: projected_f[x],
                    projected_value_g: ok.map(|e| e.pi_g_v[x]),
                    v_fixed: ok.map(|e| e.v_fixed[x]),
                });
            }
        }
    }
    (rows, states)
}
