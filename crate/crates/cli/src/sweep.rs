//! Factorial sweeps: per-cell rows, the bound table over `(n, d, λ)` and the
//! empirical versus bound-predicted minimizers.

use projlstd_core::bounds::{
    approximation_coefficient, improved_approximation_coefficient, total_bound_unchecked, BoundReport,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Estimator, ResolvedConfig};
use crate::estimate::EstimateRow;
use crate::model::Model;
use crate::output::{Record, SCHEMA_VERSION};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundRow {
    pub schema_version: &'static str,
    pub config_hash: String,
    pub n: usize,
    pub big_d: usize,
    pub d: usize,
    pub lambda: f64,
    pub gamma: f64,
    pub delta: f64,
    pub nu_f: f64,
    pub v_max: f64,
    pub approx_error_f: f64,
    pub m_pi_f_v: f64,
    pub m_n_lambda: Option<u64>,
    pub xi: Option<f64>,
    pub eta: Option<f64>,
    pub log_confidence: Option<f64>,
    pub mixing_complexity: Option<f64>,
    pub deviation_factor: Option<f64>,
    pub n0: Option<u64>,
    pub n0_cap: Option<u64>,
    pub estimation_component: Option<f64>,
    pub approximation_coefficient: f64,
    pub improved_approximation_coefficient: f64,
    pub approximation_component: Option<f64>,
    pub total_bound: Option<f64>,
    pub h_term_omitted: bool,
    pub hypotheses_hold: Option<bool>,
    pub violations: String,
    pub error: String,
}

impl Record for BoundRow {
    const FILE: &'static str = "sweep_bounds.csv";
    const COLUMNS: &'static [&'static str] = &[
        "schema_version",
        "config_hash",
        "n",
        "big_d",
        "d",
        "lambda",
        "gamma",
        "delta",
        "nu_f",
        "v_max",
        "approx_error_f",
        "m_pi_f_v",
        "m_n_lambda",
        "xi",
        "eta",
        "log_confidence",
        "mixing_complexity",
        "deviation_factor",
        "n0",
        "n0_cap",
        "estimation_component",
        "approximation_coefficient",
        "improved_approximation_coefficient",
        "approximation_component",
        "total_bound",
        "h_term_omitted",
        "hypotheses_hold",
        "violations",
        "error",
    ];
}

fn bound_row(cfg: &ResolvedConfig, model: &Model, hash: &str, n: usize, d: usize, lambda: f64) -> BoundRow {
    let inputs = model.bound_inputs(cfg, n, d, lambda);
    let gamma = inputs.gamma;
    let mut row = BoundRow {
        schema_version: SCHEMA_VERSION,
        config_hash: hash.to_owned(),
        n,
        big_d: inputs.big_d,
        d,
        lambda,
        gamma,
        delta: inputs.delta,
        nu_f: inputs.nu_f,
        v_max: inputs.v_max,
        approx_error_f: model.approx_error_f,
        m_pi_f_v: inputs.m_pi_f_v,
        m_n_lambda: None,
        xi: None,
        eta: None,
        log_confidence: None,
        mixing_complexity: None,
        deviation_factor: None,
        n0: None,
        n0_cap: None,
        estimation_component: None,
        approximation_coefficient: approximation_coefficient(lambda, gamma),
        improved_approximation_coefficient: improved_approximation_coefficient(lambda, gamma),
        approximation_component: None,
        total_bound: None,
        h_term_omitted: true,
        hypotheses_hold: None,
        violations: String::new(),
        error: String::new(),
    };
    match total_bound_unchecked(&inputs, model.approx_error_f) {
        Ok(BoundReport {
            m_n_lambda,
            xi,
            eta,
            log_confidence,
            mixing_complexity,
            deviation_factor,
            n0,
            n0_cap,
            estimation_bound,
            approximation_bound,
            total_bound,
            h_term_omitted,
            violations,
            ..
        }) => {
            row.m_n_lambda = Some(m_n_lambda);
            row.xi = Some(xi);
            row.eta = Some(eta);
            row.log_confidence = Some(log_confidence);
            row.mixing_complexity = Some(mixing_complexity);
            row.deviation_factor = Some(deviation_factor);
            row.n0 = n0;
            row.n0_cap = Some(n0_cap);
            row.estimation_component = Some(estimation_bound);
            row.approximation_component = Some(approximation_bound);
            row.total_bound = Some(total_bound);
            row.h_term_omitted = h_term_omitted;
            row.hypotheses_hold = Some(violations.is_empty());
            row.violations = violations.join(" | ");
        }
        Err(e) => row.error = e.to_string(),
    }
    row
}

/// One bound row per `(n, d, λ)`, in grid order.
pub fn bound_table(cfg: &ResolvedConfig, model: &Model, hash: &str) -> Vec<BoundRow> {
    let keys: Vec<(usize, usize, f64)> = cfg
        .ns
        .iter()
        .flat_map(|&n| cfg.ds.iter().flat_map(move |&d| cfg.lambdas.iter().map(move |&l| (n, d, l))))
        .collect();
    keys.par_iter()
        .map(|&(n, d, lambda)| bound_row(cfg, model, hash, n, d, lambda))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub schema_version: &'static str,
    pub config_hash: String,
    /// `lambda` when λ varies with `(n, d)` fixed, `d` when d varies with `(n, λ)` fixed.
    pub scan: &'static str,
    pub n: usize,
    pub d: Option<usize>,
    pub lambda: Option<f64>,
    pub grid_size: usize,
    pub runs_used: usize,
    pub empirical_argmin: Option<f64>,
    pub empirical_min_mean_total_error: Option<f64>,
    pub bound_argmin: Option<f64>,
    pub bound_min_total: Option<f64>,
    pub lambda0_mean_total_error: Option<f64>,
}

impl Record for SummaryRow {
    const FILE: &'static str = "sweep_summary.csv";
    const COLUMNS: &'static [&'static str] = &[
        "schema_version",
        "config_hash",
        "scan",
        "n",
        "d",
        "lambda",
        "grid_size",
        "runs_used",
        "empirical_argmin",
        "empirical_min_mean_total_error",
        "bound_argmin",
        "bound_min_total",
        "lambda0_mean_total_error",
    ];
}

/// Mean total error of the projected estimator over seeds at one grid point,
/// with the number of successful runs.
fn mean_total(rows: &[EstimateRow], n: usize, d: usize, lambda: f64) -> (Option<f64>, usize) {
    let vals: Vec<f64> = rows
        .iter()
        .filter(|r| r.estimator == Estimator::LstdLambdaRp.as_str() && r.n == n && r.d == d && r.lambda == lambda)
        .filter_map(|r| r.total_error)
        .collect();
    if vals.is_empty() {
        (None, 0)
    } else {
        (Some(vals.iter().sum::<f64>() / vals.len() as f64), vals.len())
    }
}

/// First minimizer; ties resolve to the earliest grid point.
fn argmin(points: impl Iterator<Item = (f64, Option<f64>)>) -> Option<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    for (x, v) in points {
        if let Some(v) = v {
            if best.is_none_or(|(_, b)| v < b) {
                best = Some((x, v));
            }
        }
    }
    best
}

fn bound_total(bounds: &[BoundRow], n: usize, d: usize, lambda: f64) -> Option<f64> {
    bounds
        .iter()
        .find(|b| b.n == n && b.d == d && b.lambda == lambda)
        .and_then(|b| b.total_bound)
}

pub fn summary(cfg: &ResolvedConfig, hash: &str, rows: &[EstimateRow], bounds: &[BoundRow]) -> Vec<SummaryRow> {
    let mut out = Vec::new();
    for &n in &cfg.ns {
        for &d in &cfg.ds {
            let means: Vec<(f64, (Option<f64>, usize))> =
                cfg.lambdas.iter().map(|&l| (l, mean_total(rows, n, d, l))).collect();
            let emp = argmin(means.iter().map(|(l, (m, _))| (*l, *m)));
            let bnd = argmin(cfg.lambdas.iter().map(|&l| (l, bound_total(bounds, n, d, l))));
            out.push(SummaryRow {
                schema_version: SCHEMA_VERSION,
                config_hash: hash.to_owned(),
                scan: "lambda",
                n,
                d: Some(d),
                lambda: None,
                grid_size: cfg.lambdas.len(),
                runs_used: means.iter().map(|(_, (_, c))| c).sum(),
                empirical_argmin: emp.map(|e| e.0),
                empirical_min_mean_total_error: emp.map(|e| e.1),
                bound_argmin: bnd.map(|b| b.0),
                bound_min_total: bnd.map(|b| b.1),
                lambda0_mean_total_error: means.iter().find(|(l, _)| *l == 0.0).and_then(|(_, (m, _))| *m),
            });
        }
        for &lambda in &cfg.lambdas {
            let means: Vec<(f64, (Option<f64>, usize))> =
                cfg.ds.iter().map(|&d| (d as f64, mean_total(rows, n, d, lambda))).collect();
            let emp = argmin(means.iter().map(|(d, (m, _))| (*d, *m)));
            let bnd = argmin(cfg.ds.iter().map(|&d| (d as f64, bound_total(bounds, n, d, lambda))));
            out.push(SummaryRow {
                schema_version: SCHEMA_VERSION,
                config_hash: hash.to_owned(),
                scan: "d",
                n,
                d: None,
                lambda: Some(lambda),
                grid_size: cfg.ds.len(),
                runs_used: means.iter().map(|(_, (_, c))| c).sum(),
                empirical_argmin: emp.map(|e| e.0),
                empirical_min_mean_total_error: emp.map(|e| e.1),
                bound_argmin: bnd.map(|b| b.0),
                bound_min_total: bnd.map(|b| b.1),
                lambda0_mean_total_error: None,
            });
        }
    }
    out
}
