//! Statistical and deterministic verification suites.
//!
//! Statistical checks compare an observed frequency against its nominal level
//! with a three-standard-deviation binomial allowance; deterministic checks
//! allow a fixed absolute tolerance.

use nalgebra::DVector;
use projlstd_core::bounds::{
    approximation_bound_unchecked, approximation_coefficient, estimation_bound_unchecked, estimation_violations,
    eta, mixing_hoeffding_radius, n0, ApproxCoefficient, SampleSize, DEFAULT_N0_CAP,
};
use projlstd_core::chain::{mu_norm, BellmanLambda, TrajectorySampler};
use projlstd_core::features::gram;
use projlstd_core::lstd::{lstd_lambda_rp_incremental, model_fixed_point, value_of};
use projlstd_core::rng::{standard_normal, substream, Domain};
use projlstd_core::rp::{apply, jl_distortion_rate, jl_failure_bound, sample_projection};
use projlstd_core::{ProjectionOperator, StartState};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ResolvedConfig, Suite};
use crate::model::{projection_seed, verify_seed, Model};
use crate::output::{format_params, Record, SCHEMA_VERSION};

pub const CONTRACTION_TOL: f64 = 1e-10;
pub const APPROXIMATION_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyRow {
    pub schema_version: &'static str,
    pub config_hash: String,
    pub suite: &'static str,
    pub check: &'static str,
    pub params: String,
    pub empirical: f64,
    /// `le` when `empirical` must not exceed `threshold`, `ge` otherwise.
    pub comparison: &'static str,
    pub threshold: f64,
    pub bound: f64,
    pub trials: usize,
    pub failures: usize,
    pub pass: bool,
}

impl Record for VerifyRow {
    const FILE: &'static str = "verify.csv";
    const COLUMNS: &'static [&'static str] = &[
        "schema_version",
        "config_hash",
        "suite",
        "check",
        "params",
        "empirical",
        "comparison",
        "threshold",
        "bound",
        "trials",
        "failures",
        "pass",
    ];
}

fn suite_tag(s: Suite) -> u64 {
    match s {
        Suite::Jl => 1,
        Suite::Contraction => 2,
        Suite::GramEig => 3,
        Suite::Mixing => 4,
        Suite::BoundsCert => 5,
    }
}

/// Standard deviation of a frequency over `trials` draws at level `p`.
pub fn binomial_sigma(p: f64, trials: usize) -> f64 {
    let p = p.clamp(0.0, 1.0);
    (p * (1.0 - p) / trials as f64).sqrt()
}

struct Row<'a> {
    check: &'static str,
    params: String,
    empirical: f64,
    comparison: &'static str,
    threshold: f64,
    bound: f64,
    trials: usize,
    failures: usize,
    pass: bool,
    suite: Suite,
    hash: &'a str,
}

impl From<Row<'_>> for VerifyRow {
    fn from(r: Row<'_>) -> Self {
        VerifyRow {
            schema_version: SCHEMA_VERSION,
            config_hash: r.hash.to_owned(),
            suite: r.suite.as_str(),
            check: r.check,
            params: r.params,
            empirical: r.empirical,
            comparison: r.comparison,
            threshold: r.threshold,
            bound: r.bound,
            trials: r.trials,
            failures: r.failures,
            pass: r.pass,
        }
    }
}

/// Row for "the event fails in at most a `level` fraction of trials".
fn at_most(
    suite: Suite,
    hash: &str,
    check: &'static str,
    params: String,
    level: f64,
    failures: usize,
    trials: usize,
) -> VerifyRow {
    let rate = failures as f64 / trials as f64;
    let threshold = level + 3.0 * binomial_sigma(level, trials);
    Row {
        check,
        params,
        empirical: rate,
        comparison: "le",
        threshold,
        bound: level,
        trials,
        failures,
        pass: rate <= threshold,
        suite,
        hash,
    }
    .into()
}

/// Row for "the event holds in at least a `level` fraction of trials".
fn at_least(
    suite: Suite,
    hash: &str,
    check: &'static str,
    params: String,
    level: f64,
    failures: usize,
    trials: usize,
) -> VerifyRow {
    let rate = 1.0 - failures as f64 / trials as f64;
    let threshold = level - 3.0 * binomial_sigma(level, trials);
    Row {
        check,
        params,
        empirical: rate,
        comparison: "ge",
        threshold,
        bound: level,
        trials,
        failures,
        pass: rate >= threshold,
        suite,
        hash,
    }
    .into()
}

pub struct Verifier<'a> {
    pub cfg: &'a ResolvedConfig,
    pub model: &'a Model,
    pub hash: &'a str,
}

fn gaussian_vectors(seed: u64, count: usize, dim: usize) -> Vec<DVector<f64>> {
    (0..count)
        .into_par_iter()
        .map(|k| {
            let mut rng = substream(seed, Domain::Verify, k as u64);
            DVector::from_fn(dim, |_, _| standard_normal(&mut rng))
        })
        .collect()
}

impl Verifier<'_> {
    fn seed(&self, suite: Suite, index: u64) -> u64 {
        verify_seed(self.cfg.master_seed, suite_tag(suite), index)
    }

    pub fn run(&self, suite: Suite) -> Vec<VerifyRow> {
        match suite {
            Suite::Jl => self.jl(),
            Suite::Contraction => self.contraction(),
            Suite::GramEig => self.gram_eig(),
            Suite::Mixing => self.mixing(),
            Suite::BoundsCert => self.bounds_cert(),
        }
    }

    fn error_row(&self, suite: Suite, check: &'static str, message: String) -> VerifyRow {
        Row {
            check,
            params: format_params(&[("error", message)]),
            empirical: f64::NAN,
            comparison: "le",
            threshold: f64::NAN,
            bound: f64::NAN,
            trials: 0,
            failures: 0,
            pass: false,
            suite,
            hash: self.hash,
        }
        .into()
    }

    /// Norm distortion rate of sampled projections on Gaussian test vectors.
    fn jl(&self) -> Vec<VerifyRow> {
        let spec = &self.cfg.verify.jl;
        let vectors = gaussian_vectors(self.seed(Suite::Jl, 0), spec.vectors, spec.big_d);
        let mut rows = Vec::new();
        for (c, case) in spec.cases.iter().enumerate() {
            let outcome: Result<(usize, usize), String> = (0..spec.draws)
                .into_par_iter()
                .map(|k| {
                    let seed = self.seed(Suite::Jl, 1 + (c * spec.draws + k) as u64);
                    let h = sample_projection(case.d, spec.big_d, seed).map_err(|e| e.to_string())?;
                    let r = jl_distortion_rate(&h, &vectors, case.eps).map_err(|e| e.to_string())?;
                    Ok((r.failures, r.tested))
                })
                .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)));
            let params = format_params(&[
                ("d", case.d.to_string()),
                ("eps", case.eps.to_string()),
                ("D", spec.big_d.to_string()),
                ("vectors", spec.vectors.to_string()),
                ("draws", spec.draws.to_string()),
            ]);
            rows.push(match outcome {
                Ok((failures, tested)) if tested > 0 => at_most(
                    Suite::Jl,
                    self.hash,
                    "norm_distortion_rate",
                    params,
                    jl_failure_bound(case.d, case.eps).min(1.0),
                    failures,
                    tested,
                ),
                Ok(_) => self.error_row(Suite::Jl, "norm_distortion_rate", "no nonzero test vectors".into()),
                Err(e) => self.error_row(Suite::Jl, "norm_distortion_rate", e),
            });
        }
        rows
    }

    fn projected_features(&self, seed: u64) -> projlstd_core::Result<projlstd_core::FeatureMap> {
        let d = self.cfg.ds[0];
        let h = sample_projection(d, self.model.phi.dim(), seed)?;
        apply(&h, &self.model.phi)
    }

    /// Projected λ-Bellman operator applied to random pairs of functions.
    fn contraction(&self) -> Vec<VerifyRow> {
        let cfg = self.cfg;
        let model = self.model;
        let d = cfg.ds[0];
        let pseed = projection_seed(cfg.master_seed, cfg.projection.seed, cfg.seeds[0], d);
        let setup = self
            .projected_features(pseed)
            .and_then(|psi| ProjectionOperator::new(psi, model.mu.clone()));
        let op = match setup {
            Ok(op) => op,
            Err(e) => return vec![self.error_row(Suite::Contraction, "projected_bellman_contraction", e.to_string())],
        };
        let gamma = model.mrp.gamma();
        let n_states = model.mrp.n_states();
        let scale = model.mrp.v_max().max(1.0);
        let mut rows = Vec::new();
        for (li, &lambda) in cfg.lambdas.iter().enumerate() {
            let modulus = gamma * (1.0 - lambda) / (1.0 - gamma * lambda);
            let params = format_params(&[("lambda", lambda.to_string()), ("d", d.to_string())]);
            let t = match BellmanLambda::new(&model.mrp, lambda) {
                Ok(t) => t,
                Err(e) => {
                    rows.push(self.error_row(Suite::Contraction, "projected_bellman_contraction", e.to_string()));
                    continue;
                }
            };
            let seed = self.seed(Suite::Contraction, li as u64);
            let results: Vec<Result<(bool, f64), String>> = (0..cfg.verify.pairs)
                .into_par_iter()
                .map(|k| {
                    let mut rng = substream(seed, Domain::Verify, k as u64);
                    let f1 = DVector::from_fn(n_states, |_, _| scale * standard_normal(&mut rng));
                    let f2 = DVector::from_fn(n_states, |_, _| scale * standard_normal(&mut rng));
                    let image = |f: &DVector<f64>| t.apply(f).and_then(|g| op.apply(&g));
                    let lhs = (|| mu_norm(&model.mu, &(image(&f1)? - image(&f2)?)))().map_err(|e| e.to_string())?;
                    let gap = mu_norm(&model.mu, &(&f1 - &f2)).map_err(|e| e.to_string())?;
                    let ratio = if gap > 0.0 { lhs / gap } else { 0.0 };
                    Ok((lhs <= modulus * gap + CONTRACTION_TOL, ratio))
                })
                .collect();
            match results.into_iter().collect::<Result<Vec<_>, _>>() {
                Ok(results) => {
                    let failures = results.iter().filter(|r| !r.0).count();
                    let worst = results.iter().map(|r| r.1).fold(0.0, f64::max);
                    rows.push(
                        Row {
                            check: "projected_bellman_contraction",
                            params,
                            empirical: worst,
                            comparison: "le",
                            threshold: modulus,
                            bound: modulus,
                            trials: results.len(),
                            failures,
                            pass: failures == 0,
                            suite: Suite::Contraction,
                            hash: self.hash,
                        }
                        .into(),
                    );
                }
                Err(e) => rows.push(self.error_row(Suite::Contraction, "projected_bellman_contraction", e)),
            }
        }
        rows
    }

    /// Smallest Gram eigenvalue of projected features against its lower bound.
    fn gram_eig(&self) -> Vec<VerifyRow> {
        let cfg = self.cfg;
        let model = self.model;
        let d = cfg.ds[0];
        let big_d = model.phi.dim();
        let delta = cfg.delta;
        let floor = match eta(d, big_d, delta) {
            Ok(e) => big_d as f64 / d as f64 * model.nu_f * e,
            Err(e) => return vec![self.error_row(Suite::GramEig, "projected_gram_min_eigenvalue", e.to_string())],
        };
        let results: Result<Vec<f64>, String> = (0..cfg.verify.gram_draws)
            .into_par_iter()
            .map(|k| {
                let psi = self
                    .projected_features(self.seed(Suite::GramEig, k as u64))
                    .map_err(|e| e.to_string())?;
                Ok(gram(&psi, &model.mu).map_err(|e| e.to_string())?.nu_min)
            })
            .collect();
        let params = format_params(&[
            ("d", d.to_string()),
            ("D", big_d.to_string()),
            ("delta", delta.to_string()),
            ("nu_f", model.nu_f.to_string()),
            ("floor", floor.to_string()),
        ]);
        match results {
            Ok(nu) => {
                let failures = nu.iter().filter(|&&v| v < floor).count();
                vec![at_least(
                    Suite::GramEig,
                    self.hash,
                    "projected_gram_min_eigenvalue",
                    params,
                    1.0 - delta,
                    failures,
                    nu.len(),
                )]
            }
            Err(e) => vec![self.error_row(Suite::GramEig, "projected_gram_min_eigenvalue", e)],
        }
    }

    /// Trajectory averages of the indicator of the lower half of the states.
    fn mixing(&self) -> Vec<VerifyRow> {
        let cfg = self.cfg;
        let model = self.model;
        let n = cfg.ns[0];
        let delta = cfg.delta;
        let half = model.mrp.n_states().div_ceil(2);
        let mean: f64 = model.mu.weights().iter().take(half).sum();
        let radius = match mixing_hoeffding_radius(n as u64, delta, 1.0, &cfg.mixing) {
            Ok(r) => r,
            Err(e) => return vec![self.error_row(Suite::Mixing, "average_deviation_radius", e.to_string())],
        };
        let sampler = TrajectorySampler::new(&model.mrp);
        let devs: Result<Vec<f64>, String> = (0..cfg.verify.mixing_runs)
            .into_par_iter()
            .map(|k| {
                let t = sampler
                    .sample(n, self.seed(Suite::Mixing, k as u64), StartState::Stationary(&model.mu))
                    .map_err(|e| e.to_string())?;
                let hits = t.states.iter().filter(|&&x| x < half).count();
                Ok((hits as f64 / n as f64 - mean).abs())
            })
            .collect();
        let params = format_params(&[
            ("n", n.to_string()),
            ("delta", delta.to_string()),
            ("radius", radius.to_string()),
            ("beta0", cfg.mixing.beta0.to_string()),
            ("beta1", cfg.mixing.beta1.to_string()),
            ("kappa", cfg.mixing.kappa.to_string()),
        ]);
        match devs {
            Ok(devs) => {
                let failures = devs.iter().filter(|&&v| v > radius).count();
                vec![at_most(
                    Suite::Mixing,
                    self.hash,
                    "average_deviation_radius",
                    params,
                    delta,
                    failures,
                    devs.len(),
                )]
            }
            Err(e) => vec![self.error_row(Suite::Mixing, "average_deviation_radius", e)],
        }
    }

    /// Seeded runs of the projected estimator against the error bounds.
    fn bounds_cert(&self) -> Vec<VerifyRow> {
        let cfg = self.cfg;
        let model = self.model;
        let n = cfg.ns[0];
        let d = cfg.ds[0];
        let delta = cfg.delta;
        let gamma = model.mrp.gamma();
        let runs = cfg.verify.cert_runs;
        let sampler = TrajectorySampler::new(&model.mrp);
        let mut rows = Vec::new();
        for &lambda in &cfg.lambdas {
            let inputs = model.bound_inputs(cfg, n, d, lambda);
            let violations = estimation_violations(&inputs);
            let n0_text = match n0(&inputs, DEFAULT_N0_CAP) {
                Ok(SampleSize::Found(v)) => v.to_string(),
                Ok(SampleSize::NotFoundBelowCap(c)) => format!("not_found_below_{c}"),
                Err(e) => format!("undefined ({e})"),
            };
            let base = [("lambda", lambda.to_string()), ("n", n.to_string()), ("d", d.to_string())];
            rows.push(
                Row {
                    check: "estimation_hypotheses",
                    params: format_params(&[
                        &base[..],
                        &[("n0", n0_text), ("violations", violations.join(" | "))],
                    ]
                    .concat()),
                    empirical: violations.len() as f64,
                    comparison: "le",
                    threshold: 0.0,
                    bound: 0.0,
                    trials: 1,
                    failures: usize::from(!violations.is_empty()),
                    pass: violations.is_empty(),
                    suite: Suite::BoundsCert,
                    hash: self.hash,
                }
                .into(),
            );
            let est_bound = estimation_bound_unchecked(&inputs);
            let approx_bound = approximation_bound_unchecked(&inputs, model.approx_error_f, ApproxCoefficient::Standard);
            let (est_bound, approx_bound) = match (est_bound, approx_bound) {
                (Ok(e), Ok(a)) => (e, a),
                (Err(e), _) | (_, Err(e)) => {
                    rows.push(self.error_row(Suite::BoundsCert, "estimation_bound", e.to_string()));
                    continue;
                }
            };
            let coefficient = approximation_coefficient(lambda, gamma);
            // (estimation error, ‖V − V_fixed‖, ‖V − Π_G V‖) per run; a failed
            // estimator counts as an infinite estimation error.
            let results: Vec<Result<(f64, f64, f64), String>> = (0..runs)
                .into_par_iter()
                .map(|k| {
                    let tseed = self.seed(Suite::BoundsCert, k as u64);
                    let hseed = self.seed(Suite::BoundsCert, (1 << 32) | k as u64);
                    let h = sample_projection(d, model.phi.dim(), hseed).map_err(|e| e.to_string())?;
                    let psi = apply(&h, &model.phi).map_err(|e| e.to_string())?;
                    let op = ProjectionOperator::new(psi.clone(), model.mu.clone()).map_err(|e| e.to_string())?;
                    let pi_g_v = op.apply(&model.value).map_err(|e| e.to_string())?;
                    let fp = model_fixed_point(&model.mrp, &model.mu, &psi, lambda).map_err(|e| e.to_string())?;
                    let norm = |v: DVector<f64>| mu_norm(&model.mu, &v).map_err(|e| e.to_string());
                    let approx = norm(&model.value - &fp.v_fixed)?;
                    let approx_g = norm(&model.value - &pi_g_v)?;
                    let t = sampler
                        .sample(n, tseed, StartState::Stationary(&model.mu))
                        .map_err(|e| e.to_string())?;
                    let est = match lstd_lambda_rp_incremental(&t, &model.phi, &h, gamma, lambda)
                        .and_then(|s| value_of(&s, &psi))
                    {
                        Ok(v_hat) => norm(v_hat - &fp.v_fixed)?,
                        Err(_) => f64::INFINITY,
                    };
                    Ok((est, approx, approx_g))
                })
                .collect();
            let results = match results.into_iter().collect::<Result<Vec<_>, _>>() {
                Ok(r) => r,
                Err(e) => {
                    rows.push(self.error_row(Suite::BoundsCert, "estimation_bound", e));
                    continue;
                }
            };
            let est_fail = results.iter().filter(|r| !(r.0 <= est_bound)).count();
            let mean_est = results.iter().map(|r| r.0).sum::<f64>() / runs as f64;
            rows.push(at_least(
                Suite::BoundsCert,
                self.hash,
                "estimation_bound",
                format_params(&[
                    &base[..],
                    &[
                        ("bound", est_bound.to_string()),
                        ("mean_error", mean_est.to_string()),
                        ("h_term_omitted", "true".into()),
                    ],
                ]
                .concat()),
                1.0 - delta,
                est_fail,
                runs,
            ));
            let ineq_fail = results
                .iter()
                .filter(|r| !(r.1 <= coefficient * r.2 + APPROXIMATION_TOL))
                .count();
            rows.push(
                Row {
                    check: "approximation_inequality",
                    params: format_params(&[&base[..], &[("coefficient", coefficient.to_string())]].concat()),
                    empirical: 1.0 - ineq_fail as f64 / runs as f64,
                    comparison: "ge",
                    threshold: 1.0,
                    bound: 1.0,
                    trials: runs,
                    failures: ineq_fail,
                    pass: ineq_fail == 0,
                    suite: Suite::BoundsCert,
                    hash: self.hash,
                }
                .into(),
            );
            let approx_fail = results.iter().filter(|r| !(r.1 <= approx_bound)).count();
            rows.push(at_least(
                Suite::BoundsCert,
                self.hash,
                "approximation_bound",
                format_params(&[&base[..], &[("bound", approx_bound.to_string())]].concat()),
                1.0 - delta,
                approx_fail,
                runs,
            ));
        }
        rows
    }
}
