//! Experiment configuration: JSON in, validated and fully resolved out.
//!
//! The resolved form fills in every default, so writing it back out (into the
//! JSON sidecar) records exactly what ran. Validation collects every problem
//! before failing and reports them together.

use std::path::Path;

use projlstd_core::bounds::MixingParams;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainKindSpec {
    Ring,
    RandomErgodic,
    ChainWalk,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stay: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub concentration: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardKindSpec {
    FirstState,
    Uniform,
    Cosine,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    pub kind: ChainKindSpec,
    pub n_states: usize,
    #[serde(default)]
    pub params: ChainParams,
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rewards: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reward_kind: Option<RewardKindSpec>,
    /// Declared reward bound; defaults to `max |r(x)|` (1 for `uniform`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_max: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKindSpec {
    OneHot,
    RandomBounded,
    FourierOnIndex,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureSpec {
    pub kind: FeatureKindSpec,
    #[serde(rename = "D")]
    pub big_d: usize,
    #[serde(rename = "L", default = "one")]
    pub bound: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectionSpec {
    pub d: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lambdas: Vec<f64>,
    pub ns: Vec<usize>,
    /// Projected dimensions; defaults to `[projection.d]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ds: Option<Vec<usize>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    LstdLambdaRp,
    LstdRp,
    LstdLambda,
}

impl Estimator {
    pub fn as_str(self) -> &'static str {
        match self {
            Estimator::LstdLambdaRp => "lstd_lambda_rp",
            Estimator::LstdRp => "lstd_rp",
            Estimator::LstdLambda => "lstd_lambda",
        }
    }
}

fn all_estimators() -> Vec<Estimator> {
    vec![Estimator::LstdLambdaRp, Estimator::LstdRp, Estimator::LstdLambda]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartSpec {
    Stationary,
    Fixed(usize),
}

fn default_start() -> StartSpec {
    StartSpec::Stationary
}

fn default_repeats() -> usize {
    5
}

fn default_warmup() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSpec {
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default = "default_warmup")]
    pub warmup: usize,
}

impl Default for BenchSpec {
    fn default() -> Self {
        Self {
            repeats: default_repeats(),
            warmup: default_warmup(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Jl,
    Contraction,
    GramEig,
    Mixing,
    BoundsCert,
}

impl Suite {
    pub fn as_str(self) -> &'static str {
        match self {
            Suite::Jl => "jl",
            Suite::Contraction => "contraction",
            Suite::GramEig => "gram_eig",
            Suite::Mixing => "mixing",
            Suite::BoundsCert => "bounds_cert",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JlCase {
    pub d: usize,
    pub eps: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct JlSpec {
    pub cases: Vec<JlCase>,
    /// Dimension of the test vectors.
    #[serde(rename = "D")]
    pub big_d: usize,
    pub vectors: usize,
    pub draws: usize,
}

impl Default for JlSpec {
    fn default() -> Self {
        Self {
            cases: vec![JlCase { d: 64, eps: 0.5 }, JlCase { d: 128, eps: 0.3 }],
            big_d: 512,
            vectors: 10_000,
            draws: 50,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySpec {
    pub suites: Vec<Suite>,
    pub jl: JlSpec,
    /// Random pairs per λ in the contraction suite.
    pub pairs: usize,
    /// Projection draws in the Gram-eigenvalue suite.
    pub gram_draws: usize,
    /// Trajectories in the mixing suite.
    pub mixing_runs: usize,
    /// Seeded runs in the bound certification suite.
    pub cert_runs: usize,
}

impl Default for VerifySpec {
    fn default() -> Self {
        Self {
            suites: vec![Suite::Jl, Suite::Contraction, Suite::GramEig, Suite::Mixing, Suite::BoundsCert],
            jl: JlSpec::default(),
            pairs: 1000,
            gram_draws: 1000,
            mixing_runs: 500,
            cert_runs: 200,
        }
    }
}

fn default_delta() -> f64 {
    0.1
}

/// The config file as written by the user.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub chain: ChainSpec,
    pub features: FeatureSpec,
    pub projection: ProjectionSpec,
    pub grid: GridSpec,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub mixing: Option<MixingParams>,
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    #[serde(default = "default_start")]
    pub start: StartSpec,
    #[serde(default = "all_estimators")]
    pub estimators: Vec<Estimator>,
    #[serde(default)]
    pub bench: BenchSpec,
    #[serde(default)]
    pub verify: VerifySpec,
    /// Default output directory when `--out` is not given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

/// A validated config with every default made explicit.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResolvedConfig {
    pub chain: ChainSpec,
    pub features: FeatureSpec,
    pub projection: ProjectionSpec,
    pub lambdas: Vec<f64>,
    pub ns: Vec<usize>,
    pub ds: Vec<usize>,
    pub delta: f64,
    pub mixing: MixingParams,
    pub seeds: Vec<u64>,
    pub master_seed: u64,
    pub start: StartSpec,
    pub estimators: Vec<Estimator>,
    pub bench: BenchSpec,
    pub verify: VerifySpec,
}

pub fn load(path: &Path) -> CliResult<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse(text: &str) -> CliResult<ExperimentConfig> {
    serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid config JSON: {e}")))
}

impl ExperimentConfig {
    /// Checks every field against the preconditions of the modules it feeds,
    /// then fills in defaults. `seed_override` replaces `master_seed`.
    pub fn resolve(&self, seed_override: Option<u64>) -> CliResult<ResolvedConfig> {
        let mut problems = Vec::new();
        let mut check = |ok: bool, msg: String| {
            if !ok {
                problems.push(msg);
            }
        };

        let c = &self.chain;
        check(c.n_states >= 1, "chain.n_states must be at least 1".into());
        check((0.0..1.0).contains(&c.gamma), format!("chain.gamma must lie in [0, 1), got {}", c.gamma));
        let p = &c.params;
        match c.kind {
            ChainKindSpec::Ring => {
                check(p.stay.is_some(), "chain.params.stay is required for a ring".into());
                if let Some(s) = p.stay {
                    check((0.0..1.0).contains(&s), format!("chain.params.stay must lie in [0, 1), got {s}"));
                }
            }
            ChainKindSpec::RandomErgodic => {
                let a = p.concentration.unwrap_or(1.0);
                check(a.is_finite() && a > 0.0, format!("chain.params.concentration must be positive, got {a}"));
            }
            ChainKindSpec::ChainWalk => {
                check(p.noise.is_some(), "chain.params.noise is required for a chain walk".into());
                if let Some(s) = p.noise {
                    check((0.0..=1.0).contains(&s), format!("chain.params.noise must lie in [0, 1], got {s}"));
                }
            }
        }
        match (&c.rewards, &c.reward_kind) {
            (Some(_), Some(_)) => check(false, "give either chain.rewards or chain.reward_kind, not both".into()),
            (None, None) => check(false, "one of chain.rewards or chain.reward_kind is required".into()),
            (Some(r), None) => check(
                r.len() == c.n_states,
                format!("chain.rewards has {} entries for {} states", r.len(), c.n_states),
            ),
            _ => {}
        }
        if let Some(r) = c.r_max {
            check(r.is_finite() && r > 0.0, format!("chain.r_max must be positive, got {r}"));
        }

        let f = &self.features;
        check(f.big_d >= 1, "features.D must be at least 1".into());
        check(
            f.big_d <= c.n_states,
            format!("features.D = {} exceeds chain.n_states = {}", f.big_d, c.n_states),
        );
        check(f.bound.is_finite() && f.bound > 0.0, format!("features.L must be positive, got {}", f.bound));

        let ds = self.grid.ds.clone().unwrap_or_else(|| vec![self.projection.d]);
        check(!ds.is_empty(), "grid.ds must not be empty".into());
        for &d in &ds {
            check(d >= 1 && d <= f.big_d, format!("projected dimension d = {d} must lie in [1, D = {}]", f.big_d));
        }
        check(!self.grid.lambdas.is_empty(), "grid.lambdas must not be empty".into());
        for &l in &self.grid.lambdas {
            check((0.0..=1.0).contains(&l), format!("lambda = {l} must lie in [0, 1]"));
        }
        check(!self.grid.ns.is_empty(), "grid.ns must not be empty".into());
        for &n in &self.grid.ns {
            check(n >= 2, format!("trajectory length n = {n} must be at least 2"));
        }
        check(!self.seeds.is_empty(), "seeds must not be empty".into());
        check(self.delta > 0.0 && self.delta < 1.0, format!("delta must lie in (0, 1), got {}", self.delta));
        let mixing = self.mixing.unwrap_or_default();
        if let Err(e) = mixing.validate() {
            problems.push(e.to_string());
        }
        if let StartSpec::Fixed(x) = self.start {
            if x >= c.n_states {
                problems.push(format!("start state {x} is outside the chain"));
            }
        }
        if self.estimators.is_empty() {
            problems.push("estimators must not be empty".into());
        }
        if self.bench.repeats == 0 {
            problems.push("bench.repeats must be at least 1".into());
        }
        for case in &self.verify.jl.cases {
            if !(case.eps > 0.0 && case.eps < 1.0) || case.d == 0 {
                problems.push(format!("verify.jl case d = {}, eps = {} is invalid", case.d, case.eps));
            }
        }

        if !problems.is_empty() {
            return Err(CliError::Config(problems.join("; ")));
        }
        Ok(ResolvedConfig {
            chain: self.chain.clone(),
            features: self.features.clone(),
            projection: self.projection.clone(),
            lambdas: self.grid.lambdas.clone(),
            ns: self.grid.ns.clone(),
            ds,
            delta: self.delta,
            mixing,
            seeds: self.seeds.clone(),
            master_seed: seed_override.or(self.master_seed).unwrap_or(0),
            start: self.start,
            estimators: self.estimators.clone(),
            bench: self.bench.clone(),
            verify: self.verify.clone(),
        })
    }
}
