//! Builds chains, features and exact reference quantities from a resolved config.

use nalgebra::DVector;
use projlstd_core::bounds::BoundInputs;
use projlstd_core::chain::{exact_value, make_chain, make_rewards, mu_norm, stationary_distribution, RewardKind};
use projlstd_core::features::{gram, m_functional, make_features};
use projlstd_core::rng::derive_seed;
use projlstd_core::{
    ChainKind, FeatureKind, FeatureMap, MarkovRewardProcess, ProjectionOperator, StartState, StationaryDistribution,
};

use crate::config::{ChainKindSpec, FeatureKindSpec, ResolvedConfig, RewardKindSpec, StartSpec};
use crate::error::{CliError, CliResult};

const TRAJECTORY_TAG: u64 = 1;
const PROJECTION_TAG: u64 = 2;
const VERIFY_TAG: u64 = 3;

/// Seed of the trajectory for `(seed, n)`; shared by every `d` and `λ` so that
/// estimators in a sweep are compared on the same sample path.
pub fn trajectory_seed(master: u64, seed: u64, n: usize) -> u64 {
    derive_seed(master, &[TRAJECTORY_TAG, seed, n as u64])
}

/// Seed of the projection for `(seed, d)`, shared across `n` and `λ`.
pub fn projection_seed(master: u64, projection_seed: u64, seed: u64, d: usize) -> u64 {
    derive_seed(master, &[PROJECTION_TAG, projection_seed, seed, d as u64])
}

pub fn verify_seed(master: u64, suite: u64, index: u64) -> u64 {
    derive_seed(master, &[VERIFY_TAG, suite, index])
}

pub fn build_chain(cfg: &ResolvedConfig) -> CliResult<MarkovRewardProcess> {
    let c = &cfg.chain;
    let kind = match c.kind {
        ChainKindSpec::Ring => ChainKind::Ring { stay: c.params.stay.unwrap_or(0.0) },
        ChainKindSpec::RandomErgodic => ChainKind::RandomErgodic {
            concentration: c.params.concentration.unwrap_or(1.0),
        },
        ChainKindSpec::ChainWalk => ChainKind::ChainWalk { noise: c.params.noise.unwrap_or(0.0) },
    };
    let (reward_kind, default_bound) = match (&c.rewards, c.reward_kind) {
        (Some(r), _) => (RewardKind::Explicit(r.clone()), None),
        (None, Some(RewardKindSpec::FirstState)) => (RewardKind::FirstState, None),
        (None, Some(RewardKindSpec::Cosine)) => (RewardKind::Cosine, None),
        (None, Some(RewardKindSpec::Uniform)) => {
            let r = c.r_max.unwrap_or(1.0);
            (RewardKind::Uniform { r_max: r }, Some(r))
        }
        (None, None) => return Err(CliError::Config("no reward specification".into())),
    };
    let rewards = make_rewards(&reward_kind, c.n_states, c.seed).map_err(CliError::config)?;
    let tight = rewards.amax();
    let r_max = c.r_max.or(default_bound).unwrap_or(if tight > 0.0 { tight } else { 1.0 });
    let mrp = make_chain(kind, c.n_states, rewards, c.gamma, r_max, c.seed).map_err(CliError::config)?;
    if !mrp.is_aperiodic() {
        return Err(CliError::Config(format!(
            "chain has period {}; experiments need an aperiodic chain",
            mrp.period()
        )));
    }
    Ok(mrp)
}

pub fn build_features(cfg: &ResolvedConfig) -> CliResult<FeatureMap> {
    let f = &cfg.features;
    let kind = match f.kind {
        FeatureKindSpec::OneHot => FeatureKind::OneHot,
        FeatureKindSpec::RandomBounded => FeatureKind::RandomBounded,
        FeatureKindSpec::FourierOnIndex => FeatureKind::FourierOnIndex,
    };
    make_features(kind, cfg.chain.n_states, f.big_d, f.bound, f.seed).map_err(CliError::config)
}

pub fn start_state<'a>(cfg: &ResolvedConfig, mu: &'a StationaryDistribution) -> StartState<'a> {
    match cfg.start {
        StartSpec::Stationary => StartState::Stationary(mu),
        StartSpec::Fixed(x) => StartState::Fixed(x),
    }
}

/// The chain, its features and every exact quantity the error columns need.
pub struct Model {
    pub mrp: MarkovRewardProcess,
    pub mu: StationaryDistribution,
    pub phi: FeatureMap,
    pub value: DVector<f64>,
    pub nu_f: f64,
    /// `‖V − Π_F V‖_μ`.
    pub approx_error_f: f64,
    /// `m(Π_F V)`.
    pub m_pi_f_v: f64,
    /// `Π_F V` by state.
    pub projected_f: DVector<f64>,
}

/// Chain, stationary distribution and features only.
pub struct Dynamics {
    pub mrp: MarkovRewardProcess,
    pub mu: StationaryDistribution,
    pub phi: FeatureMap,
}

impl Dynamics {
    pub fn build(cfg: &ResolvedConfig) -> CliResult<Self> {
        let mrp = build_chain(cfg)?;
        let phi = build_features(cfg)?;
        let mu = stationary_distribution(&mrp).map_err(CliError::runtime)?;
        Ok(Self { mrp, mu, phi })
    }
}

impl Model {
    pub fn build(cfg: &ResolvedConfig) -> CliResult<Self> {
        let Dynamics { mrp, mu, phi } = Dynamics::build(cfg)?;
        let value = exact_value(&mrp);
        let nu_f = gram(&phi, &mu).map_err(CliError::runtime)?.nu_min;
        let op = ProjectionOperator::new(phi.clone(), mu.clone()).map_err(CliError::config)?;
        let projected = op.project(&value).map_err(CliError::runtime)?;
        let approx_error_f = mu_norm(&mu, &(&value - &projected.values)).map_err(CliError::runtime)?;
        let m_pi_f_v = m_functional(&projected.coefficients, &phi).map_err(CliError::runtime)?;
        Ok(Self {
            mrp,
            mu,
            phi,
            value,
            nu_f,
            approx_error_f,
            m_pi_f_v,
            projected_f: projected.values,
        })
    }

    pub fn bound_inputs(&self, cfg: &ResolvedConfig, n: usize, d: usize, lambda: f64) -> BoundInputs {
        BoundInputs {
            n: n as u64,
            d,
            big_d: self.phi.dim(),
            delta: cfg.delta,
            gamma: self.mrp.gamma(),
            lambda,
            feature_bound: self.phi.bound(),
            nu_f: self.nu_f,
            v_max: self.mrp.v_max(),
            mixing: cfg.mixing,
            m_pi_f_v: self.m_pi_f_v,
        }
    }
}
