//! Fixed benchmark workloads shared by the criterion targets.

use projlstd_core::chain::{make_chain, make_rewards, sample_trajectory, stationary_distribution, RewardKind};
use projlstd_core::features::make_features;
use projlstd_core::rp::sample_projection;
use projlstd_core::{
    BoundInputs, ChainKind, FeatureKind, FeatureMap, MixingParams, ProjectionMatrix, StartState, Trajectory,
};

pub struct Workload {
    pub features: FeatureMap,
    pub projection: ProjectionMatrix,
    pub trajectory: Trajectory,
    pub gamma: f64,
    pub lambda: f64,
}

/// A random ergodic chain with `big_d` states, random bounded features of full
/// dimension and a `d × big_d` Gaussian projection.
pub fn workload(big_d: usize, d: usize, n: usize) -> Workload {
    let gamma = 0.9;
    let rewards = make_rewards(&RewardKind::Uniform { r_max: 1.0 }, big_d, 1).unwrap();
    let mrp = make_chain(ChainKind::RandomErgodic { concentration: 1.0 }, big_d, rewards, gamma, 1.0, 1).unwrap();
    let mu = stationary_distribution(&mrp).unwrap();
    Workload {
        features: make_features(FeatureKind::RandomBounded, big_d, big_d, 1.0, 2).unwrap(),
        projection: sample_projection(d, big_d, 3).unwrap(),
        trajectory: sample_trajectory(&mrp, n, 4, StartState::Stationary(&mu)).unwrap(),
        gamma,
        lambda: 0.5,
    }
}

pub fn ring_bound_inputs(n: u64) -> BoundInputs {
    BoundInputs {
        n,
        d: 4,
        big_d: 64,
        delta: 0.1,
        gamma: 0.9,
        lambda: 0.5,
        feature_bound: 1.0,
        nu_f: 0.2,
        v_max: 10.0,
        mixing: MixingParams::default(),
        m_pi_f_v: 3.0,
    }
}
