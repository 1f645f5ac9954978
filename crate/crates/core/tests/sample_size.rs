//! Trajectory-level checks of the concentration radius and of invertibility at `n₀`.

use nalgebra::{DMatrix, DVector};
use projlstd_core::bounds::{mixing_hoeffding_radius, n0, DEFAULT_N0_CAP};
use projlstd_core::chain::{make_chain, make_rewards, sample_trajectory, stationary_distribution, ChainKind, RewardKind};
use projlstd_core::features::gram;
use projlstd_core::lstd::lstd_lambda_batch;
use projlstd_core::rp::{apply, sample_projection};
use projlstd_core::{BoundInputs, FeatureMap, MarkovRewardProcess, MixingParams, SolveKind, StartState};

#[test]
fn empirical_means_stay_within_the_mixing_radius() {
    let r = make_rewards(&RewardKind::FirstState, 5, 0).unwrap();
    let mrp = make_chain(ChainKind::Ring { stay: 0.1 }, 5, r, 0.9, 1.0, 0).unwrap();
    let mu = stationary_distribution(&mrp).unwrap();
    let (n, delta, runs) = (1000, 0.1, 500);
    let radius = mixing_hoeffding_radius(n as u64, delta, 1.0, &MixingParams::default()).unwrap();
    let exceed = (0..runs)
        .filter(|&s| {
            let t = sample_trajectory(&mrp, n, s, StartState::Stationary(&mu)).unwrap();
            let mean = t.states.iter().filter(|&&x| x == 0).count() as f64 / n as f64;
            (mean - mu.weights()[0]).abs() > radius
        })
        .count();
    let p = delta;
    let slack = 3.0 * (p * (1.0 - p) / runs as f64).sqrt();
    assert!(exceed as f64 / runs as f64 <= p + slack);
}

fn sylvester_hadamard(order: usize) -> DMatrix<f64> {
    let mut h = DMatrix::from_element(1, 1, 1.0);
    while h.nrows() < order {
        let k = h.nrows();
        h = DMatrix::from_fn(2 * k, 2 * k, |i, j| {
            let s = if i >= k && j >= k { -1.0 } else { 1.0 };
            s * h[(i % k, j % k)]
        });
    }
    h
}

/// Identically distributed rows make the path i.i.d. from the uniform law, so
/// `β(m) = 0` for every `m ≥ 1` and any positive `β₀` is admissible.
#[test]
#[ignore = "200 trajectories of about 6e6 steps; several minutes"]
fn direct_solve_at_the_sample_size_threshold() {
    let states = 1024;
    let mrp = MarkovRewardProcess::new(
        DMatrix::from_element(states, states, 1.0 / states as f64),
        DVector::from_fn(states, |x, _| if x % 2 == 0 { 1.0 } else { -1.0 }),
        0.0,
        1.0,
    )
    .unwrap();
    let mu = stationary_distribution(&mrp).unwrap();
    let phi = FeatureMap::new(sylvester_hadamard(states), 1.0).unwrap();
    let nu_f = gram(&phi, &mu).unwrap().nu_min;
    let delta = 0.1;
    let inputs = BoundInputs {
        n: 2,
        d: 1,
        big_d: states,
        delta,
        gamma: 0.0,
        lambda: 0.0,
        feature_bound: 1.0,
        nu_f,
        v_max: 1.0,
        mixing: MixingParams::new(1e-6, 100.0, 1.0).unwrap(),
        m_pi_f_v: 0.0,
    };
    let n = n0(&inputs, DEFAULT_N0_CAP).unwrap().found().unwrap() as usize;
    let runs = 200;
    let direct = (0..runs as u64)
        .filter(|&s| {
            let psi = apply(&sample_projection(1, states, s).unwrap(), &phi).unwrap();
            let t = sample_trajectory(&mrp, n, s, StartState::Stationary(&mu)).unwrap();
            lstd_lambda_batch(&t, &psi, 0.0, 0.0).unwrap().solve_kind == SolveKind::Direct
        })
        .count();
    assert!(direct as f64 >= (1.0 - delta) * runs as f64, "{direct} of {runs}");
}
