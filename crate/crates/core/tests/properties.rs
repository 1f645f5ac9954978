mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use projlstd_core::chain::{bellman, exact_value, mu_norm, sample_trajectory, stationary_distribution, BellmanLambda};
use projlstd_core::features::{gram, make_features};
use projlstd_core::linalg::symmetric_min_eigenvalue;
use projlstd_core::lstd::{lstd_lambda_batch, lstd_lambda_rp_incremental, model_fixed_point, TraceState};
use projlstd_core::rp::{apply, sample_projection};
use projlstd_core::{FeatureKind, ProjectionMatrix, ProjectionOperator, StartState};

fn vector(len: usize, seed: u64, scale: f64) -> DVector<f64> {
    let mut state = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
    DVector::from_fn(len, |_, _| {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        ((state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0) * scale
    })
}

#[derive(Debug, Clone)]
struct Setup {
    n_states: usize,
    big_d: usize,
    d: usize,
    gamma: f64,
    lambda: f64,
    seed: u64,
}

fn setups() -> impl Strategy<Value = Setup> {
    (3usize..12, 0.0f64..0.99, 0.0f64..=1.0, any::<u64>())
        .prop_flat_map(|(n, g, l, s)| (Just(n), 2usize..=n, Just(g), Just(l), Just(s)))
        .prop_flat_map(|(n, big_d, g, l, s)| (Just(n), Just(big_d), 1usize..=big_d, Just(g), Just(l), Just(s)))
        .prop_map(|(n_states, big_d, d, gamma, lambda, seed)| Setup {
            n_states,
            big_d,
            d,
            gamma,
            lambda,
            seed,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_chains_are_stochastic(n in 1usize..20, stay in 0.0f64..1.0, noise in 0.0f64..1.0, seed in any::<u64>()) {
        use projlstd_core::chain::make_transition;
        use projlstd_core::ChainKind;
        for kind in [ChainKind::Ring { stay }, ChainKind::RandomErgodic { concentration: 0.5 }, ChainKind::ChainWalk { noise }] {
            let p = make_transition(kind, n, seed).unwrap();
            for row in p.row_iter() {
                prop_assert!((row.sum() - 1.0).abs() <= 1e-12);
                prop_assert!(row.min() >= 0.0);
            }
        }
    }

    #[test]
    fn exact_value_is_the_unique_fixed_point(n in 1usize..12, gamma in 0.0f64..0.99, seed in any::<u64>(), bump in 1e-6f64..1.0) {
        let mrp = random_chain(n, gamma, seed);
        let v = exact_value(&mrp);
        prop_assert!((bellman(&mrp, &v).unwrap() - &v).amax() <= 1e-10 * (1.0 + v.amax()));
        let mut w = v.clone();
        w[seed as usize % n] += bump;
        prop_assert!((bellman(&mrp, &w).unwrap() - &w).amax() > 1e-12);
    }

    #[test]
    fn lambda_operator_contracts(s in setups(), a in any::<u64>(), b in any::<u64>()) {
        let mrp = random_chain(s.n_states, s.gamma, s.seed);
        let mu = stationary_distribution(&mrp).unwrap();
        let t = BellmanLambda::new(&mrp, s.lambda).unwrap();
        let f1 = vector(s.n_states, a, 10.0);
        let f2 = vector(s.n_states, b, 10.0);
        let lhs = mu_norm(&mu, &(t.apply(&f1).unwrap() - t.apply(&f2).unwrap())).unwrap();
        let rhs = t.contraction_modulus() * mu_norm(&mu, &(&f1 - &f2)).unwrap() + 1e-10;
        prop_assert!(lhs <= rhs, "{lhs} > {rhs}");

        let f = make_features(FeatureKind::RandomBounded, s.n_states, s.big_d, 1.0, s.seed).unwrap();
        let op = ProjectionOperator::new(f, mu.clone()).unwrap();
        let lhs = mu_norm(&mu, &(op.apply(&t.apply(&f1).unwrap()).unwrap() - op.apply(&t.apply(&f2).unwrap()).unwrap())).unwrap();
        prop_assert!(lhs <= rhs);
    }

    #[test]
    fn projection_geometry(s in setups(), fs in any::<u64>(), bs in any::<u64>()) {
        let mrp = random_chain(s.n_states, s.gamma, s.seed);
        let mu = stationary_distribution(&mrp).unwrap();
        let phi = make_features(FeatureKind::RandomBounded, s.n_states, s.big_d, 1.0, s.seed).unwrap();
        let op = ProjectionOperator::new(phi.clone(), mu.clone()).unwrap();
        let f = vector(s.n_states, fs, 5.0);
        let proj = op.project(&f).unwrap();
        let pf = &proj.values;

        // idempotence
        prop_assert!(mu_norm(&mu, &(op.apply(pf).unwrap() - pf)).unwrap() <= 1e-9);
        // in the span
        prop_assert!((phi.combine(&proj.coefficients).unwrap() - pf).amax() <= 1e-9 * (1.0 + pf.amax()));
        // non-expansive
        prop_assert!(mu_norm(&mu, pf).unwrap() <= mu_norm(&mu, &f).unwrap() + 1e-10);
        // optimal among the span
        let beta = vector(s.big_d, bs, 3.0);
        let other = phi.combine(&beta).unwrap();
        prop_assert!(mu_norm(&mu, &(&f - pf)).unwrap() <= mu_norm(&mu, &(&f - other)).unwrap() + 1e-10);
        // residual orthogonal to every column
        let residual = (&f - pf).component_mul(mu.weights());
        prop_assert!((phi.by_state() * residual).amax() <= 1e-9 * (1.0 + f.amax()));
        // Pythagoras
        let total = mu_norm(&mu, &f).unwrap().powi(2);
        let parts = mu_norm(&mu, pf).unwrap().powi(2) + mu_norm(&mu, &(&f - pf)).unwrap().powi(2);
        prop_assert!((total - parts).abs() <= 1e-10 * (1.0 + total));

        // two-stage projection onto span(ΦHᵀ) ⊆ span(Φ)
        let h = sample_projection(s.d, s.big_d, s.seed).unwrap();
        let psi = apply(&h, &phi).unwrap();
        if let Ok(op_g) = ProjectionOperator::new(psi, mu.clone()) {
            if op_g.gram().condition() < 1e8 {
                let direct = op_g.apply(&f).unwrap();
                let staged = op_g.apply(pf).unwrap();
                prop_assert!((direct - staged).amax() <= 1e-9 * (1.0 + f.amax()));
            }
        }
    }

    #[test]
    fn gram_invariants(s in setups(), x in any::<usize>(), eps in 1e-3f64..1.0) {
        let mrp = random_chain(s.n_states, s.gamma, s.seed);
        let mu = stationary_distribution(&mrp).unwrap();
        let phi = make_features(FeatureKind::RandomBounded, s.n_states, s.big_d, 1.0, s.seed).unwrap();
        let g = gram(&phi, &mu).unwrap();
        prop_assert!((&g.matrix - g.matrix.transpose()).amax() <= 1e-12);
        prop_assert!(g.nu_min >= -1e-12);
        prop_assert!((g.nu_min - g.matrix.clone().symmetric_eigenvalues().min()).abs() <= 1e-10);
        // adding weight at one state cannot lower the smallest eigenvalue
        let p = phi.feature(x % s.n_states).clone_owned();
        let heavier = &g.matrix + &p * p.transpose() * eps;
        prop_assert!(symmetric_min_eigenvalue(&heavier) >= g.nu_min - 1e-12);
    }

    #[test]
    fn trace_recursion_matches_closed_form(n in 1usize..200, lambda in 0.0f64..=1.0, gamma in 0.0f64..0.999, seed in any::<u64>()) {
        let d = 3;
        let psis: Vec<DVector<f64>> = (0..n).map(|i| vector(d, seed.wrapping_add(i as u64), 1.0)).collect();
        let mut trace = TraceState::new(d, lambda, gamma);
        for i in 0..n {
            trace.push(psis[i].as_view());
            let mut closed = DVector::zeros(d);
            for (k, p) in psis.iter().enumerate().take(i + 1) {
                closed += p * (lambda * gamma).powi((i - k) as i32);
            }
            prop_assert!((&trace.z - &closed).amax() <= 1e-12 * closed.amax().max(1.0));
        }
    }

    #[test]
    fn incremental_equals_batch(s in setups()) {
        let mrp = random_chain(s.n_states, s.gamma, s.seed);
        let mu = stationary_distribution(&mrp).unwrap();
        let phi = make_features(FeatureKind::RandomBounded, s.n_states, s.big_d, 1.0, s.seed).unwrap();
        let h = sample_projection(s.d, s.big_d, s.seed ^ 1).unwrap();
        let traj = sample_trajectory(&mrp, 300, s.seed, StartState::Stationary(&mu)).unwrap();
        let inc = lstd_lambda_rp_incremental(&traj, &phi, &h, s.gamma, s.lambda).unwrap();
        let batch = lstd_lambda_batch(&traj, &apply(&h, &phi).unwrap(), s.gamma, s.lambda).unwrap();
        prop_assert!(rel_diff_mat(&inc.a_hat, &batch.a_hat) <= 1e-10);
        prop_assert!(rel_diff_vec(&inc.b_hat, &batch.b_hat) <= 1e-10);
    }

    #[test]
    fn reductions_compose(s in setups()) {
        let mrp = random_chain(s.n_states, s.gamma, s.seed);
        let mu = stationary_distribution(&mrp).unwrap();
        let phi = make_features(FeatureKind::RandomBounded, s.n_states, s.big_d, 1.0, s.seed).unwrap();
        let traj = sample_trajectory(&mrp, 150, s.seed, StartState::Stationary(&mu)).unwrap();

        // identity projection gives batch LSTD(λ) on Φ
        let inc = lstd_lambda_rp_incremental(&traj, &phi, &ProjectionMatrix::identity(s.big_d), s.gamma, s.lambda).unwrap();
        let base = lstd_lambda_batch(&traj, &phi, s.gamma, s.lambda).unwrap();
        prop_assert!(rel_diff_mat(&inc.a_hat, &base.a_hat) <= 1e-10);
        prop_assert!(rel_diff_vec(&inc.b_hat, &base.b_hat) <= 1e-10);

        // λ = 0 and H = I together give plain LSTD written out directly
        let plain = lstd_lambda_rp_incremental(&traj, &phi, &ProjectionMatrix::identity(s.big_d), s.gamma, 0.0).unwrap();
        let mut a = DMatrix::zeros(s.big_d, s.big_d);
        let mut b = DVector::zeros(s.big_d);
        for i in 0..traj.n_transitions() {
            let p = phi.feature(traj.states[i]);
            let q = phi.feature(traj.states[i + 1]);
            a += p * (p - q * s.gamma).transpose();
            b += p * traj.rewards[i];
        }
        let scale = 1.0 / traj.n_transitions() as f64;
        prop_assert!(rel_diff_mat(&plain.a_hat, &(a * scale)) <= 1e-10);
        prop_assert!(rel_diff_vec(&plain.b_hat, &(b * scale)) <= 1e-10);
    }

    #[test]
    fn fixed_point_invariants(s in setups()) {
        let mrp = random_chain(s.n_states, s.gamma, s.seed);
        let mu = stationary_distribution(&mrp).unwrap();
        let phi = make_features(FeatureKind::RandomBounded, s.n_states, s.big_d, 1.0, s.seed).unwrap();
        let psi = apply(&sample_projection(s.d, s.big_d, s.seed).unwrap(), &phi).unwrap();
        let fp = match model_fixed_point(&mrp, &mu, &psi, s.lambda) {
            Ok(fp) => fp,
            Err(_) => return Ok(()),
        };
        prop_assume!(fp.condition_estimate < 1e6);
        let scale = fp.a.amax() * fp.theta_star.amax() + fp.b.amax();
        prop_assert!((&fp.a * &fp.theta_star - &fp.b).amax() <= 1e-9 * scale.max(1.0));
        prop_assert!((psi.combine(&fp.theta_star).unwrap() - &fp.v_fixed).amax() == 0.0);
        let op = ProjectionOperator::new(psi, mu.clone()).unwrap();
        let t = BellmanLambda::new(&mrp, s.lambda).unwrap();
        let image = op.apply(&t.apply(&fp.v_fixed).unwrap()).unwrap();
        prop_assert!(mu_norm(&mu, &(&fp.v_fixed - image)).unwrap() <= 1e-8 * (1.0 + fp.v_fixed.amax()));
    }
}
