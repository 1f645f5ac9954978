//! LSTD(λ) estimators and their model-based ground truth.
//!
//! Both sample-based paths process the `n − 1` transitions `(X_i, X_{i+1})`,
//! `i = 1..n−1`, of a trajectory and estimate
//!
//! ```text
//! Â = 1/(n−1) Σ z_i (ψ(X_i) − γ ψ(X_{i+1}))ᵀ
//! b̂ = 1/(n−1) Σ z_i r(X_i),        z_i = Σ_{k≤i} (λγ)^{i−k} ψ(X_k)
//! ```
//!
//! with `z_1 = ψ(X_1)`. The discount multiplies the next-state features in the
//! increment of `Â` on both paths.

use nalgebra::{DMatrix, DVector, DVectorView};
use serde::Serialize;

use crate::chain::{check_lambda, MarkovRewardProcess, StationaryDistribution, Trajectory};
use crate::error::{check_len, Error, Result};
use crate::features::FeatureMap;
use crate::linalg::{self, CONDITION_LIMIT};
use crate::rp::ProjectionMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveKind {
    Direct,
    PseudoInverse,
}

impl SolveKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveKind::Direct => "direct",
            SolveKind::PseudoInverse => "pseudo_inverse",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorSolution {
    pub a_hat: DMatrix<f64>,
    pub b_hat: DVector<f64>,
    pub theta: DVector<f64>,
    pub solve_kind: SolveKind,
    pub condition_estimate: f64,
    pub n_transitions: usize,
}

/// `θ = Â⁻¹b̂` when the 1-norm condition estimate is at most `1e12`, otherwise
/// the minimum-norm least-squares solution `Â†b̂`.
pub fn solve_theta(a_hat: &DMatrix<f64>, b_hat: &DVector<f64>) -> Result<(DVector<f64>, SolveKind, f64)> {
    let k = a_hat.nrows();
    check_len("square matrix columns", k, a_hat.ncols())?;
    check_len("right-hand side", k, b_hat.len())?;
    linalg::ensure_finite_matrix("A_hat", a_hat)?;
    linalg::ensure_finite_vector("b_hat", b_hat)?;

    let lu = a_hat.clone().lu();
    let condition = linalg::condition_estimate(a_hat, &lu);
    if condition <= CONDITION_LIMIT {
        if let Some(theta) = lu.solve(b_hat) {
            if theta.iter().all(|v| v.is_finite()) {
                return Ok((theta, SolveKind::Direct, condition));
            }
        }
    }

    let svd = a_hat.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let tol = k as f64 * f64::EPSILON * smax;
    let theta = if smax == 0.0 {
        DVector::zeros(k)
    } else {
        svd.solve(b_hat, tol).map_err(|e| Error::invalid(e.to_string()))?
    };
    Ok((theta, SolveKind::PseudoInverse, condition))
}

fn finish(a_hat: DMatrix<f64>, b_hat: DVector<f64>, n_transitions: usize) -> Result<EstimatorSolution> {
    let (theta, solve_kind, condition_estimate) = solve_theta(&a_hat, &b_hat)?;
    Ok(EstimatorSolution {
        a_hat,
        b_hat,
        theta,
        solve_kind,
        condition_estimate,
        n_transitions,
    })
}

/// Eligibility trace `z ← λγ z + ψ(X_t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceState {
    pub z: DVector<f64>,
    pub lambda: f64,
    pub gamma: f64,
}

impl TraceState {
    pub fn new(dim: usize, lambda: f64, gamma: f64) -> Self {
        Self {
            z: DVector::zeros(dim),
            lambda,
            gamma,
        }
    }

    pub fn push(&mut self, psi: DVectorView<'_, f64>) {
        self.z.axpy(1.0, &psi, self.lambda * self.gamma);
    }
}

fn check_estimator_inputs(trajectory: &Trajectory, n_states: usize, gamma: f64, lambda: f64) -> Result<()> {
    if trajectory.len() < 2 {
        return Err(Error::invalid("trajectory needs at least two states"));
    }
    check_len("trajectory rewards", trajectory.len(), trajectory.rewards.len())?;
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::invalid(format!("gamma must lie in [0, 1), got {gamma}")));
    }
    check_lambda(lambda)?;
    if let Some(&x) = trajectory.states.iter().find(|&&x| x >= n_states) {
        return Err(Error::invalid(format!("trajectory visits state {x} outside the feature map")));
    }
    Ok(())
}

/// LSTD(λ)-RP in its incremental form.
///
/// Projected features `ψ(X_t) = Hφ(X_t)` are computed on the fly, one matrix
/// vector product per visited state, and `Â`, `b̂` are kept as running means
/// (`Â ← Â + (ΔÂ − Â)/t` with `t` the number of transitions processed).
pub fn lstd_lambda_rp_incremental(
    trajectory: &Trajectory,
    features: &FeatureMap,
    h: &ProjectionMatrix,
    gamma: f64,
    lambda: f64,
) -> Result<EstimatorSolution> {
    check_len("projection columns", features.dim(), h.cols())?;
    check_estimator_inputs(trajectory, features.n_states(), gamma, lambda)?;
    let d = h.rows();
    let states = &trajectory.states;

    let mut a_hat = DMatrix::<f64>::zeros(d, d);
    let mut b_hat = DVector::<f64>::zeros(d);
    let mut trace = TraceState::new(d, lambda, gamma);
    let mut psi = DVector::zeros(d);
    let mut psi_next = DVector::zeros(d);
    let mut delta = DVector::zeros(d);
    h.project_into(features.feature(states[0]), &mut psi);

    for t in 1..states.len() {
        trace.push(psi.as_view());
        h.project_into(features.feature(states[t]), &mut psi_next);
        delta.copy_from(&psi);
        delta.axpy(-gamma, &psi_next, 1.0);

        let step = 1.0 / t as f64;
        let z = &trace.z;
        for c in 0..d {
            let dc = delta[c];
            let col = a_hat.column_mut(c);
            for (a, &zr) in col.into_iter().zip(z.iter()) {
                *a += step * (zr * dc - *a);
            }
        }
        let r = trajectory.rewards[t - 1];
        for (b, &zr) in b_hat.iter_mut().zip(z.iter()) {
            *b += step * (zr * r - *b);
        }
        std::mem::swap(&mut psi, &mut psi_next);
    }

    finish(a_hat, b_hat, states.len() - 1)
}

const BATCH_CHUNK: usize = 256;

/// Batch LSTD(λ) on the given features (`Ã`, `b̃` as plain sums divided by
/// `n − 1`). Given unprojected features it is the D-dimensional baseline; given
/// `Ψ = ΦHᵀ` it is the batch form of LSTD(λ)-RP.
///
/// The rank-one increments are accumulated in blocks of 256 transitions with a
/// single matrix product per block.
pub fn lstd_lambda_batch(
    trajectory: &Trajectory,
    features: &FeatureMap,
    gamma: f64,
    lambda: f64,
) -> Result<EstimatorSolution> {
    check_estimator_inputs(trajectory, features.n_states(), gamma, lambda)?;
    let k = features.dim();
    let states = &trajectory.states;
    let n_trans = states.len() - 1;
    let chunk = BATCH_CHUNK.min(n_trans);

    let mut sum_a = DMatrix::<f64>::zeros(k, k);
    let mut sum_b = DVector::<f64>::zeros(k);
    // Traces are stored as columns so the update is a plain (blocked) product.
    let mut z_block = DMatrix::<f64>::zeros(k, chunk);
    let mut d_block = DMatrix::<f64>::zeros(chunk, k);
    let mut trace = TraceState::new(k, lambda, gamma);
    let mut filled = 0;

    for i in 0..n_trans {
        let phi = features.feature(states[i]);
        let phi_next = features.feature(states[i + 1]);
        trace.push(phi);
        for j in 0..k {
            z_block[(j, filled)] = trace.z[j];
            d_block[(filled, j)] = phi[j] - gamma * phi_next[j];
        }
        sum_b.axpy(trajectory.rewards[i], &trace.z, 1.0);
        filled += 1;
        if filled == chunk || i + 1 == n_trans {
            let z = z_block.columns(0, filled);
            let dl = d_block.rows(0, filled);
            sum_a.gemm(1.0, &z, &dl, 1.0);
            filled = 0;
        }
    }

    let scale = 1.0 / n_trans as f64;
    finish(sum_a * scale, sum_b * scale, n_trans)
}

/// `V̂ = Ψθ̂`.
pub fn value_of(solution: &EstimatorSolution, features: &FeatureMap) -> Result<DVector<f64>> {
    features.combine(&solution.theta)
}

/// The exact solution of the projected λ-Bellman equation on a feature span.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelFixedPoint {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub theta_star: DVector<f64>,
    pub v_fixed: DVector<f64>,
    pub condition_estimate: f64,
}

/// `A = ΨᵀD_μ(I − γP)(I − λγP)⁻¹Ψ`, `b = ΨᵀD_μ(I − λγP)⁻¹r`, `θ* = A⁻¹b`.
pub fn model_fixed_point(
    mrp: &MarkovRewardProcess,
    mu: &StationaryDistribution,
    features: &FeatureMap,
    lambda: f64,
) -> Result<ModelFixedPoint> {
    check_lambda(lambda)?;
    let n = mrp.n_states();
    check_len("feature states", n, features.n_states())?;
    check_len("stationary distribution", n, mu.len())?;

    let gamma = mrp.gamma();
    let p = mrp.transition();
    let psi = features.matrix();
    let identity = DMatrix::<f64>::identity(n, n);
    let resolvent = (&identity - p * (lambda * gamma)).lu();
    let m = resolvent.solve(&psi).expect("I - λγP is invertible");
    let g = resolvent.solve(mrp.rewards()).expect("I - λγP is invertible");
    let discounted = &m - (p * &m) * gamma;

    let mut weighted = features.by_state().clone();
    for (mut col, &w) in weighted.column_iter_mut().zip(mu.weights().iter()) {
        col *= w;
    }
    let a = &weighted * discounted;
    let b = &weighted * g;

    let lu = a.clone().lu();
    let condition_estimate = linalg::condition_estimate(&a, &lu);
    if condition_estimate > CONDITION_LIMIT {
        return Err(Error::SingularMatrix {
            what: "model matrix A",
            condition: condition_estimate,
        });
    }
    let theta_star = lu.solve(&b).ok_or(Error::SingularMatrix {
        what: "model matrix A",
        condition: condition_estimate,
    })?;
    let v_fixed = features.combine(&theta_star)?;
    Ok(ModelFixedPoint {
        a,
        b,
        theta_star,
        v_fixed,
        condition_estimate,
    })
}
