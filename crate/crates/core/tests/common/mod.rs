//! Reference implementations written independently of the library code paths.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use projlstd_core::chain::{make_chain, make_rewards, ChainKind, RewardKind};
use projlstd_core::{FeatureMap, MarkovRewardProcess};

/// Gaussian elimination with partial pivoting on plain vectors.
pub fn dense_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row: Vec<f64> = (0..n).map(|j| a[(i, j)]).collect();
            row.push(b[i]);
            row
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        m.swap(col, pivot);
        let p = m[col][col];
        assert!(p.abs() > 1e-300, "singular system in oracle");
        for i in col + 1..n {
            let f = m[i][col] / p;
            if f != 0.0 {
                for j in col..=n {
                    m[i][j] -= f * m[col][j];
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| m[i][j] * x[j]).sum();
        x[i] = (m[i][n] - s) / m[i][i];
    }
    x
}

pub fn dense_solve_vec(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    DVector::from_vec(dense_solve(a, b))
}

/// `Σ_x μ(x) φ(x)φ(x)ᵀ` by explicit triple loop.
pub fn naive_gram(phi: &DMatrix<f64>, mu: &[f64]) -> DMatrix<f64> {
    let (nx, k) = phi.shape();
    let mut g = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            let mut s = 0.0;
            for x in 0..nx {
                s += phi[(x, i)] * mu[x] * phi[(x, j)];
            }
            g[(i, j)] = s;
        }
    }
    g
}

/// `(1−λ) Σ_{i=0}^{K} λ^i T^{i+1} f`.
pub fn series_bellman_lambda(mrp: &MarkovRewardProcess, lambda: f64, f: &DVector<f64>, k: usize) -> DVector<f64> {
    let t = |v: &DVector<f64>| mrp.rewards() + mrp.transition() * v * mrp.gamma();
    let mut power = t(f);
    let mut acc = power.clone() * (1.0 - lambda);
    let mut weight = 1.0 - lambda;
    for _ in 1..=k {
        power = t(&power);
        weight *= lambda;
        acc += &power * weight;
    }
    acc
}

/// Row-by-row `ψ(x) = Hφ(x)` with explicit dot products.
pub fn naive_apply(h: &DMatrix<f64>, phi: &DMatrix<f64>) -> DMatrix<f64> {
    let (nx, big_d) = phi.shape();
    let d = h.nrows();
    DMatrix::from_fn(nx, d, |x, i| (0..big_d).map(|j| h[(i, j)] * phi[(x, j)]).sum())
}

/// Batch sums with every trace recomputed from its definition
/// `z_i = Σ_{k≤i} (λγ)^{i−k} ψ(X_k)`; quadratic in the trajectory length.
pub fn double_loop_sums(
    states: &[usize],
    rewards: &[f64],
    psi: &DMatrix<f64>,
    gamma: f64,
    lambda: f64,
) -> (DMatrix<f64>, DVector<f64>) {
    let d = psi.ncols();
    let n = states.len();
    let mut a = DMatrix::zeros(d, d);
    let mut b = DVector::zeros(d);
    for i in 0..n - 1 {
        let mut z = vec![0.0; d];
        for k in 0..=i {
            let w = (lambda * gamma).powi((i - k) as i32);
            for c in 0..d {
                z[c] += w * psi[(states[k], c)];
            }
        }
        for r in 0..d {
            for c in 0..d {
                a[(r, c)] += z[r] * (psi[(states[i], c)] - gamma * psi[(states[i + 1], c)]);
            }
            b[r] += z[r] * rewards[i];
        }
    }
    let scale = 1.0 / (n - 1) as f64;
    (a * scale, b * scale)
}

pub fn rel_diff_mat(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax() / b.amax().max(1e-300)
}

pub fn rel_diff_vec(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).amax() / b.amax().max(1e-300)
}

pub fn ring5(gamma: f64) -> MarkovRewardProcess {
    let r = make_rewards(&RewardKind::FirstState, 5, 0).unwrap();
    make_chain(ChainKind::Ring { stay: 0.1 }, 5, r, gamma, 1.0, 0).unwrap()
}

pub fn random_chain(n_states: usize, gamma: f64, seed: u64) -> MarkovRewardProcess {
    let r = make_rewards(&RewardKind::Uniform { r_max: 1.0 }, n_states, seed).unwrap();
    make_chain(ChainKind::RandomErgodic { concentration: 1.0 }, n_states, r, gamma, 1.0, seed).unwrap()
}

pub fn feature_rows(f: &FeatureMap) -> DMatrix<f64> {
    f.matrix()
}
