//! Finite Markov reward processes.
//!
//! A [`MarkovRewardProcess`] is the chain obtained once a fixed policy has been
//! applied: a row-stochastic transition matrix, a deterministic state reward and
//! a discount factor. Everything the estimators are measured against lives here:
//! the stationary distribution μ, the exact value function, the Bellman
//! operators `T` and `T^λ`, and the μ-weighted norm.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector, Dyn, LU};
use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{check_len, Error, Result};
use crate::rng::{self, Domain};

/// Tolerance on transition row sums.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// Residual accepted for `μᵀP = μᵀ`.
pub const STATIONARY_RESIDUAL_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct MarkovRewardProcess {
    transition: DMatrix<f64>,
    rewards: DVector<f64>,
    gamma: f64,
    r_max: f64,
    period: usize,
}

impl MarkovRewardProcess {
    /// Validates and builds a chain.
    ///
    /// Rows of `transition` must be nonnegative and sum to one within
    /// [`ROW_SUM_TOL`], every `|r(x)| ≤ r_max`, `0 ≤ gamma < 1`, and the support
    /// graph must be strongly connected. The period of the chain is recorded;
    /// see [`Self::is_aperiodic`].
    pub fn new(
        transition: DMatrix<f64>,
        rewards: DVector<f64>,
        gamma: f64,
        r_max: f64,
    ) -> Result<Self> {
        let n = transition.nrows();
        if n == 0 {
            return Err(Error::invalid("chain needs at least one state"));
        }
        check_len("transition columns", n, transition.ncols())?;
        check_len("reward vector", n, rewards.len())?;
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::invalid(format!("gamma must lie in [0, 1), got {gamma}")));
        }
        if !(r_max.is_finite() && r_max > 0.0) {
            return Err(Error::invalid(format!("r_max must be positive, got {r_max}")));
        }
        for (x, &r) in rewards.iter().enumerate() {
            if !r.is_finite() || r.abs() > r_max {
                return Err(Error::invalid(format!(
                    "reward r({x}) = {r} exceeds the declared bound {r_max}"
                )));
            }
        }
        for (i, row) in transition.row_iter().enumerate() {
            let sum: f64 = row.iter().sum();
            let min = row.min();
            if !sum.is_finite() || min < 0.0 || (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::NotStochastic { row: i, sum, min });
            }
        }
        let period = period_of(&transition)?;
        Ok(Self {
            transition,
            rewards,
            gamma,
            r_max,
            period,
        })
    }

    /// Like [`Self::new`] with `r_max = max |r(x)|` (or 1 for an all-zero reward).
    pub fn with_tight_bound(
        transition: DMatrix<f64>,
        rewards: DVector<f64>,
        gamma: f64,
    ) -> Result<Self> {
        let r_max = rewards.amax();
        let r_max = if r_max > 0.0 { r_max } else { 1.0 };
        Self::new(transition, rewards, gamma, r_max)
    }

    pub fn n_states(&self) -> usize {
        self.transition.nrows()
    }

    pub fn transition(&self) -> &DMatrix<f64> {
        &self.transition
    }

    pub fn rewards(&self) -> &DVector<f64> {
        &self.rewards
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// `V_max = R_max / (1 − γ)`.
    pub fn v_max(&self) -> f64 {
        self.r_max / (1.0 - self.gamma)
    }

    pub fn period(&self) -> usize {
        self.period
    }

    pub fn is_aperiodic(&self) -> bool {
        self.period == 1
    }

    /// The same chain and rewards under a different discount.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(self.transition.clone(), self.rewards.clone(), gamma, self.r_max)
    }

    fn check_vector(&self, f: &DVector<f64>) -> Result<()> {
        check_len("value vector", self.n_states(), f.len())
    }
}

/// Strong connectivity by forward and backward reachability from state 0,
/// then the period as the gcd of `level(u) + 1 − level(v)` over every edge,
/// where `level` is the BFS depth from state 0.
fn period_of(p: &DMatrix<f64>) -> Result<usize> {
    let n = p.nrows();
    let forward = bfs_levels(n, |u, v| p[(u, v)] > 0.0);
    if let Some(x) = forward.iter().position(Option::is_none) {
        return Err(Error::NotErgodic(format!("state {x} is not reachable from state 0")));
    }
    let backward = bfs_levels(n, |u, v| p[(v, u)] > 0.0);
    if let Some(x) = backward.iter().position(Option::is_none) {
        return Err(Error::NotErgodic(format!("state 0 is not reachable from state {x}")));
    }
    let level: Vec<i64> = forward.into_iter().map(|l| l.unwrap() as i64).collect();
    let mut g = 0_i64;
    for u in 0..n {
        for v in 0..n {
            if p[(u, v)] > 0.0 {
                g = gcd(g, (level[u] + 1 - level[v]).abs());
            }
        }
    }
    Ok(g.max(1) as usize)
}

fn bfs_levels(n: usize, edge: impl Fn(usize, usize) -> bool) -> Vec<Option<usize>> {
    let mut level = vec![None; n];
    let mut queue = VecDeque::from([0]);
    level[0] = Some(0);
    while let Some(u) = queue.pop_front() {
        let lu = level[u].unwrap();
        for v in 0..n {
            if level[v].is_none() && edge(u, v) {
                level[v] = Some(lu + 1);
                queue.push_back(v);
            }
        }
    }
    level
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Probability vector μ with `μᵀP = μᵀ`.
#[derive(Clone, Debug, PartialEq)]
pub struct StationaryDistribution {
    mu: DVector<f64>,
}

impl StationaryDistribution {
    /// Wraps a probability vector. Only the simplex constraints are checked;
    /// stationarity with respect to a particular chain is the caller's claim.
    pub fn new(mu: DVector<f64>) -> Result<Self> {
        if mu.is_empty() {
            return Err(Error::invalid("empty distribution"));
        }
        if mu.iter().any(|&m| !m.is_finite() || m < 0.0) {
            return Err(Error::invalid("distribution has negative or non-finite mass"));
        }
        let s = mu.sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("distribution sums to {s}, not 1")));
        }
        Ok(Self { mu })
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            mu: DVector::from_element(n, 1.0 / n as f64),
        }
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.mu
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    /// `‖μᵀP − μᵀ‖_∞`.
    pub fn residual(&self, mrp: &MarkovRewardProcess) -> f64 {
        (mrp.transition.tr_mul(&self.mu) - &self.mu).amax()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct StationaryOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for StationaryOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-13,
            max_iterations: 1_000_000,
        }
    }
}

pub fn stationary_distribution(mrp: &MarkovRewardProcess) -> Result<StationaryDistribution> {
    stationary_distribution_with(mrp, StationaryOptions::default())
}

/// Power iteration on `Pᵀ` from the uniform vector, falling back to a dense
/// solve when it stalls (or straight away for periodic chains, where the
/// iteration oscillates).
pub fn stationary_distribution_with(
    mrp: &MarkovRewardProcess,
    opts: StationaryOptions,
) -> Result<StationaryDistribution> {
    let n = mrp.n_states();
    let p = &mrp.transition;

    if mrp.is_aperiodic() {
        let mut x = DVector::from_element(n, 1.0 / n as f64);
        for _ in 0..opts.max_iterations {
            let mut next = p.tr_mul(&x);
            let s = next.sum();
            next /= s;
            let diff = (&next - &x).lp_norm(1);
            x = next;
            if diff <= opts.tolerance {
                let dist = StationaryDistribution { mu: x };
                if dist.residual(mrp) <= STATIONARY_RESIDUAL_TOL {
                    return Ok(dist);
                }
                break;
            }
        }
    }

    dense_stationary(mrp)
}

fn dense_stationary(mrp: &MarkovRewardProcess) -> Result<StationaryDistribution> {
    let n = mrp.n_states();
    let mut a = mrp.transition.transpose() - DMatrix::<f64>::identity(n, n);
    a.row_mut(n - 1).fill(1.0);
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = 1.0;
    let solved = a.lu().solve(&rhs);
    let Some(mut mu) = solved else {
        return Err(Error::NoConvergence {
            iterations: 0,
            residual: f64::INFINITY,
        });
    };
    mu.iter_mut().for_each(|m| *m = m.max(0.0));
    let s = mu.sum();
    mu /= s;
    let dist = StationaryDistribution { mu };
    let residual = dist.residual(mrp);
    if residual <= STATIONARY_RESIDUAL_TOL {
        Ok(dist)
    } else {
        Err(Error::NoConvergence {
            iterations: 0,
            residual,
        })
    }
}

/// `V = (I − γP)⁻¹ r`.
pub fn exact_value(mrp: &MarkovRewardProcess) -> DVector<f64> {
    let n = mrp.n_states();
    let a = DMatrix::<f64>::identity(n, n) - &mrp.transition * mrp.gamma;
    a.lu()
        .solve(&mrp.rewards)
        .expect("I - γP is invertible for γ < 1 and stochastic P")
}

/// `T f = r + γ P f`.
pub fn bellman(mrp: &MarkovRewardProcess, f: &DVector<f64>) -> Result<DVector<f64>> {
    mrp.check_vector(f)?;
    Ok(&mrp.rewards + (&mrp.transition * f) * mrp.gamma)
}

/// The λ-averaged Bellman operator with its resolvent factored once.
///
/// `T^λ f = (I − λγP)⁻¹ r + (1 − λ) γ P (I − λγP)⁻¹ f`, with `λ = 1` taken as
/// the limit (the exact value function, independent of `f`).
#[derive(Clone, Debug)]
pub struct BellmanLambda {
    lambda: f64,
    gamma: f64,
    transition: DMatrix<f64>,
    rewards: DVector<f64>,
    resolvent: Option<LU<f64, Dyn, Dyn>>,
    offset: DVector<f64>,
}

impl BellmanLambda {
    pub fn new(mrp: &MarkovRewardProcess, lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        let n = mrp.n_states();
        if lambda == 1.0 {
            return Ok(Self {
                lambda,
                gamma: mrp.gamma,
                transition: mrp.transition.clone(),
                rewards: mrp.rewards.clone(),
                resolvent: None,
                offset: exact_value(mrp),
            });
        }
        let m = DMatrix::<f64>::identity(n, n) - &mrp.transition * (lambda * mrp.gamma);
        let lu = m.lu();
        let offset = lu.solve(&mrp.rewards).expect("I - λγP is invertible");
        Ok(Self {
            lambda,
            gamma: mrp.gamma,
            transition: mrp.transition.clone(),
            rewards: mrp.rewards.clone(),
            resolvent: Some(lu),
            offset,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Modulus `γ(1 − λ)/(1 − γλ)` of `T^λ` as a contraction in any stationary μ-norm.
    pub fn contraction_modulus(&self) -> f64 {
        self.gamma * (1.0 - self.lambda) / (1.0 - self.gamma * self.lambda)
    }

    pub fn apply(&self, f: &DVector<f64>) -> Result<DVector<f64>> {
        check_len("value vector", self.offset.len(), f.len())?;
        if self.lambda == 0.0 {
            return Ok(&self.rewards + (&self.transition * f) * self.gamma);
        }
        match &self.resolvent {
            None => Ok(self.offset.clone()),
            Some(lu) => {
                let g = lu.solve(f).expect("I - λγP is invertible");
                Ok(&self.offset + (&self.transition * g) * ((1.0 - self.lambda) * self.gamma))
            }
        }
    }
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if (0.0..=1.0).contains(&lambda) {
        Ok(())
    } else {
        Err(Error::invalid(format!("lambda must lie in [0, 1], got {lambda}")))
    }
}

pub fn bellman_lambda(
    mrp: &MarkovRewardProcess,
    lambda: f64,
    f: &DVector<f64>,
) -> Result<DVector<f64>> {
    mrp.check_vector(f)?;
    BellmanLambda::new(mrp, lambda)?.apply(f)
}

/// `‖f‖_μ = sqrt(Σ_x μ(x) f(x)²)`.
pub fn mu_norm(mu: &StationaryDistribution, f: &DVector<f64>) -> Result<f64> {
    check_len("value vector", mu.len(), f.len())?;
    Ok(mu
        .mu
        .iter()
        .zip(f.iter())
        .map(|(m, v)| m * v * v)
        .sum::<f64>()
        .sqrt())
}

/// A sampled path `X_1..X_n` with its rewards.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub states: Vec<usize>,
    pub rewards: Vec<f64>,
    pub seed: u64,
    pub stationary_start: bool,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Number of transitions `(X_i, X_{i+1})`, i.e. `n − 1`.
    pub fn n_transitions(&self) -> usize {
        self.states.len().saturating_sub(1)
    }
}

#[derive(Clone, Copy, Debug)]
pub enum StartState<'a> {
    /// `X_1 ~ μ`.
    Stationary(&'a StationaryDistribution),
    Fixed(usize),
}

/// Inverse-CDF sampler over the rows of a chain; reusable across trajectories.
#[derive(Clone, Debug)]
pub struct TrajectorySampler<'a> {
    mrp: &'a MarkovRewardProcess,
    cumulative: Vec<f64>,
    last_positive: Vec<usize>,
}

impl<'a> TrajectorySampler<'a> {
    pub fn new(mrp: &'a MarkovRewardProcess) -> Self {
        let n = mrp.n_states();
        let mut cumulative = Vec::with_capacity(n * n);
        let mut last_positive = Vec::with_capacity(n);
        for row in mrp.transition.row_iter() {
            let mut acc = 0.0;
            let mut last = 0;
            for (j, &p) in row.iter().enumerate() {
                acc += p;
                cumulative.push(acc);
                if p > 0.0 {
                    last = j;
                }
            }
            last_positive.push(last);
        }
        Self {
            mrp,
            cumulative,
            last_positive,
        }
    }

    fn next_state<R: Rng + ?Sized>(&self, x: usize, rng: &mut R) -> usize {
        let n = self.mrp.n_states();
        let row = &self.cumulative[x * n..(x + 1) * n];
        let u: f64 = rng.random();
        let j = row.partition_point(|&c| c <= u);
        j.min(self.last_positive[x])
    }

    /// Samples `n ≥ 2` states. Identical seed and start give an identical path.
    pub fn sample(&self, n: usize, seed: u64, start: StartState<'_>) -> Result<Trajectory> {
        if n < 2 {
            return Err(Error::invalid(format!("trajectory needs n >= 2, got {n}")));
        }
        let n_states = self.mrp.n_states();
        let mut rng = rng::stream(seed, Domain::Trajectory);
        let first = match start {
            StartState::Fixed(x) => {
                if x >= n_states {
                    return Err(Error::invalid(format!("start state {x} out of range")));
                }
                x
            }
            StartState::Stationary(mu) => {
                check_len("stationary distribution", n_states, mu.len())?;
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut pick = n_states - 1;
                for (x, &m) in mu.mu.iter().enumerate() {
                    acc += m;
                    if u < acc {
                        pick = x;
                        break;
                    }
                }
                while mu.mu[pick] == 0.0 && pick > 0 {
                    pick -= 1;
                }
                pick
            }
        };
        let mut states = Vec::with_capacity(n);
        states.push(first);
        for t in 1..n {
            let next = self.next_state(states[t - 1], &mut rng);
            states.push(next);
        }
        let rewards = states.iter().map(|&x| self.mrp.rewards[x]).collect();
        Ok(Trajectory {
            states,
            rewards,
            seed,
            stationary_start: matches!(start, StartState::Stationary(_)),
        })
    }
}

pub fn sample_trajectory(
    mrp: &MarkovRewardProcess,
    n: usize,
    seed: u64,
    start: StartState<'_>,
) -> Result<Trajectory> {
    TrajectorySampler::new(mrp).sample(n, seed, start)
}

/// Benchmark chain families.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ChainKind {
    /// `x → x` with probability `stay`, `x → x+1 mod n` otherwise.
    Ring { stay: f64 },
    /// Every row an independent symmetric Dirichlet(`concentration`) draw;
    /// all entries strictly positive.
    RandomErgodic { concentration: f64 },
    /// A line of states under a "move right, bounce at the right end" policy.
    /// The intended move happens with probability `1 − noise`; otherwise the
    /// agent moves the opposite way, staying put when that hits the wall.
    ChainWalk { noise: f64 },
}

pub fn make_transition(kind: ChainKind, n_states: usize, seed: u64) -> Result<DMatrix<f64>> {
    if n_states == 0 {
        return Err(Error::invalid("n_states must be at least 1"));
    }
    let n = n_states;
    if n == 1 {
        return Ok(DMatrix::from_element(1, 1, 1.0));
    }
    let mut p = DMatrix::zeros(n, n);
    match kind {
        ChainKind::Ring { stay } => {
            check_probability("stay", stay)?;
            for i in 0..n {
                p[(i, i)] += stay;
                p[(i, (i + 1) % n)] += 1.0 - stay;
            }
        }
        ChainKind::RandomErgodic { concentration } => {
            if !(concentration.is_finite() && concentration > 0.0) {
                return Err(Error::invalid("concentration must be positive"));
            }
            let gamma = Gamma::new(concentration, 1.0)
                .map_err(|e| Error::invalid(format!("concentration: {e}")))?;
            let mut rng = rng::stream(seed, Domain::Chain);
            for i in 0..n {
                let row: Vec<f64> = (0..n)
                    .map(|_| gamma.sample(&mut rng).max(f64::MIN_POSITIVE))
                    .collect();
                let s: f64 = row.iter().sum();
                for (j, v) in row.into_iter().enumerate() {
                    p[(i, j)] = v / s;
                }
            }
        }
        ChainKind::ChainWalk { noise } => {
            check_probability("noise", noise)?;
            for i in 0..n {
                let (intended, other) = if i + 1 < n {
                    (i + 1, if i > 0 { i - 1 } else { i })
                } else {
                    (i - 1, i)
                };
                p[(i, intended)] += 1.0 - noise;
                p[(i, other)] += noise;
            }
        }
    }
    Ok(p)
}

fn check_probability(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must lie in [0, 1], got {v}")))
    }
}

/// Builds a benchmark chain; rejects parameters whose support graph is not
/// strongly connected.
pub fn make_chain(
    kind: ChainKind,
    n_states: usize,
    rewards: DVector<f64>,
    gamma: f64,
    r_max: f64,
    seed: u64,
) -> Result<MarkovRewardProcess> {
    let p = make_transition(kind, n_states, seed)?;
    MarkovRewardProcess::new(p, rewards, gamma, r_max)
}

/// Reward generators for benchmark chains.
#[derive(Clone, Debug, PartialEq)]
pub enum RewardKind {
    /// `r = e_0`.
    FirstState,
    /// i.i.d. uniform on `[−r_max, r_max]`.
    Uniform { r_max: f64 },
    /// `r(x) = cos(2πx/|X|)`.
    Cosine,
    Explicit(Vec<f64>),
}

pub fn make_rewards(kind: &RewardKind, n_states: usize, seed: u64) -> Result<DVector<f64>> {
    Ok(match kind {
        RewardKind::FirstState => DVector::from_fn(n_states, |x, _| if x == 0 { 1.0 } else { 0.0 }),
        RewardKind::Uniform { r_max } => {
            if !(r_max.is_finite() && *r_max > 0.0) {
                return Err(Error::invalid("r_max must be positive"));
            }
            let mut rng = rng::stream(seed, Domain::Rewards);
            DVector::from_fn(n_states, |_, _| (2.0 * rng.random::<f64>() - 1.0) * r_max)
        }
        RewardKind::Cosine => DVector::from_fn(n_states, |x, _| {
            (2.0 * std::f64::consts::PI * x as f64 / n_states as f64).cos()
        }),
        RewardKind::Explicit(v) => {
            check_len("explicit rewards", n_states, v.len())?;
            DVector::from_column_slice(v)
        }
    })
}
