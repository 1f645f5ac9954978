//! Linear feature spaces over a finite state set.

use nalgebra::{Cholesky, DMatrix, DVector, DVectorView, Dyn};
use rand::Rng;

use crate::chain::StationaryDistribution;
use crate::error::{check_len, Error, Result};
use crate::linalg;
use crate::rng::{self, Domain};

/// Singular values at or below `RANK_TOLERANCE · σ_max` count as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

const GENERATOR_ATTEMPTS: usize = 16;

/// Feature matrix `Φ` (|X| × D) with a per-coordinate bound `L`.
///
/// Stored state-major: column `x` of [`FeatureMap::by_state`] is `φ(x)`, so the
/// estimators can read a state's feature vector contiguously.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMap {
    by_state: DMatrix<f64>,
    bound: f64,
}

impl FeatureMap {
    /// Validates `|Φ[x][j]| ≤ bound` and full column rank.
    pub fn new(phi: DMatrix<f64>, bound: f64) -> Result<Self> {
        let map = Self::unverified(phi, bound)?;
        let report = check_full_rank(&map);
        if !report.full_rank {
            return Err(Error::RankDeficient {
                rank: report.rank,
                expected: report.columns,
            });
        }
        Ok(map)
    }

    /// Checks the entry bound only. Used for projected features `Ψ = ΦHᵀ`,
    /// whose rank is a probabilistic property checked separately.
    pub fn unverified(phi: DMatrix<f64>, bound: f64) -> Result<Self> {
        if phi.nrows() == 0 || phi.ncols() == 0 {
            return Err(Error::invalid("feature matrix must be non-empty"));
        }
        if !(bound.is_finite() && bound > 0.0) {
            return Err(Error::invalid(format!("feature bound must be positive, got {bound}")));
        }
        linalg::ensure_finite_matrix("feature matrix", &phi)?;
        let worst = phi.amax();
        if worst > bound {
            return Err(Error::invalid(format!(
                "feature entry of magnitude {worst} exceeds the declared bound {bound}"
            )));
        }
        Ok(Self {
            by_state: phi.transpose(),
            bound,
        })
    }

    pub(crate) fn from_state_major(by_state: DMatrix<f64>) -> Self {
        let bound = by_state.amax().max(f64::MIN_POSITIVE);
        Self { by_state, bound }
    }

    pub fn n_states(&self) -> usize {
        self.by_state.ncols()
    }

    pub fn dim(&self) -> usize {
        self.by_state.nrows()
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// `φ(x)`.
    pub fn feature(&self, x: usize) -> DVectorView<'_, f64> {
        self.by_state.column(x)
    }

    /// The D × |X| matrix whose columns are the feature vectors.
    pub fn by_state(&self) -> &DMatrix<f64> {
        &self.by_state
    }

    /// `Φ` as an |X| × D matrix.
    pub fn matrix(&self) -> DMatrix<f64> {
        self.by_state.transpose()
    }

    /// `Φα`.
    pub fn combine(&self, alpha: &DVector<f64>) -> Result<DVector<f64>> {
        check_len("coefficient vector", self.dim(), alpha.len())?;
        Ok(self.by_state.tr_mul(alpha))
    }

    /// `max_x ‖φ(x)‖₂`.
    pub fn max_row_norm(&self) -> f64 {
        self.by_state
            .column_iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GramMatrix {
    pub matrix: DMatrix<f64>,
    /// Smallest eigenvalue.
    pub nu_min: f64,
    /// Largest eigenvalue.
    pub nu_max: f64,
}

impl GramMatrix {
    /// Spectral condition number `ν_max / ν_min` (infinite when `ν_min ≤ 0`).
    pub fn condition(&self) -> f64 {
        if self.nu_min > 0.0 {
            self.nu_max / self.nu_min
        } else {
            f64::INFINITY
        }
    }
}

/// `Σ_x μ(x) φ(x) φ(x)ᵀ = Φᵀ D_μ Φ`.
pub fn gram(features: &FeatureMap, mu: &StationaryDistribution) -> Result<GramMatrix> {
    check_len("stationary distribution", features.n_states(), mu.len())?;
    let b = features.by_state();
    let mut scaled = b.clone();
    for (mut col, &w) in scaled.column_iter_mut().zip(mu.weights().iter()) {
        col *= w;
    }
    let m = &scaled * b.transpose();
    let matrix = (&m + m.transpose()) * 0.5;
    let eig = matrix.clone().symmetric_eigenvalues();
    Ok(GramMatrix {
        matrix,
        nu_min: eig.min(),
        nu_max: eig.max(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RankReport {
    pub full_rank: bool,
    pub rank: usize,
    pub columns: usize,
    pub sigma_max: f64,
    pub sigma_min: f64,
}

/// Numerical column rank of `Φ` at [`RANK_TOLERANCE`].
pub fn check_full_rank(features: &FeatureMap) -> RankReport {
    let (rank, sigma_max, sigma_min) =
        linalg::numerical_rank(features.by_state(), RANK_TOLERANCE);
    let columns = features.dim();
    RankReport {
        full_rank: rank == columns,
        rank,
        columns,
        sigma_max,
        sigma_min,
    }
}

/// `m(f_α) = ‖α‖₂ · max_x ‖φ(x)‖₂`.
pub fn m_functional(alpha: &DVector<f64>, features: &FeatureMap) -> Result<f64> {
    check_len("coefficient vector", features.dim(), alpha.len())?;
    Ok(alpha.norm() * features.max_row_norm())
}

/// A μ-orthogonal projection onto a feature span,
/// `Π = Φ(ΦᵀD_μΦ)⁻¹ΦᵀD_μ`, with the Gram matrix factored at construction.
#[derive(Clone, Debug)]
pub struct ProjectionOperator {
    basis: FeatureMap,
    mu: StationaryDistribution,
    gram: GramMatrix,
    factor: Cholesky<f64, Dyn>,
}

/// Result of a projection: `Πf` and the coefficients `α` with `Πf = Φα`.
#[derive(Clone, Debug, PartialEq)]
pub struct Projected {
    pub values: DVector<f64>,
    pub coefficients: DVector<f64>,
}

impl ProjectionOperator {
    pub fn new(basis: FeatureMap, mu: StationaryDistribution) -> Result<Self> {
        let gram = gram(&basis, &mu)?;
        let condition = gram.condition();
        if condition > 1e14 {
            return Err(Error::SingularGram { condition });
        }
        let factor = Cholesky::new(gram.matrix.clone()).ok_or(Error::SingularGram { condition })?;
        Ok(Self {
            basis,
            mu,
            gram,
            factor,
        })
    }

    pub fn basis(&self) -> &FeatureMap {
        &self.basis
    }

    pub fn mu(&self) -> &StationaryDistribution {
        &self.mu
    }

    pub fn gram(&self) -> &GramMatrix {
        &self.gram
    }

    pub fn project(&self, f: &DVector<f64>) -> Result<Projected> {
        check_len("value vector", self.basis.n_states(), f.len())?;
        let weighted = f.component_mul(self.mu.weights());
        let rhs = self.basis.by_state() * weighted;
        let coefficients = self.factor.solve(&rhs);
        let values = self.basis.by_state().tr_mul(&coefficients);
        Ok(Projected {
            values,
            coefficients,
        })
    }

    /// `Πf` without the coefficients.
    pub fn apply(&self, f: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.project(f)?.values)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeatureKind {
    /// `φ_j(x) = L·[x mod D = j]`: state aggregation, the identity when `D = |X|`.
    OneHot,
    /// i.i.d. uniform entries on `[−L, L]`.
    RandomBounded,
    /// `L`, `L cos(2πkx/|X|)`, `L sin(2πkx/|X|)` for `k = 1, 2, ...`.
    FourierOnIndex,
}

/// Builds a validated feature map. Random generators resample up to 16 times on
/// a rank failure.
pub fn make_features(
    kind: FeatureKind,
    n_states: usize,
    dim: usize,
    bound: f64,
    seed: u64,
) -> Result<FeatureMap> {
    if n_states == 0 || dim == 0 {
        return Err(Error::invalid("n_states and D must be positive"));
    }
    if dim > n_states {
        return Err(Error::invalid(format!(
            "D = {dim} columns cannot be linearly independent on {n_states} states"
        )));
    }
    match kind {
        FeatureKind::OneHot => {
            let phi = DMatrix::from_fn(n_states, dim, |x, j| if x % dim == j { bound } else { 0.0 });
            FeatureMap::new(phi, bound)
        }
        FeatureKind::FourierOnIndex => {
            let w = 2.0 * std::f64::consts::PI / n_states as f64;
            let phi = DMatrix::from_fn(n_states, dim, |x, j| {
                if j == 0 {
                    return bound;
                }
                let k = ((j + 1) / 2) as f64;
                let angle = w * k * x as f64;
                let v = if j % 2 == 1 { angle.cos() } else { angle.sin() };
                (bound * v).clamp(-bound, bound)
            });
            FeatureMap::new(phi, bound)
        }
        FeatureKind::RandomBounded => {
            let mut rng = rng::stream(seed, Domain::Features);
            let mut last = None;
            for _ in 0..GENERATOR_ATTEMPTS {
                let phi = DMatrix::from_fn(n_states, dim, |_, _| {
                    (2.0 * rng.random::<f64>() - 1.0) * bound
                });
                match FeatureMap::new(phi, bound) {
                    Ok(map) => return Ok(map),
                    Err(e) => last = Some(e),
                }
            }
            Err(Error::RetryBudgetExhausted {
                attempts: GENERATOR_ATTEMPTS,
                reason: last.map(|e| e.to_string()).unwrap_or_default(),
            })
        }
    }
}
