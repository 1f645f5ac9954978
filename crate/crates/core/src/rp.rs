//! Gaussian random projections and Johnson-Lindenstrauss checks.

use nalgebra::{DMatrix, DVector, DVectorView};

use crate::error::{check_len, Error, Result};
use crate::features::FeatureMap;
use crate::rng::{self, Domain};

/// A d × D matrix with i.i.d. `N(0, 1/d)` entries.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionMatrix {
    h: DMatrix<f64>,
    seed: Option<u64>,
}

impl ProjectionMatrix {
    /// Wraps an arbitrary matrix (identity, hand-built test matrices).
    pub fn from_matrix(h: DMatrix<f64>) -> Result<Self> {
        if h.nrows() == 0 || h.ncols() == 0 {
            return Err(Error::invalid("projection matrix must be non-empty"));
        }
        Ok(Self { h, seed: None })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            h: DMatrix::identity(dim, dim),
            seed: None,
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.h
    }

    /// Projected dimension d.
    pub fn rows(&self) -> usize {
        self.h.nrows()
    }

    /// Ambient dimension D.
    pub fn cols(&self) -> usize {
        self.h.ncols()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// `Hu`.
    pub fn project_vector(&self, u: DVectorView<'_, f64>) -> DVector<f64> {
        &self.h * u
    }

    /// Writes `Hu` into `out` without allocating.
    pub fn project_into(&self, u: DVectorView<'_, f64>, out: &mut DVector<f64>) {
        out.gemv(1.0, &self.h, &u, 0.0);
    }
}

/// Draws H from the projection sub-stream of `seed`, filling row by row.
pub fn sample_projection(d: usize, big_d: usize, seed: u64) -> Result<ProjectionMatrix> {
    if d == 0 || big_d == 0 {
        return Err(Error::invalid("projection dimensions must be positive"));
    }
    let mut rng = rng::stream(seed, Domain::Projection);
    let scale = 1.0 / (d as f64).sqrt();
    let mut h = DMatrix::zeros(d, big_d);
    for i in 0..d {
        for j in 0..big_d {
            h[(i, j)] = rng::standard_normal(&mut rng) * scale;
        }
    }
    Ok(ProjectionMatrix {
        h,
        seed: Some(seed),
    })
}

/// `ψ(x) = Hφ(x)` for every state, i.e. `Ψ = ΦHᵀ`. The output's bound is the
/// empirical largest `|ψ_j(x)|`.
pub fn apply(h: &ProjectionMatrix, features: &FeatureMap) -> Result<FeatureMap> {
    check_len("feature dimension", h.cols(), features.dim())?;
    Ok(FeatureMap::from_state_major(h.matrix() * features.by_state()))
}

/// `2 exp(−d(ε²/4 − ε³/6))`.
pub fn jl_failure_bound(d: usize, eps: f64) -> f64 {
    2.0 * (-(d as f64) * (eps * eps / 4.0 - eps.powi(3) / 6.0)).exp()
}

/// Smallest dimension for which inner products of `n` vectors against a fixed
/// `w` are preserved to `ε` with probability `1 − δ`: `log(4n/δ) / (ε²/4 − ε³/6)`.
pub fn inner_product_min_dim(n: usize, delta: f64, eps: f64) -> f64 {
    (4.0 * n as f64 / delta).ln() / (eps * eps / 4.0 - eps.powi(3) / 6.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistortionRate {
    pub failures: usize,
    pub tested: usize,
    pub skipped_zero: usize,
}

impl DistortionRate {
    pub fn rate(&self) -> f64 {
        if self.tested == 0 {
            0.0
        } else {
            self.failures as f64 / self.tested as f64
        }
    }
}

/// Fraction of nonzero `u` with `|‖Hu‖² − ‖u‖²| ≥ ε‖u‖²`. Zero vectors are
/// skipped and counted.
pub fn jl_distortion_rate(
    h: &ProjectionMatrix,
    vectors: &[DVector<f64>],
    eps: f64,
) -> Result<DistortionRate> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid(format!("eps must lie in (0, 1), got {eps}")));
    }
    let mut out = DistortionRate {
        failures: 0,
        tested: 0,
        skipped_zero: 0,
    };
    let mut hu = DVector::zeros(h.rows());
    for u in vectors {
        check_len("vector", h.cols(), u.len())?;
        let sq = u.norm_squared();
        if sq == 0.0 {
            out.skipped_zero += 1;
            continue;
        }
        h.project_into(u.as_view(), &mut hu);
        out.tested += 1;
        if (hu.norm_squared() - sq).abs() >= eps * sq {
            out.failures += 1;
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InnerProductDistortion {
    pub max_distortion: f64,
    pub skipped_zero: usize,
}

/// `max_k |Hu_k·Hw − u_k·w| / (‖u_k‖‖w‖)` over nonzero `u_k`.
pub fn inner_product_distortion(
    h: &ProjectionMatrix,
    us: &[DVector<f64>],
    w: &DVector<f64>,
) -> Result<InnerProductDistortion> {
    check_len("vector", h.cols(), w.len())?;
    let wn = w.norm();
    if wn == 0.0 {
        return Err(Error::invalid("w must be nonzero"));
    }
    let hw = h.project_vector(w.as_view());
    let mut hu = DVector::zeros(h.rows());
    let mut worst = 0.0_f64;
    let mut skipped = 0;
    for u in us {
        check_len("vector", h.cols(), u.len())?;
        let un = u.norm();
        if un == 0.0 {
            skipped += 1;
            continue;
        }
        h.project_into(u.as_view(), &mut hu);
        worst = worst.max((hu.dot(&hw) - u.dot(w)).abs() / (un * wn));
    }
    Ok(InnerProductDistortion {
        max_distortion: worst,
        skipped_zero: skipped,
    })
}
