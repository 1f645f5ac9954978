//! Policy evaluation with LSTD(λ) over randomly projected features.
//!
//! The crate is organised bottom-up:
//!
//! - [`chain`]: finite Markov reward processes, exact value functions, Bellman
//!   operators, μ-weighted geometry and trajectory sampling.
//! - [`features`]: feature maps, Gram matrices and μ-orthogonal projections.
//! - [`rp`]: Gaussian random projection matrices and Johnson-Lindenstrauss
//!   verifiers.
//! - [`lstd`]: the incremental LSTD(λ)-RP estimator, the batch LSTD(λ) form and
//!   the exact model-based fixed point.
//! - [`bounds`]: closed-form finite-sample bound calculators.
//!
//! All randomness flows through [`rng`], which derives independent ChaCha
//! sub-streams from a 64-bit seed so every experiment is reproducible.

pub mod bounds;
pub mod chain;
mod error;
pub mod features;
pub mod linalg;
pub mod lstd;
pub mod rng;
pub mod rp;

pub use bounds::{BoundInputs, BoundReport, MixingParams};
pub use chain::{ChainKind, MarkovRewardProcess, StartState, StationaryDistribution, Trajectory};
pub use error::{Error, Result};
pub use features::{FeatureKind, FeatureMap, GramMatrix, ProjectionOperator};
pub use lstd::{EstimatorSolution, ModelFixedPoint, SolveKind, TraceState};
pub use rp::ProjectionMatrix;
