//! Fixed-budget best-arm identification with random-effect UCB exploration.
//!
//! The crate provides
//! - the random-effect posterior and variance-component estimators
//!   ([`estimator`]),
//! - random-effect UCB exploration and the UCB-E, Successive Rejects,
//!   Sequential Halving and uniform baselines ([`policies`]),
//! - closed-form complexity measures and error bounds ([`theory`]),
//! - a seeded, order-independent Monte Carlo harness ([`experiments`]) and
//!   the command-line front end built on it ([`cli`]).
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix it to `f64`, which is what the harness uses.

pub mod bandit;
pub mod cli;
pub mod error;
pub mod estimator;
pub mod experiments;
pub mod policies;
pub mod scalar;
pub mod theory;

pub use error::{BaiError, Result};
pub use scalar::Scalar;

pub type Instance = bandit::BanditInstance<f64>;
pub type Prior = bandit::PriorSpec<f64>;
pub type Noise = bandit::NoiseSpec<f64>;
pub type Stats = bandit::SufficientStats<f64>;
pub type Gaps = bandit::GapProfile<f64>;
pub type Posterior = estimator::PosteriorState<f64>;
pub type Variances = estimator::VarianceEstimate<f64>;
pub type Policy = policies::PolicyConfig<f64>;
pub type Kind = policies::PolicyKind<f64>;
pub type Rec = policies::Recommendation<f64>;
pub type Report = theory::ComplexityReport<f64>;

/// Library version recorded in run metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
