//! Random-effect UCB exploration.
//!
//! After two pulls of every arm, round `t` pulls the arm maximizing
//! `mu_hat_{k,t-1} + sqrt(2 tau_{k,t-1}^2 ln n)`, where the posterior is the
//! random-effect one of [`crate::estimator`]. The recommendation is the arm
//! with the largest final posterior mean.

use crate::bandit::{RewardOracle, SufficientStats};
use crate::error::Result;
use crate::estimator::{estimate_variances_with_floor, posterior_into, PosteriorState};
use crate::scalar::{argmax_lowest, count, lit, Scalar};

use super::{PolicyConfig, PolicyKind, Recommendation, Session, VarianceMode};

/// Snapshot handed to an observer after each posterior update.
///
/// `stats` covers rounds `1..=round`. For `round < n`, `ucb` and `chosen`
/// describe the decision for round `round + 1`; at `round == n` both are
/// `None` and `posterior` is the one the recommendation is based on.
#[derive(Debug)]
pub struct RueStep<'a, T> {
    pub round: usize,
    pub stats: &'a SufficientStats<T>,
    pub posterior: &'a PosteriorState<T>,
    pub sigma0_sq: T,
    pub sigma_sq: T,
    pub ucb: Option<&'a [T]>,
    pub chosen: Option<usize>,
}

pub fn run_rue<T: Scalar, O: RewardOracle<T> + ?Sized>(
    oracle: &mut O,
    config: &PolicyConfig<T>,
    record_trace: bool,
) -> Result<Recommendation<T>> {
    run_rue_observed(oracle, config, record_trace, |_| {})
}

/// [`run_rue`] with a hook that sees every posterior the policy computes.
pub fn run_rue_observed<T, O, F>(
    oracle: &mut O,
    config: &PolicyConfig<T>,
    record_trace: bool,
    mut observer: F,
) -> Result<Recommendation<T>>
where
    T: Scalar,
    O: RewardOracle<T> + ?Sized,
    F: FnMut(&RueStep<'_, T>),
{
    let mode = match config.kind {
        PolicyKind::Rue { variance_mode } => variance_mode,
        _ => {
            return Err(crate::error::BaiError::Config(format!(
                "run_rue called with a {} config",
                config.kind.label()
            )))
        }
    };
    let mut session = Session::new(oracle, config, record_trace)?;
    let k = config.num_arms;
    let n = config.budget;

    for _ in 0..2 {
        for arm in 0..k {
            session.pull(arm);
        }
    }

    let width_scale = lit::<T>(2.0) * count::<T>(n).ln();
    let mut post = PosteriorState::default();
    let mut ucb = vec![T::zero(); k];
    loop {
        let (sigma0_sq, sigma_sq) = match mode {
            VarianceMode::Known { prior, noise } => (prior.sigma0_sq, noise.sigma_sq()),
            VarianceMode::Estimated { floor } => {
                let v = estimate_variances_with_floor(&session.stats, floor)?;
                (v.sigma0_sq_hat, v.sigma_sq_hat)
            }
        };
        posterior_into(&session.stats, sigma0_sq, sigma_sq, &mut post)?;

        if session.remaining() == 0 {
            observer(&RueStep {
                round: session.stats.round(),
                stats: &session.stats,
                posterior: &post,
                sigma0_sq,
                sigma_sq,
                ucb: None,
                chosen: None,
            });
            break;
        }

        for (u, (&m, &v)) in ucb.iter_mut().zip(post.means.iter().zip(&post.variances)) {
            *u = m + (width_scale * v).sqrt();
        }
        let arm = argmax_lowest(ucb.iter().copied()).unwrap_or(0);
        observer(&RueStep {
            round: session.stats.round(),
            stats: &session.stats,
            posterior: &post,
            sigma0_sq,
            sigma_sq,
            ucb: Some(&ucb),
            chosen: Some(arm),
        });
        session.pull(arm);
    }

    let chosen = argmax_lowest(post.means.iter().copied()).unwrap_or(0);
    Ok(session.finish(chosen))
}

/// Pull-count cap for a suboptimal arm while every confidence interval
/// `|mu_k - mu_hat_k| <= eta sqrt(2 tau_k^2 ln n)` has held:
/// `2 + 2 (1 + eta)^2 beta sigma^2 ln n / gap^2`.
pub fn pull_count_bound<T: Scalar>(gap: T, eta: T, beta: T, sigma_sq: T, n: usize) -> T {
    let two: T = lit(2.0);
    let one_eta = T::one() + eta;
    two + two * one_eta * one_eta * beta * sigma_sq * count::<T>(n).ln() / (gap * gap)
}
