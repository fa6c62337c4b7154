//! Random-effect posterior of the arm means and method-of-moments estimates
//! of the two variance components.
//!
//! Under the working model `r ~ N(mu_k, sigma^2)`, `mu_k ~ N(mu0, sigma0^2)`
//! each arm's posterior mean shrinks its sample mean towards a precision
//! weighted pooled mean:
//!
//! ```text
//! w_k      = sigma0^2 / (sigma0^2 + sigma^2 / T_k)
//! r0       = sum_k (1 - w_k) S_k / sum_k (1 - w_k) T_k        (S_k = reward sum)
//! mean_k   = (1 - w_k) r0 + w_k S_k / T_k
//! var_k    = w_k sigma^2 / T_k + (1 - w_k)^2 sigma^2 / sum_j T_j (1 - w_j)
//! ```

use crate::bandit::{NoiseSpec, PriorSpec, SufficientStats};
use crate::error::{BaiError, Result};
use crate::scalar::{count, lit, to_f64, Scalar};

/// Lower clamp applied to both variance estimates.
pub const DEFAULT_VARIANCE_FLOOR: f64 = 1e-8;

/// Per-arm posterior summary.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PosteriorState<T> {
    pub means: Vec<T>,
    pub variances: Vec<T>,
    pub weights: Vec<T>,
    pub pooled_mean: T,
}

/// Plug-in variance components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceEstimate<T> {
    pub sigma_sq_hat: T,
    pub sigma0_sq_hat: T,
    pub floor: T,
}

/// Posterior for known variance components.
pub fn posterior<T: Scalar>(
    stats: &SufficientStats<T>,
    prior: &PriorSpec<T>,
    noise: &NoiseSpec<T>,
) -> Result<PosteriorState<T>> {
    let mut out = PosteriorState::default();
    posterior_into(stats, prior.sigma0_sq, noise.sigma_sq(), &mut out)?;
    Ok(out)
}

/// Same as [`posterior`] on raw variances, reusing the buffers of `out`.
pub fn posterior_into<T: Scalar>(
    stats: &SufficientStats<T>,
    sigma0_sq: T,
    sigma_sq: T,
    out: &mut PosteriorState<T>,
) -> Result<()> {
    let k = stats.num_arms();
    if let Some(arm) = stats.pulls().iter().position(|&t| t == 0) {
        return Err(BaiError::InsufficientData(format!("arm {arm} has no pulls")));
    }
    if !(sigma0_sq > T::zero() && sigma_sq > T::zero()) {
        return Err(BaiError::Domain("variance components must be positive".into()));
    }
    out.weights.clear();
    out.means.clear();
    out.variances.clear();

    // 1 - w_k is formed directly to avoid cancellation when w_k is near 1.
    let mut pooled_den = T::zero();
    let mut pooled_num = T::zero();
    for arm in 0..k {
        let t: T = count(stats.pulls()[arm]);
        let denom = t * sigma0_sq + sigma_sq;
        let w = t * sigma0_sq / denom;
        let one_minus_w = sigma_sq / denom;
        out.weights.push(w);
        pooled_den = pooled_den + one_minus_w * t;
        pooled_num = pooled_num + one_minus_w * stats.reward_sums()[arm];
    }
    let pooled = pooled_num / pooled_den;
    out.pooled_mean = pooled;

    for arm in 0..k {
        let t: T = count(stats.pulls()[arm]);
        let w = out.weights[arm];
        let one_minus_w = sigma_sq / (t * sigma0_sq + sigma_sq);
        let sample_mean = stats.reward_sums()[arm] / t;
        out.means.push(one_minus_w * pooled + w * sample_mean);
        out.variances
            .push(w * sigma_sq / t + one_minus_w * one_minus_w * sigma_sq / pooled_den);
    }
    Ok(())
}

/// Method-of-moments estimates with the default floor.
pub fn estimate_variances<T: Scalar>(stats: &SufficientStats<T>) -> Result<VarianceEstimate<T>> {
    estimate_variances_with_floor(stats, lit(DEFAULT_VARIANCE_FLOOR))
}

/// Pooled within-arm variance and the unbiased between-arm quadratic form
///
/// ```text
/// sigma^2   = sum_k SS_k / sum_k (T_k - 1)
/// sigma0^2  = (sum_k T_k u_k^2 - (K - 1) sigma^2) / n_*
/// n_*       = N - sum_k T_k^2 / N
/// ```
///
/// where `u_k` is arm k's deviation from the grand mean. Both values are
/// clamped below at `floor`.
pub fn estimate_variances_with_floor<T: Scalar>(
    stats: &SufficientStats<T>,
    floor: T,
) -> Result<VarianceEstimate<T>> {
    let k = stats.num_arms();
    if let Some(arm) = stats.pulls().iter().position(|&t| t < 2) {
        return Err(BaiError::InsufficientData(format!(
            "arm {arm} has fewer than 2 pulls"
        )));
    }
    let total: T = count(stats.round());
    let grand = stats.reward_sums().iter().fold(T::zero(), |a, &s| a + s) / total;

    let mut within = T::zero();
    let mut between = T::zero();
    let mut sum_t_sq = T::zero();
    for arm in 0..k {
        let t: T = count(stats.pulls()[arm]);
        let mean = stats.reward_sums()[arm] / t;
        let ss = stats.reward_sq_sums()[arm] - t * mean * mean;
        within = within + ss.max(T::zero());
        let u = mean - grand;
        between = between + t * u * u;
        sum_t_sq = sum_t_sq + t * t;
    }
    let dof: T = count(stats.round() - k);
    let sigma_sq = within / dof;
    let n_star = total - sum_t_sq / total;
    let sigma0_sq = (between - count::<T>(k - 1) * sigma_sq) / n_star;

    Ok(VarianceEstimate {
        sigma_sq_hat: sigma_sq.max(floor),
        sigma0_sq_hat: if sigma0_sq.is_nan() { floor } else { sigma0_sq.max(floor) },
        floor,
    })
}

/// Upper bound on the probability that a suboptimal arm's posterior mean
/// overtakes the best arm's: `exp(-gap^2/(8 tau_k^2)) + exp(-gap^2/(8 tau_*^2))`.
pub fn misorder_bound<T: Scalar>(gap: T, tau_k_sq: T, tau_star_sq: T) -> Result<T> {
    if gap < T::zero() || !(tau_k_sq > T::zero()) || !(tau_star_sq > T::zero()) {
        return Err(BaiError::Domain(format!(
            "misorder bound needs gap >= 0 and positive variances, got ({}, {}, {})",
            to_f64(gap),
            to_f64(tau_k_sq),
            to_f64(tau_star_sq)
        )));
    }
    let eight: T = lit(8.0);
    let g2 = gap * gap;
    Ok((-g2 / (eight * tau_k_sq)).exp() + (-g2 / (eight * tau_star_sq)).exp())
}
