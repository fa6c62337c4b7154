//! Closed-form quantities: gap complexity, the prior gap bound, the failure
//! probability and simple regret bounds of random-effect UCB exploration, and
//! the small-gap arithmetic for UCB-E and the full-information benchmark.
//!
//! Logarithms are natural throughout.

use statrs::function::erf::erfc;

use crate::bandit::{GapProfile, NoiseSpec, PriorSpec};
use crate::error::{BaiError, Result};
use crate::scalar::{count, lit, to_f64, Scalar};

/// Constant of the top-gap bound, with a flag when `K` is too small for the
/// inner logarithm to be positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CkValue<T> {
    pub value: T,
    pub small_k: bool,
}

/// Constants that depend only on `(K, sigma0^2, sigma^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BayesConstants<T> {
    pub h_b: T,
    pub rho: T,
    pub eta: T,
    pub beta: T,
    pub beta1: T,
    pub m: T,
    pub gamma: T,
    pub kappa: T,
    pub c_k: CkValue<T>,
}

/// Everything analytic about one problem: the instance complexity `H` (when
/// the gaps are known and positive) and the Bayesian constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexityReport<T> {
    pub h: Option<T>,
    pub constants: BayesConstants<T>,
}

/// Lower bound value; `vacuous` is set when the bound carries no information
/// for these arguments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlaggedBound<T> {
    pub value: T,
    pub vacuous: bool,
}

/// `H = sum_k Delta_k^-2` with the best arm contributing `Delta_min^-2`.
pub fn complexity_h<T: Scalar>(profile: &GapProfile<T>) -> Result<T> {
    if profile.gaps.iter().any(|&g| !(g > T::zero())) {
        return Err(BaiError::InfiniteComplexity);
    }
    Ok(profile
        .gaps
        .iter()
        .fold(T::zero(), |acc, &g| acc + (g * g).recip()))
}

/// `c_K = 4 sqrt(2) ln K sqrt(ln(K / (4 sqrt(2 pi) ln K))) + 2 / sqrt(2 pi)`.
///
/// For small `K` the inner logarithm is not positive; the additive constant
/// alone is returned and `small_k` is set.
pub fn c_k<T: Scalar>(k: usize) -> Result<CkValue<T>> {
    if k < 2 {
        return Err(BaiError::Domain(format!("c_K needs K >= 2, got {k}")));
    }
    let two_pi: T = lit(2.0 * std::f64::consts::PI);
    let tail = lit::<T>(2.0) / two_pi.sqrt();
    let ln_k = count::<T>(k).ln();
    let inner = count::<T>(k) / (lit::<T>(4.0) * two_pi.sqrt() * ln_k);
    if inner <= T::one() {
        return Ok(CkValue {
            value: tail,
            small_k: true,
        });
    }
    let value = lit::<T>(4.0) * lit::<T>(2.0).sqrt() * ln_k * inner.ln().sqrt() + tail;
    Ok(CkValue {
        value,
        small_k: false,
    })
}

/// Bound on the probability that the top two of `K` i.i.d. `N(mu0, sigma0^2)`
/// means are within `delta`: `min(1, c_K delta / sigma0)`.
pub fn gap_probability_bound<T: Scalar>(delta: T, sigma0: T, k: usize) -> Result<T> {
    if delta < T::zero() || !(sigma0 > T::zero()) {
        return Err(BaiError::Domain("need delta >= 0 and sigma0 > 0".into()));
    }
    let ck = c_k::<T>(k)?;
    Ok((ck.value * delta / sigma0).min(T::one()))
}

/// The constants `H_b, rho, eta, beta, beta_1, m, gamma, kappa, c_K`.
pub fn bayes_constants<T: Scalar>(k: usize, sigma0_sq: T, sigma_sq: T) -> Result<BayesConstants<T>> {
    if !(sigma0_sq > T::zero() && sigma_sq > T::zero()) {
        return Err(BaiError::Domain("variances must be positive".into()));
    }
    let c_k = c_k::<T>(k)?;
    let kk: T = count(k);
    let one = T::one();
    let two: T = lit(2.0);
    let four: T = lit(4.0);
    let ratio = sigma_sq / sigma0_sq;

    let h_b = (kk + ratio) * sigma_sq;
    let base = kk * (sigma0_sq + sigma_sq);
    let rho = ((base + ratio) / (base + sigma0_sq)).sqrt();
    let eta = (one + four * rho).recip();
    let beta = one + ratio / kk;
    let beta1 = one + sigma0_sq / (kk * (sigma0_sq + sigma_sq));
    let m = beta1 * eta * eta * sigma0_sq / sigma_sq;
    let gamma = two * eta * (two + four * rho) * c_k.value;
    let kappa = two * gamma * kk.ln().sqrt();
    Ok(BayesConstants {
        h_b,
        rho,
        eta,
        beta,
        beta1,
        m,
        gamma,
        kappa,
        c_k,
    })
}

pub fn complexity_report<T: Scalar>(
    profile: Option<&GapProfile<T>>,
    k: usize,
    prior: &PriorSpec<T>,
    noise: &NoiseSpec<T>,
) -> Result<ComplexityReport<T>> {
    Ok(ComplexityReport {
        h: profile.and_then(|p| complexity_h(p).ok()),
        constants: bayes_constants(k, prior.sigma0_sq, noise.sigma_sq())?,
    })
}

/// The likelihood inflation that turns the last bound term into `O(K/n)`:
/// `sigma^2 m / (2 (2 sigma0^2 + sigma^2))`.
pub fn tuned_delta<T: Scalar>(k: usize, sigma0_sq: T, sigma_sq: T) -> Result<T> {
    let c = bayes_constants(k, sigma0_sq, sigma_sq)?;
    Ok(sigma_sq * c.m / (lit::<T>(2.0) * (lit::<T>(2.0) * sigma0_sq + sigma_sq)))
}

/// Noise spec whose working variance is `sigma_sq` and whose `delta` is
/// [`tuned_delta`].
pub fn tuned_noise<T: Scalar>(k: usize, sigma0_sq: T, sigma_sq: T) -> Result<NoiseSpec<T>> {
    let delta = tuned_delta(k, sigma0_sq, sigma_sq)?;
    NoiseSpec::new(sigma_sq * delta, delta)
}

struct BoundTerms<T> {
    lead: T,
    tail: T,
    c: BayesConstants<T>,
}

fn bound_terms<T: Scalar>(
    n: usize,
    k: usize,
    prior: &PriorSpec<T>,
    noise: &NoiseSpec<T>,
    lead_scale: T,
) -> Result<BoundTerms<T>> {
    if k < 2 {
        return Err(BaiError::Domain(format!("need K >= 2, got {k}")));
    }
    if n < 4 * (k - 1) {
        return Err(BaiError::Budget(format!(
            "bound requires n >= 4(K-1) = {}, got {n}",
            4 * (k - 1)
        )));
    }
    let c = bayes_constants(k, prior.sigma0_sq, noise.sigma_sq())?;
    let (nn, kk): (T, T) = (count(n), count(k));
    let one = T::one();
    let two: T = lit(2.0);
    let ln_n = nn.ln();
    let km1 = kk - one;
    let slack = nn - lit::<T>(4.0) * km1;

    let lead = (lead_scale * c.h_b * km1 * ln_n / (nn * kk)).sqrt()
        + (lead_scale * c.h_b * ln_n / (kk * slack)).sqrt();
    let sigma_sq = noise.sigma_sq();
    let exp_a = one - c.m * kk;
    let exp_b = one - sigma_sq * c.m / (noise.delta() * (two * prior.sigma0_sq + sigma_sq));
    let tail = kk * nn.powf(exp_a) + kk * nn.powf(exp_b);
    Ok(BoundTerms { lead, tail, c })
}

/// Failure probability bound of random-effect UCB exploration with budget `n`.
/// The raw value is returned; it may exceed 1 when vacuous.
pub fn theorem2_bound<T: Scalar>(n: usize, k: usize, prior: &PriorSpec<T>, noise: &NoiseSpec<T>) -> Result<T> {
    let t = bound_terms(n, k, prior, noise, T::one())?;
    Ok(t.c.gamma * t.lead + t.tail)
}

/// Simple Bayes regret bound; requires `n > 4(K-1)`.
pub fn theorem3_bound<T: Scalar>(n: usize, k: usize, prior: &PriorSpec<T>, noise: &NoiseSpec<T>) -> Result<T> {
    if k >= 2 && n == 4 * (k - 1) {
        return Err(BaiError::Budget(format!("regret bound requires n > 4(K-1) = {n}")));
    }
    let t = bound_terms(n, k, prior, noise, lit(2.0))?;
    let kk: T = count(k);
    let scale = lit::<T>(2.0) * prior.sigma0_sq.sqrt() * (lit::<T>(2.0) * kk.ln()).sqrt();
    Ok(t.c.kappa * t.lead + scale * t.tail)
}

/// `2 n K exp(-(n - K) / (18 H))`.
pub fn ucbe_upper_bound<T: Scalar>(n: usize, k: usize, h: T) -> Result<T> {
    if n <= k || !(h > T::zero()) {
        return Err(BaiError::Domain("need n > K and H > 0".into()));
    }
    let (nn, kk): (T, T) = (count(n), count(k));
    Ok(lit::<T>(2.0) * nn * kk * (-(nn - kk) / (lit::<T>(18.0) * h)).exp())
}

/// Minimum gap below which the UCB-E upper bound decays only polynomially:
/// `sqrt(54 ln n / n)`.
pub fn small_gap_threshold<T: Scalar>(n: usize) -> T {
    let nn: T = count(n);
    (lit::<T>(54.0) * nn.ln() / nn).sqrt()
}

/// Threshold for the Bernoulli lower-bound variant: `sqrt(ln n / (32 n))`.
pub fn small_gap_threshold_lower<T: Scalar>(n: usize) -> T {
    let nn: T = count(n);
    (nn.ln() / (lit::<T>(32.0) * nn)).sqrt()
}

/// Bracket `[H, ln(2K) H]` known to contain the lower-bound complexity `H_2`.
pub fn h2_interval<T: Scalar>(h: T, k: usize) -> (T, T) {
    (h, (lit::<T>(2.0) * count::<T>(k)).ln() * h)
}

/// `exp(-5 n / (p (1 - p) H_2))`, the Bernoulli lower bound without its
/// `o(1)` term.
pub fn bernoulli_lower_bound<T: Scalar>(n: usize, p: T, h2: T) -> T {
    (-(lit::<T>(5.0) * count::<T>(n)) / (p * (T::one() - p) * h2)).exp()
}

/// Standard normal upper tail `1 - Phi(x)`.
pub fn normal_upper_tail(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Exact two-arm full-information error `Pr(N(0, 2 sigma^2 / n) >= gap)`.
pub fn full_info_error_exact<T: Scalar>(n: usize, gap: T, sigma_sq: T) -> T {
    let z = to_f64(gap) * (n as f64 / (2.0 * to_f64(sigma_sq))).sqrt();
    lit(normal_upper_tail(z))
}

/// Mills-ratio lower bound on the full-information error:
/// `[x^-1/2 - x^-3/2] (2 pi)^-1/2 exp(-x/2)` with `x = n gap^2 / (2 sigma^2)`.
pub fn full_info_error_lower<T: Scalar>(n: usize, gap: T, sigma_sq: T) -> FlaggedBound<T> {
    let x = count::<T>(n) * gap * gap / (lit::<T>(2.0) * sigma_sq);
    let bracket = x.powf(lit(-0.5)) - x.powf(lit(-1.5));
    if !(x > T::one()) || !(bracket > T::zero()) {
        return FlaggedBound {
            value: T::zero(),
            vacuous: true,
        };
    }
    let two_pi: T = lit(2.0 * std::f64::consts::PI);
    FlaggedBound {
        value: bracket / two_pi.sqrt() * (-x / lit(2.0)).exp(),
        vacuous: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bandit::{make_instance, RewardKind};

    fn known(s0: f64, s: f64) -> (PriorSpec<f64>, NoiseSpec<f64>) {
        (PriorSpec::new(0.0, s0).unwrap(), NoiseSpec::exact(s).unwrap())
    }

    #[test]
    fn complexity_examples() {
        let mut f1: Vec<f64> = vec![0.45; 20];
        f1[0] = 0.5;
        let p = make_instance(f1, RewardKind::Bernoulli).unwrap().gap_profile();
        assert!((complexity_h(&p).unwrap() - 8000.0).abs() < 1e-9);

        let p = GapProfile {
            gaps: vec![1.0, 1.0],
            delta_min: 1.0,
        };
        assert_eq!(complexity_h(&p).unwrap(), 2.0);

        let p = make_instance(vec![0.3, 0.3], RewardKind::Bernoulli).unwrap().gap_profile();
        assert_eq!(complexity_h(&p), Err(BaiError::InfiniteComplexity));
    }

    #[test]
    fn c_k_values() {
        let c40 = c_k::<f64>(40).unwrap();
        assert!(!c40.small_k);
        assert!((c40.value - 6.641).abs() < 5e-3, "{}", c40.value);
        let c100 = c_k::<f64>(100).unwrap();
        assert!((c100.value - 23.70).abs() < 5e-3, "{}", c100.value);
        let c20 = c_k::<f64>(20).unwrap();
        assert!(c20.small_k);
        assert!((c20.value - 2.0 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-15);
        assert!(c_k::<f64>(1).is_err());
        assert!((c_k::<f32>(40).unwrap().value - 6.6379).abs() < 1e-3);
    }

    #[test]
    fn gap_bound_examples() {
        let b: f64 = gap_probability_bound(0.05, 1.0, 40).unwrap();
        assert!((b - 0.332).abs() < 1e-3);
        assert_eq!(gap_probability_bound(0.0, 1.0, 40).unwrap(), 0.0);
        assert!(gap_probability_bound(1e-9, 1.0, 40).unwrap() < 1e-7);
        assert_eq!(gap_probability_bound(10.0, 0.1, 100).unwrap(), 1.0);
    }

    #[test]
    fn constants_at_equal_variances() {
        let c = bayes_constants::<f64>(40, 1.0, 1.0).unwrap();
        assert_eq!(c.rho, 1.0);
        assert!((c.eta - 0.2).abs() < 1e-15);
        assert!((c.gamma - 2.4 * c.c_k.value).abs() < 1e-12);
        assert!((c.h_b - 41.0).abs() < 1e-12);
        assert!((c.m - 0.0405).abs() < 1e-15);
        assert!(c.beta > 1.0 && c.beta1 > 1.0);
    }

    #[test]
    fn kappa_is_twice_gamma_root_log_k() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let k = rng.random_range(2..200);
            let s0 = rng.random_range(0.01..10.0);
            let s = rng.random_range(0.01..10.0);
            let c = bayes_constants(k, s0, s).unwrap();
            let kappa =
                4.0 / (1.0 + 4.0 * c.rho) * (2.0 + 4.0 * c.rho) * c.c_k.value * (k as f64).ln().sqrt();
            assert!((c.kappa - kappa).abs() <= 1e-12 * kappa);
            assert!((c.kappa - 2.0 * c.gamma * (k as f64).ln().sqrt()).abs() <= 1e-12 * kappa);
            assert!(c.rho > 0.0 && c.eta > 0.0 && c.eta < 1.0);
        }
    }

    #[test]
    fn h_b_monotonicity() {
        let hb = |k, s0, s| bayes_constants(k, s0, s).unwrap().h_b;
        assert!(hb(41, 1.0, 1.0) > hb(40, 1.0, 1.0));
        assert!(hb(40, 1.0, 1.1) > hb(40, 1.0, 1.0));
        assert!(hb(40, 1.1, 1.0) < hb(40, 1.0, 1.0));
    }

    #[test]
    fn theorem2_decreases_over_budget_range() {
        let k = 40;
        let prior = PriorSpec::new(0.0, 1.0).unwrap();
        let noise = tuned_noise::<f64>(k, 1.0, 1.0).unwrap();
        assert!((noise.sigma_sq() - 1.0).abs() < 1e-12);
        let mut prev = f64::INFINITY;
        let mut n = 4 * (k - 1) + 1;
        while n <= 10_000_000 {
            let b = theorem2_bound(n, k, &prior, &noise).unwrap();
            assert!(b >= 0.0);
            assert!(b < prev, "not decreasing at n={n}");
            prev = b;
            n += 1 + n / 200;
        }
        assert!(theorem2_bound(4 * (k - 1) - 1, k, &prior, &noise).is_err());
    }

    #[test]
    fn theorem3_limits() {
        // With delta = 1 the last term grows like n^0.99; the decay needs the
        // tuned likelihood inflation.
        let (p, untuned) = known(1.0, 1.0);
        assert!(theorem3_bound(1_000_000, 40, &p, &untuned).unwrap() > theorem3_bound(100_000, 40, &p, &untuned).unwrap());
        let n = tuned_noise(40, 1.0, 1.0).unwrap();
        let a = theorem3_bound(100_000, 40, &p, &n).unwrap();
        let b = theorem3_bound(1_000_000, 40, &p, &n).unwrap();
        assert!(b.is_finite() && b > 0.0 && b < a);
        assert!(theorem3_bound(156, 40, &p, &n).is_err());
        let far = 1usize << 50;
        assert!(theorem2_bound(far, 40, &p, &n).unwrap() < 1e-3);
        assert!(theorem3_bound(far, 40, &p, &n).unwrap() < 1e-2);
    }

    #[test]
    fn ucbe_bound_examples() {
        let n = 10_000usize;
        let h = n as f64 / (27.0 * (n as f64).ln());
        let b = ucbe_upper_bound(n, 20, h).unwrap();
        assert!(b >= 2.0 * 20.0 / (n as f64).sqrt());
        let direct = 2.0e4 * 20.0 * (-9980.0f64 / 9000.0).exp();
        assert!((ucbe_upper_bound(n, 20, 500.0).unwrap() - direct).abs() < 1e-9 * direct);
        assert!(ucbe_upper_bound(n, 20, 1e-6).unwrap() < 1e-300);
        assert!(ucbe_upper_bound(20, 20, 1.0).is_err());
    }

    #[test]
    fn small_gap_examples() {
        assert!((small_gap_threshold::<f64>(10_000) - 0.223).abs() < 1e-3);
        assert!((small_gap_threshold_lower::<f64>(1000) - 0.0147).abs() < 1e-4);
        assert!(small_gap_threshold::<f64>(1 << 40) < 1e-4);
    }

    #[test]
    fn full_information_error() {
        assert_eq!(full_info_error_exact(100, 0.0, 1.0), 0.5);
        let e: f64 = full_info_error_exact(100, 0.2, 1.0);
        // 1 - Phi(sqrt 2)
        assert!((e - 0.078_649_603_525_142_6).abs() < 1e-9, "{e}");
        let lower = full_info_error_lower::<f64>(100, 0.2, 1.0);
        assert!(!lower.vacuous);
        assert!((lower.value - 0.0519).abs() < 1e-4, "{}", lower.value);
        assert!(lower.value <= e);
        let at_one = full_info_error_lower(2, 1.0, 1.0);
        assert_eq!(at_one.value, 0.0);
        assert!(full_info_error_lower(1, 1.0, 1.0).vacuous);
        assert!(full_info_error_exact(200, 0.2, 1.0) < e);
        assert!(full_info_error_exact(100, 0.3, 1.0) < e);
    }

    #[test]
    fn h2_bracket() {
        let (lo, hi) = h2_interval(100.0, 20);
        assert_eq!(lo, 100.0);
        assert!((hi - 40f64.ln() * 100.0).abs() < 1e-12);
        assert!(bernoulli_lower_bound(1000, 0.2, hi) > bernoulli_lower_bound(1000, 0.2, lo));
    }
}
