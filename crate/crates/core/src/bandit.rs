//! Domain types shared by every other module: bandit instances, the Bayesian
//! model parameters, sufficient statistics of an interaction and the reward
//! oracle a policy pulls from.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{BaiError, Result};
use crate::scalar::{argmax_lowest, count, lit, to_f64, Scalar};

/// Prior over arm means: `mu_k ~ N(mu0, sigma0_sq)` independently.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec<T> {
    pub mu0: T,
    pub sigma0_sq: T,
}

impl<T: Scalar> PriorSpec<T> {
    pub fn new(mu0: T, sigma0_sq: T) -> Result<Self> {
        if !(sigma0_sq > T::zero()) || !sigma0_sq.is_finite() {
            return Err(BaiError::Range {
                what: "prior variance must be positive and finite",
                value: to_f64(sigma0_sq),
            });
        }
        Ok(Self { mu0, sigma0_sq })
    }
}

/// Reward noise model. `nu_sq` is the sub-Gaussian proxy, `delta` inflates it
/// into the working likelihood variance `sigma_sq = nu_sq / delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec<T> {
    nu_sq: T,
    delta: T,
    sigma_sq: T,
}

impl<T: Scalar> NoiseSpec<T> {
    pub fn new(nu_sq: T, delta: T) -> Result<Self> {
        if !(nu_sq > T::zero()) || !nu_sq.is_finite() {
            return Err(BaiError::Range {
                what: "noise proxy variance must be positive and finite",
                value: to_f64(nu_sq),
            });
        }
        if !(delta > T::zero() && delta <= T::one()) {
            return Err(BaiError::Range {
                what: "likelihood inflation delta must lie in (0, 1]",
                value: to_f64(delta),
            });
        }
        Ok(Self {
            nu_sq,
            delta,
            sigma_sq: nu_sq / delta,
        })
    }

    /// Noise model with `delta = 1`, so the working variance equals `sigma_sq`.
    pub fn exact(sigma_sq: T) -> Result<Self> {
        Self::new(sigma_sq, T::one())
    }

    pub fn nu_sq(&self) -> T {
        self.nu_sq
    }

    pub fn delta(&self) -> T {
        self.delta
    }

    pub fn sigma_sq(&self) -> T {
        self.sigma_sq
    }
}

/// Reward family of an environment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RewardKind<T> {
    Gaussian { sigma_sq: T },
    Bernoulli,
}

/// Ground truth for a simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanditInstance<T> {
    means: Vec<T>,
    reward_kind: RewardKind<T>,
    best_arm: usize,
}

/// Suboptimality gaps. The best arm's entry holds the minimum gap.
#[derive(Debug, Clone, PartialEq)]
pub struct GapProfile<T> {
    pub gaps: Vec<T>,
    pub delta_min: T,
}

/// Builds a validated instance. The best arm is the lowest-index maximizer.
pub fn make_instance<T: Scalar>(means: Vec<T>, reward_kind: RewardKind<T>) -> Result<BanditInstance<T>> {
    if means.len() < 2 {
        return Err(BaiError::InvalidInstance(format!(
            "need at least 2 arms, got {}",
            means.len()
        )));
    }
    if let Some(m) = means.iter().find(|m| !m.is_finite()) {
        return Err(BaiError::Range {
            what: "arm means must be finite",
            value: to_f64(*m),
        });
    }
    match reward_kind {
        RewardKind::Bernoulli => {
            if let Some(m) = means.iter().find(|&&m| m < T::zero() || m > T::one()) {
                return Err(BaiError::Range {
                    what: "Bernoulli means must lie in [0, 1]",
                    value: to_f64(*m),
                });
            }
        }
        RewardKind::Gaussian { sigma_sq } => {
            if !(sigma_sq > T::zero()) || !sigma_sq.is_finite() {
                return Err(BaiError::Range {
                    what: "Gaussian reward variance must be positive",
                    value: to_f64(sigma_sq),
                });
            }
        }
    }
    let best_arm = argmax_lowest(means.iter().copied()).expect("non-empty means");
    Ok(BanditInstance {
        means,
        reward_kind,
        best_arm,
    })
}

impl<T: Scalar> BanditInstance<T> {
    pub fn num_arms(&self) -> usize {
        self.means.len()
    }

    pub fn means(&self) -> &[T] {
        &self.means
    }

    pub fn reward_kind(&self) -> RewardKind<T> {
        self.reward_kind
    }

    pub fn best_arm(&self) -> usize {
        self.best_arm
    }

    pub fn best_mean(&self) -> T {
        self.means[self.best_arm]
    }

    pub fn gap_profile(&self) -> GapProfile<T> {
        let best = self.best_mean();
        let mut gaps: Vec<T> = self.means.iter().map(|&m| best - m).collect();
        let delta_min = gaps
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != self.best_arm)
            .map(|(_, &g)| g)
            .fold(T::infinity(), T::min);
        gaps[self.best_arm] = delta_min;
        GapProfile { gaps, delta_min }
    }

    /// Simple regret of recommending `arm`.
    pub fn simple_regret(&self, arm: usize) -> T {
        self.best_mean() - self.means[arm]
    }
}

/// Draws one reward of `arm`.
pub fn sample_reward<T: Scalar, R: Rng + ?Sized>(
    instance: &BanditInstance<T>,
    arm: usize,
    rng: &mut R,
) -> Result<T> {
    let mean = *instance.means.get(arm).ok_or(BaiError::Index {
        arm,
        arms: instance.num_arms(),
    })?;
    Ok(draw(mean, instance.reward_kind, rng))
}

#[inline]
fn draw<T: Scalar, R: Rng + ?Sized>(mean: T, kind: RewardKind<T>, rng: &mut R) -> T {
    match kind {
        RewardKind::Gaussian { sigma_sq } => {
            let z: f64 = rng.sample(StandardNormal);
            mean + sigma_sq.sqrt() * lit::<T>(z)
        }
        RewardKind::Bernoulli => {
            let u: f64 = rng.random();
            if u < to_f64(mean) {
                T::one()
            } else {
                T::zero()
            }
        }
    }
}

/// Counts and reward sums per arm; the only state a policy reads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SufficientStats<T> {
    pulls: Vec<usize>,
    reward_sums: Vec<T>,
    reward_sq_sums: Vec<T>,
    round: usize,
}

impl<T: Scalar> SufficientStats<T> {
    pub fn new(num_arms: usize) -> Self {
        Self {
            pulls: vec![0; num_arms],
            reward_sums: vec![T::zero(); num_arms],
            reward_sq_sums: vec![T::zero(); num_arms],
            round: 0,
        }
    }

    /// Assembles stats from raw parts, checking the invariants.
    pub fn from_parts(pulls: Vec<usize>, reward_sums: Vec<T>, reward_sq_sums: Vec<T>) -> Result<Self> {
        let k = pulls.len();
        if reward_sums.len() != k || reward_sq_sums.len() != k {
            return Err(BaiError::InvalidInstance("stats vectors differ in length".into()));
        }
        for i in 0..k {
            if pulls[i] == 0 && (reward_sums[i] != T::zero() || reward_sq_sums[i] != T::zero()) {
                return Err(BaiError::InvalidInstance(format!(
                    "arm {i} has rewards but no pulls"
                )));
            }
        }
        let round = pulls.iter().sum();
        Ok(Self {
            pulls,
            reward_sums,
            reward_sq_sums,
            round,
        })
    }

    /// Records one reward in place. Panics if `arm` is out of range.
    #[inline]
    pub fn record(&mut self, arm: usize, reward: T) {
        self.pulls[arm] += 1;
        self.reward_sums[arm] = self.reward_sums[arm] + reward;
        self.reward_sq_sums[arm] = self.reward_sq_sums[arm] + reward * reward;
        self.round += 1;
    }

    pub fn num_arms(&self) -> usize {
        self.pulls.len()
    }

    pub fn pulls(&self) -> &[usize] {
        &self.pulls
    }

    pub fn reward_sums(&self) -> &[T] {
        &self.reward_sums
    }

    pub fn reward_sq_sums(&self) -> &[T] {
        &self.reward_sq_sums
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn min_pulls(&self) -> usize {
        self.pulls.iter().copied().min().unwrap_or(0)
    }

    /// Sample mean of an arm, `None` if it was never pulled.
    pub fn mean(&self, arm: usize) -> Option<T> {
        match self.pulls[arm] {
            0 => None,
            t => Some(self.reward_sums[arm] / count(t)),
        }
    }

    /// Sample means with unpulled arms reported as zero.
    pub fn means_or_zero(&self) -> Vec<T> {
        (0..self.num_arms())
            .map(|k| self.mean(k).unwrap_or_else(T::zero))
            .collect()
    }

    /// Arm with the largest sample mean, ties to the lowest index.
    pub fn best_empirical_arm(&self) -> usize {
        argmax_lowest(self.means_or_zero()).unwrap_or(0)
    }
}

/// Copy-on-update form of [`SufficientStats::record`].
pub fn update_stats<T: Scalar>(stats: &SufficientStats<T>, arm: usize, reward: T) -> Result<SufficientStats<T>> {
    if arm >= stats.num_arms() {
        return Err(BaiError::Index {
            arm,
            arms: stats.num_arms(),
        });
    }
    let mut next = stats.clone();
    next.record(arm, reward);
    Ok(next)
}

/// Source of rewards for a policy run.
pub trait RewardOracle<T> {
    fn num_arms(&self) -> usize;
    fn pull(&mut self, arm: usize) -> T;
}

/// Samples rewards from a [`BanditInstance`] with one independent ChaCha8
/// stream per arm, so the j-th pull of arm k is the same draw no matter which
/// policy consumes the oracle.
#[derive(Debug, Clone)]
pub struct InstanceSampler<'a, T> {
    instance: &'a BanditInstance<T>,
    streams: Vec<ChaCha8Rng>,
}

impl<'a, T: Scalar> InstanceSampler<'a, T> {
    pub fn new(instance: &'a BanditInstance<T>, seed: u64) -> Self {
        let streams = (0..instance.num_arms())
            .map(|k| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(k as u64);
                rng
            })
            .collect();
        Self { instance, streams }
    }

    pub fn instance(&self) -> &BanditInstance<T> {
        self.instance
    }
}

impl<T: Scalar> RewardOracle<T> for InstanceSampler<'_, T> {
    fn num_arms(&self) -> usize {
        self.instance.num_arms()
    }

    #[inline]
    fn pull(&mut self, arm: usize) -> T {
        draw(self.instance.means[arm], self.instance.reward_kind, &mut self.streams[arm])
    }
}

/// Oracle backed by a closure, handy for scripted rewards.
pub struct FnOracle<F> {
    arms: usize,
    f: F,
}

impl<F> FnOracle<F> {
    pub fn new(arms: usize, f: F) -> Self {
        Self { arms, f }
    }
}

impl<T, F: FnMut(usize) -> T> RewardOracle<T> for FnOracle<F> {
    fn num_arms(&self) -> usize {
        self.arms
    }

    fn pull(&mut self, arm: usize) -> T {
        (self.f)(arm)
    }
}
