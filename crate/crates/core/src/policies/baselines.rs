//! UCB-E, Successive Rejects, Sequential Halving and uniform allocation.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;

use crate::bandit::RewardOracle;
use crate::error::{BaiError, Result};
use crate::scalar::{argmax_lowest, count, Scalar};

use super::{PolicyConfig, PolicyKind, Recommendation, Session};

/// UCB-E: one pull per arm, then `argmax mean_k + sqrt(a / T_k)`.
pub fn run_ucbe<T: Scalar, O: RewardOracle<T> + ?Sized>(
    oracle: &mut O,
    config: &PolicyConfig<T>,
    record_trace: bool,
) -> Result<Recommendation<T>> {
    let a = match config.kind {
        PolicyKind::Ucbe { a } => a,
        _ => return Err(BaiError::Config(format!("run_ucbe called with a {} config", config.kind.label()))),
    };
    let mut session = Session::new(oracle, config, record_trace)?;
    let k = config.num_arms;
    for arm in 0..k {
        session.pull(arm);
    }
    while session.remaining() > 0 {
        let stats = &session.stats;
        let arm = argmax_lowest((0..k).map(|i| {
            let t: T = count(stats.pulls()[i]);
            stats.reward_sums()[i] / t + (a / t).sqrt()
        }))
        .unwrap_or(0);
        session.pull(arm);
    }
    let chosen = session.stats.best_empirical_arm();
    Ok(session.finish(chosen))
}

/// Cumulative per-arm pull targets `n_1 <= ... <= n_{K-1}` of Successive
/// Rejects, `n_j = ceil((n - K) / (logbar(K) (K + 1 - j)))` with
/// `logbar(K) = 1/2 + sum_{i=2..K} 1/i`, evaluated in exact rationals.
pub fn successive_rejects_schedule(n: usize, k: usize) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(BaiError::InvalidInstance(format!("need at least 2 arms, got {k}")));
    }
    if n < k {
        return Err(BaiError::Budget(format!("SR needs budget >= {k}, got {n}")));
    }
    let int = |x: usize| BigInt::from(x);
    let mut logbar = BigRational::new(int(1), int(2));
    for i in 2..=k {
        logbar += BigRational::new(int(1), int(i));
    }
    let spare = BigRational::from_integer(int(n - k));
    (1..k)
        .map(|j| {
            let target = &spare / (&logbar * BigRational::from_integer(int(k + 1 - j)));
            target
                .ceil()
                .to_integer()
                .to_usize()
                .ok_or_else(|| BaiError::Budget("SR phase length overflow".into()))
        })
        .collect()
}

/// Successive Rejects. Each phase tops every survivor up to the phase target,
/// then drops the survivor with the lowest sample mean (ties: highest index).
/// Rounding slack is spent round-robin over the last two survivors before the
/// final comparison.
pub fn run_sr<T: Scalar, O: RewardOracle<T> + ?Sized>(
    oracle: &mut O,
    config: &PolicyConfig<T>,
    record_trace: bool,
) -> Result<Recommendation<T>> {
    let schedule = successive_rejects_schedule(config.budget, config.num_arms)?;
    let mut session = Session::new(oracle, config, record_trace)?;
    let mut survivors: Vec<usize> = (0..config.num_arms).collect();
    let phases = schedule.len();

    for (j, &target) in schedule.iter().enumerate() {
        for &arm in &survivors {
            while session.stats.pulls()[arm] < target {
                session.pull(arm);
            }
        }
        if j + 1 == phases {
            spend_round_robin(&mut session, &survivors);
        }
        let means = session.stats.means_or_zero();
        let mut worst = survivors[0];
        for &arm in &survivors[1..] {
            // `<=` moves to the later (higher index) arm on ties.
            if means[arm] <= means[worst] {
                worst = arm;
            }
        }
        survivors.retain(|&a| a != worst);
    }
    debug_assert_eq!(survivors.len(), 1);
    Ok(session.finish(survivors[0]))
}

/// One Sequential Halving phase: how many arms survive into it and how many
/// times each is pulled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HalvingPhase {
    pub survivors: usize,
    pub pulls_per_arm: usize,
}

/// `ceil(log2 K)` phases; phase `r` pulls each of `|S_r|` survivors
/// `floor(n / (|S_r| ceil(log2 K)))` times and keeps `ceil(|S_r| / 2)`.
pub fn sequential_halving_schedule(n: usize, k: usize) -> Result<Vec<HalvingPhase>> {
    if k < 2 {
        return Err(BaiError::InvalidInstance(format!("need at least 2 arms, got {k}")));
    }
    if n < k {
        return Err(BaiError::Budget(format!("SH needs budget >= {k}, got {n}")));
    }
    let rounds = (usize::BITS - (k - 1).leading_zeros()) as usize;
    let mut phases = Vec::with_capacity(rounds);
    let mut alive = k;
    for _ in 0..rounds {
        let per = n / (alive * rounds);
        if per == 0 {
            return Err(BaiError::Budget(format!(
                "SH budget {n} gives zero pulls per arm with {alive} survivors over {rounds} phases"
            )));
        }
        phases.push(HalvingPhase {
            survivors: alive,
            pulls_per_arm: per,
        });
        alive = alive.div_ceil(2);
    }
    debug_assert_eq!(alive, 1);
    Ok(phases)
}

/// Sequential Halving. Survivors are ranked by their sample mean within the
/// current phase only; ties keep the lower index.
pub fn run_sh<T: Scalar, O: RewardOracle<T> + ?Sized>(
    oracle: &mut O,
    config: &PolicyConfig<T>,
    record_trace: bool,
) -> Result<Recommendation<T>> {
    let schedule = sequential_halving_schedule(config.budget, config.num_arms)?;
    let mut session = Session::new(oracle, config, record_trace)?;
    let mut survivors: Vec<usize> = (0..config.num_arms).collect();
    let last = schedule.len() - 1;

    for (r, phase) in schedule.iter().enumerate() {
        debug_assert_eq!(phase.survivors, survivors.len());
        let before_pulls = session.stats.pulls().to_vec();
        let before_sums = session.stats.reward_sums().to_vec();
        for &arm in &survivors {
            for _ in 0..phase.pulls_per_arm {
                session.pull(arm);
            }
        }
        if r == last {
            spend_round_robin(&mut session, &survivors);
        }
        let phase_mean = |arm: usize| -> T {
            let t = session.stats.pulls()[arm] - before_pulls[arm];
            (session.stats.reward_sums()[arm] - before_sums[arm]) / count(t)
        };
        let mut ranked: Vec<(usize, T)> = survivors.iter().map(|&a| (a, phase_mean(a))).collect();
        ranked.sort_by(|x, y| y.1.partial_cmp(&x.1).unwrap_or(std::cmp::Ordering::Equal).then(x.0.cmp(&y.0)));
        ranked.truncate(survivors.len().div_ceil(2));
        survivors = ranked.into_iter().map(|(a, _)| a).collect();
        survivors.sort_unstable();
    }
    debug_assert_eq!(survivors.len(), 1);
    Ok(session.finish(survivors[0]))
}

/// Round-robin over all arms; recommends the best sample mean.
pub fn run_uniform<T: Scalar, O: RewardOracle<T> + ?Sized>(
    oracle: &mut O,
    config: &PolicyConfig<T>,
    record_trace: bool,
) -> Result<Recommendation<T>> {
    let mut session = Session::new(oracle, config, record_trace)?;
    let k = config.num_arms;
    for t in 0..config.budget {
        session.pull(t % k);
    }
    let chosen = session.stats.best_empirical_arm();
    Ok(session.finish(chosen))
}

fn spend_round_robin<T: Scalar, O: RewardOracle<T> + ?Sized>(session: &mut Session<'_, T, O>, arms: &[usize]) {
    let mut i = 0;
    while session.remaining() > 0 {
        session.pull(arms[i % arms.len()]);
        i += 1;
    }
}
