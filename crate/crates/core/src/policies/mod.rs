//! Fixed-budget best-arm identification policies behind one interface.
//!
//! Every policy consumes exactly `budget` pulls from a [`RewardOracle`] and
//! returns a [`Recommendation`]. All argmax/argmin decisions break ties
//! towards the lowest arm index, except Successive Rejects' elimination,
//! which removes the highest index among the tied worst arms.

mod baselines;
mod rue;

use serde::{Deserialize, Serialize};

use crate::bandit::{NoiseSpec, PriorSpec, RewardOracle, SufficientStats};
use crate::error::{BaiError, Result};
use crate::scalar::{to_f64, Scalar};

pub use baselines::{
    run_sh, run_sr, run_ucbe, run_uniform, sequential_halving_schedule, successive_rejects_schedule,
    HalvingPhase,
};
pub use rue::{pull_count_bound, run_rue, run_rue_observed, RueStep};

/// Where RUE gets its variance components from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum VarianceMode<T> {
    Known { prior: PriorSpec<T>, noise: NoiseSpec<T> },
    /// Method-of-moments plug-in, re-estimated every round.
    Estimated { floor: T },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PolicyKind<T> {
    Rue { variance_mode: VarianceMode<T> },
    Ucbe { a: T },
    SuccessiveRejects,
    SequentialHalving,
    Uniform,
}

impl<T: Scalar> PolicyKind<T> {
    /// Stable short label used in output files.
    pub fn label(&self) -> &'static str {
        match self {
            PolicyKind::Rue {
                variance_mode: VarianceMode::Known { .. },
            } => "RUE-known",
            PolicyKind::Rue { .. } => "RUE",
            PolicyKind::Ucbe { .. } => "UCBE",
            PolicyKind::SuccessiveRejects => "SR",
            PolicyKind::SequentialHalving => "SH",
            PolicyKind::Uniform => "Uniform",
        }
    }

    /// Smallest budget the policy accepts for `k` arms.
    pub fn min_budget(&self, k: usize) -> usize {
        match self {
            PolicyKind::Rue { .. } => 2 * k,
            _ => k,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig<T> {
    pub kind: PolicyKind<T>,
    pub budget: usize,
    pub num_arms: usize,
}

impl<T: Scalar> PolicyConfig<T> {
    pub fn new(kind: PolicyKind<T>, budget: usize, num_arms: usize) -> Self {
        Self {
            kind,
            budget,
            num_arms,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_arms < 2 {
            return Err(BaiError::InvalidInstance(format!(
                "need at least 2 arms, got {}",
                self.num_arms
            )));
        }
        let min = self.kind.min_budget(self.num_arms);
        if self.budget < min {
            return Err(BaiError::Budget(format!(
                "{} needs budget >= {min} for {} arms, got {}",
                self.kind.label(),
                self.num_arms,
                self.budget
            )));
        }
        match self.kind {
            PolicyKind::Ucbe { a } if !(a > T::zero()) || !a.is_finite() => Err(BaiError::Range {
                what: "UCB-E exploration parameter must be positive",
                value: to_f64(a),
            }),
            PolicyKind::Rue {
                variance_mode: VarianceMode::Estimated { floor },
            } if !(floor > T::zero()) => Err(BaiError::Range {
                what: "variance floor must be positive",
                value: to_f64(floor),
            }),
            PolicyKind::SequentialHalving => sequential_halving_schedule(self.budget, self.num_arms).map(|_| ()),
            _ => Ok(()),
        }
    }
}

/// Outcome of one policy run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation<T> {
    pub chosen_arm: usize,
    pub final_stats: SufficientStats<T>,
    pub trace: Option<Vec<usize>>,
}

/// Pull recorder shared by the policy implementations.
pub(crate) struct Session<'o, T, O: ?Sized> {
    oracle: &'o mut O,
    stats: SufficientStats<T>,
    trace: Option<Vec<usize>>,
    budget: usize,
}

impl<'o, T: Scalar, O: RewardOracle<T> + ?Sized> Session<'o, T, O> {
    fn new(oracle: &'o mut O, config: &PolicyConfig<T>, record_trace: bool) -> Result<Self> {
        config.validate()?;
        if oracle.num_arms() != config.num_arms {
            return Err(BaiError::InvalidInstance(format!(
                "oracle has {} arms, config expects {}",
                oracle.num_arms(),
                config.num_arms
            )));
        }
        Ok(Self {
            oracle,
            stats: SufficientStats::new(config.num_arms),
            trace: record_trace.then(|| Vec::with_capacity(config.budget)),
            budget: config.budget,
        })
    }

    #[inline]
    fn pull(&mut self, arm: usize) {
        debug_assert!(self.stats.round() < self.budget);
        let r = self.oracle.pull(arm);
        self.stats.record(arm, r);
        if let Some(t) = self.trace.as_mut() {
            t.push(arm);
        }
    }

    fn remaining(&self) -> usize {
        self.budget - self.stats.round()
    }

    fn finish(self, chosen_arm: usize) -> Recommendation<T> {
        debug_assert_eq!(self.stats.round(), self.budget);
        Recommendation {
            chosen_arm,
            final_stats: self.stats,
            trace: self.trace,
        }
    }
}

/// Runs whichever policy `config` names.
pub fn run_policy<T: Scalar, O: RewardOracle<T> + ?Sized>(
    oracle: &mut O,
    config: &PolicyConfig<T>,
    record_trace: bool,
) -> Result<Recommendation<T>> {
    match config.kind {
        PolicyKind::Rue { .. } => run_rue(oracle, config, record_trace),
        PolicyKind::Ucbe { .. } => run_ucbe(oracle, config, record_trace),
        PolicyKind::SuccessiveRejects => run_sr(oracle, config, record_trace),
        PolicyKind::SequentialHalving => run_sh(oracle, config, record_trace),
        PolicyKind::Uniform => run_uniform(oracle, config, record_trace),
    }
}
