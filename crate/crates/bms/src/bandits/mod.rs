//! Bandit policies behind one selection/update interface: UCB, OSUB,
//! LinUCB, E-RLB, plus a uniform-random baseline and a pinned policy for
//! calibration runs.
//!
//! All policies break score ties toward the lowest arm index and operate on
//! the `allowed` subset passed per round; statistics for masked-out arms
//! persist untouched.

mod baseline;
mod erlb;
mod klucb;
mod linucb;
mod osub;
mod ucb;

pub use baseline::{FixedPolicy, RandomPolicy};
pub use erlb::{ErlbParams, ErlbPolicy};
pub use klucb::{bernoulli_kl, kl_ucb_index};
pub use linucb::LinUcbPolicy;
pub use osub::OsubPolicy;
pub use ucb::UcbPolicy;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BanditError {
    #[error("cannot select from an empty allowed-arm set")]
    EmptyAllowed,
    #[error("arm {arm} is outside the allowed set")]
    ArmNotAllowed { arm: usize },
    #[error("context dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("reward {0} is outside [0, 1]")]
    RewardOutOfRange(f64),
}

/// One action-selection/update interface shared by every algorithm.
/// Non-contextual policies ignore the context argument.
pub trait Agent {
    fn select(&mut self, ctx: Option<&[f64]>, allowed: &[usize]) -> Result<usize, BanditError>;
    fn update(&mut self, arm: usize, ctx: Option<&[f64]>, reward: f64)
        -> Result<(), BanditError>;
}

/// The algorithms selectable from configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlgorithmKind {
    Ucb,
    Osub,
    Linucb,
    Erlb,
    Random,
}

impl AlgorithmKind {
    pub const ALL: [AlgorithmKind; 5] = [
        AlgorithmKind::Ucb,
        AlgorithmKind::Osub,
        AlgorithmKind::Linucb,
        AlgorithmKind::Erlb,
        AlgorithmKind::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AlgorithmKind::Ucb => "ucb",
            AlgorithmKind::Osub => "osub",
            AlgorithmKind::Linucb => "linucb",
            AlgorithmKind::Erlb => "erlb",
            AlgorithmKind::Random => "random",
        }
    }

    pub fn is_contextual(self) -> bool {
        matches!(self, AlgorithmKind::Linucb | AlgorithmKind::Erlb)
    }
}

impl std::str::FromStr for AlgorithmKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown algorithm '{s}' (expected ucb|osub|linucb|erlb|random)"))
    }
}

fn validate_reward(reward: f64) -> Result<(), BanditError> {
    if (0.0..=1.0).contains(&reward) {
        Ok(())
    } else {
        Err(BanditError::RewardOutOfRange(reward))
    }
}

/// Argmax over `allowed` with ties to the lowest arm index.
fn argmax_allowed(allowed: &[usize], score: impl Fn(usize) -> f64) -> Result<usize, BanditError> {
    let mut best: Option<(usize, f64)> = None;
    for &arm in allowed {
        let s = score(arm);
        match best {
            Some((_, bs)) if s <= bs => {}
            _ => best = Some((arm, s)),
        }
    }
    best.map(|(arm, _)| arm).ok_or(BanditError::EmptyAllowed)
}
