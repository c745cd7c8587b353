//! Non-learning reference policies: uniform random and a pinned arm.

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use super::{validate_reward, Agent, BanditError};

/// Uniform-random baseline: one arm per round, no learning.
#[derive(Debug, Clone)]
pub struct RandomPolicy {
    rng: ChaCha12Rng,
}

impl RandomPolicy {
    pub fn new(rng: ChaCha12Rng) -> Self {
        RandomPolicy { rng }
    }
}

impl Agent for RandomPolicy {
    fn select(&mut self, _ctx: Option<&[f64]>, allowed: &[usize]) -> Result<usize, BanditError> {
        if allowed.is_empty() {
            return Err(BanditError::EmptyAllowed);
        }
        Ok(allowed[self.rng.random_range(0..allowed.len())])
    }

    fn update(&mut self, _arm: usize, _ctx: Option<&[f64]>, reward: f64) -> Result<(), BanditError> {
        validate_reward(reward)
    }
}

/// Always plays one configured arm. Useful for calibration runs such as the
/// saturated-airtime check.
#[derive(Debug, Clone)]
pub struct FixedPolicy {
    arm: usize,
}

impl FixedPolicy {
    pub fn new(arm: usize) -> Self {
        FixedPolicy { arm }
    }
}

impl Agent for FixedPolicy {
    fn select(&mut self, _ctx: Option<&[f64]>, allowed: &[usize]) -> Result<usize, BanditError> {
        if allowed.is_empty() {
            return Err(BanditError::EmptyAllowed);
        }
        if allowed.binary_search(&self.arm).is_err() {
            return Err(BanditError::ArmNotAllowed { arm: self.arm });
        }
        Ok(self.arm)
    }

    fn update(&mut self, _arm: usize, _ctx: Option<&[f64]>, reward: f64) -> Result<(), BanditError> {
        validate_reward(reward)
    }
}
