//! Upper Confidence Bound with a tunable exploration coefficient.

use super::{argmax_allowed, validate_reward, Agent, BanditError};

/// Classic UCB over empirical means. The round counter `t` counts this
/// agent's own decisions, one per transmission cycle.
#[derive(Debug, Clone)]
pub struct UcbPolicy {
    alpha: f64,
    t: u64,
    counts: Vec<u64>,
    means: Vec<f64>,
}

impl UcbPolicy {
    pub fn new(num_arms: usize, alpha: f64) -> Self {
        UcbPolicy {
            alpha,
            t: 0,
            counts: vec![0; num_arms],
            means: vec![0.0; num_arms],
        }
    }

    /// The optimism index: mean + sqrt(alpha * ln t / (2 n)).
    pub fn index(mean: f64, count: u64, ln_t: f64, alpha: f64) -> f64 {
        mean + (alpha * ln_t / (2.0 * count as f64)).sqrt()
    }

    pub fn mean(&self, arm: usize) -> f64 {
        self.means[arm]
    }

    pub fn count(&self, arm: usize) -> u64 {
        self.counts[arm]
    }

    pub fn rounds(&self) -> u64 {
        self.t
    }
}

impl Agent for UcbPolicy {
    fn select(&mut self, _ctx: Option<&[f64]>, allowed: &[usize]) -> Result<usize, BanditError> {
        if allowed.is_empty() {
            return Err(BanditError::EmptyAllowed);
        }
        self.t += 1;
        // sequential initialization: unpulled allowed arms in index order
        if let Some(&arm) = allowed.iter().find(|&&a| self.counts[a] == 0) {
            return Ok(arm);
        }
        let ln_t = (self.t as f64).ln();
        argmax_allowed(allowed, |a| {
            Self::index(self.means[a], self.counts[a], ln_t, self.alpha)
        })
    }

    fn update(&mut self, arm: usize, _ctx: Option<&[f64]>, reward: f64) -> Result<(), BanditError> {
        validate_reward(reward)?;
        self.counts[arm] += 1;
        let n = self.counts[arm] as f64;
        self.means[arm] += (reward - self.means[arm]) / n;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn pulls_unpulled_arms_in_index_order() {
        let mut ucb = UcbPolicy::new(4, 1.0);
        let allowed = [0, 1, 2, 3];
        for want in 0..4 {
            let arm = ucb.select(None, &allowed).unwrap();
            assert_eq!(arm, want);
            ucb.update(arm, None, 0.5).unwrap();
        }
    }

    #[test]
    fn index_arithmetic() {
        // mean 0.5, N = 4, ln t = 2, alpha = 1 -> 0.5 + sqrt(2/8) = 1.0
        assert_abs_diff_eq!(UcbPolicy::index(0.5, 4, 2.0, 1.0), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn equal_indices_pick_the_lower_arm() {
        let mut ucb = UcbPolicy::new(2, 1.0);
        for arm in 0..2 {
            ucb.select(None, &[0, 1]).unwrap();
            ucb.update(arm, None, 0.5).unwrap();
        }
        assert_eq!(ucb.select(None, &[0, 1]).unwrap(), 0);
    }

    #[test]
    fn adding_a_constant_to_all_means_preserves_the_argmax() {
        let mut a = UcbPolicy::new(3, 1.2);
        let mut b = UcbPolicy::new(3, 1.2);
        let rewards = [0.1, 0.6, 0.3, 0.2, 0.55, 0.25, 0.15, 0.62];
        for (i, &r) in rewards.iter().enumerate() {
            let arm = i % 3;
            a.update(arm, None, r).unwrap();
            b.update(arm, None, (r + 0.3).min(1.0)).unwrap();
        }
        // force both counters to the same round
        for _ in 0..3 {
            let x = a.select(None, &[0, 1, 2]).unwrap();
            let y = b.select(None, &[0, 1, 2]).unwrap();
            assert_eq!(x, y);
            a.update(x, None, 0.0).unwrap();
            b.update(y, None, 0.3).unwrap();
        }
    }

    #[test]
    fn masked_arms_keep_their_statistics() {
        let mut ucb = UcbPolicy::new(3, 1.0);
        ucb.update(2, None, 0.9).unwrap();
        // arm 2 masked out: selection initializes the allowed subset only
        assert_eq!(ucb.select(None, &[0, 1]).unwrap(), 0);
        assert_abs_diff_eq!(ucb.mean(2), 0.9);
    }

    #[test]
    fn reward_out_of_range_is_rejected() {
        let mut ucb = UcbPolicy::new(2, 1.0);
        assert_eq!(
            ucb.update(0, None, 1.5),
            Err(BanditError::RewardOutOfRange(1.5))
        );
    }
}
