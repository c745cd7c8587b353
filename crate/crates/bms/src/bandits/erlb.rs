//! Epsilon-greedy linear bandit with RMSProp updates and EMA-smoothed
//! weights for non-stationarity tracking.

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use super::{argmax_allowed, validate_reward, Agent, BanditError};

/// Tuning knobs: exploration rate, learning rate, RMSProp decay, EMA rate
/// and the numerical-stability constant inside the square root.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErlbParams {
    pub epsilon: f64,
    pub eta: f64,
    pub gamma: f64,
    pub alpha_ema: f64,
    pub eps_num: f64,
}

#[derive(Debug, Clone)]
pub struct ErlbPolicy {
    params: ErlbParams,
    dim: usize,
    /// Raw per-arm weights, updated by RMSProp.
    theta: Vec<Vec<f64>>,
    /// EMA-smoothed weights used for arm selection.
    theta_ema: Vec<Vec<f64>>,
    /// Elementwise RMSProp accumulator, never negative.
    v: Vec<Vec<f64>>,
    rng: ChaCha12Rng,
    last_explored: bool,
}

impl ErlbPolicy {
    pub fn new(num_arms: usize, dim: usize, params: ErlbParams, rng: ChaCha12Rng) -> Self {
        ErlbPolicy {
            params,
            dim,
            theta: vec![vec![0.0; dim]; num_arms],
            theta_ema: vec![vec![0.0; dim]; num_arms],
            v: vec![vec![0.0; dim]; num_arms],
            rng,
            last_explored: false,
        }
    }

    fn check_dim<'a>(&self, ctx: Option<&'a [f64]>) -> Result<&'a [f64], BanditError> {
        let x = ctx.ok_or(BanditError::DimensionMismatch {
            expected: self.dim,
            got: 0,
        })?;
        if x.len() != self.dim {
            return Err(BanditError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(x)
    }

    /// Whether the last `select` was an epsilon-exploration round.
    pub fn last_explored(&self) -> bool {
        self.last_explored
    }

    pub fn theta(&self, arm: usize) -> &[f64] {
        &self.theta[arm]
    }

    pub fn theta_ema(&self, arm: usize) -> &[f64] {
        &self.theta_ema[arm]
    }
}

impl Agent for ErlbPolicy {
    fn select(&mut self, ctx: Option<&[f64]>, allowed: &[usize]) -> Result<usize, BanditError> {
        if allowed.is_empty() {
            return Err(BanditError::EmptyAllowed);
        }
        let x = self.check_dim(ctx)?;
        if self.rng.random::<f64>() < self.params.epsilon {
            self.last_explored = true;
            return Ok(allowed[self.rng.random_range(0..allowed.len())]);
        }
        self.last_explored = false;
        argmax_allowed(allowed, |a| {
            x.iter().zip(&self.theta_ema[a]).map(|(xi, ti)| xi * ti).sum()
        })
    }

    fn update(&mut self, arm: usize, ctx: Option<&[f64]>, reward: f64) -> Result<(), BanditError> {
        validate_reward(reward)?;
        let x = self.check_dim(ctx)?.to_vec();
        let p = self.params;
        let predicted: f64 = x.iter().zip(&self.theta[arm]).map(|(xi, ti)| xi * ti).sum();
        let err = predicted - reward;
        // the four update lines, elementwise, for the selected arm only
        for i in 0..self.dim {
            let g = err * x[i];
            self.v[arm][i] = p.gamma * self.v[arm][i] + (1.0 - p.gamma) * g * g;
            self.theta[arm][i] -= p.eta / (self.v[arm][i] + p.eps_num).sqrt() * g;
            self.theta_ema[arm][i] =
                p.alpha_ema * self.theta_ema[arm][i] + (1.0 - p.alpha_ema) * self.theta[arm][i];
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::stream_rng;
    use approx::assert_abs_diff_eq;

    fn params_sa() -> ErlbParams {
        // tuned single-agent defaults
        ErlbParams {
            epsilon: 0.020,
            eta: 0.086,
            gamma: 0.87,
            alpha_ema: 0.22,
            eps_num: 1e-8,
        }
    }

    fn policy(num_arms: usize, dim: usize, params: ErlbParams) -> ErlbPolicy {
        ErlbPolicy::new(num_arms, dim, params, stream_rng(11, "erlb-test"))
    }

    #[test]
    fn single_step_matches_hand_execution() {
        // d = 1, fresh arm, x = (1), r = 1:
        //   g = -1, v = 0.13, theta = eta / sqrt(0.13 + 1e-8),
        //   ema = 0.78 * theta (~0.2385 and ~0.1860)
        let mut p = policy(2, 1, params_sa());
        p.update(0, Some(&[1.0]), 1.0).unwrap();
        let v = 0.87 * 0.0 + (1.0 - 0.87) * 1.0;
        let theta = 0.086 / (v + 1e-8f64).sqrt();
        let ema = 0.22 * 0.0 + (1.0 - 0.22) * theta;
        assert_abs_diff_eq!(p.theta(0)[0], theta, epsilon = 1e-12);
        assert_abs_diff_eq!(p.theta_ema(0)[0], ema, epsilon = 1e-12);
        assert_abs_diff_eq!(p.theta(0)[0], 0.2385, epsilon = 1e-4);
        assert_abs_diff_eq!(p.theta_ema(0)[0], 0.18605, epsilon = 1e-4);
        // the other arm is untouched
        assert_eq!(p.theta(1)[0], 0.0);
    }

    #[test]
    fn zero_context_leaves_theta_and_decays_v() {
        let mut p = policy(1, 2, params_sa());
        p.update(0, Some(&[1.0, 1.0]), 0.0).unwrap();
        let theta_before = p.theta(0).to_vec();
        let v_before = p.v[0].clone();
        let ema_before = p.theta_ema(0).to_vec();
        p.update(0, Some(&[0.0, 0.0]), 0.5).unwrap();
        assert_eq!(p.theta(0), theta_before.as_slice());
        for i in 0..2 {
            assert_abs_diff_eq!(p.v[0][i], 0.87 * v_before[i], epsilon = 1e-15);
            // ema moves toward theta
            let want = 0.22 * ema_before[i] + 0.78 * theta_before[i];
            assert_abs_diff_eq!(p.theta_ema(0)[i], want, epsilon = 1e-15);
        }
    }

    #[test]
    fn exact_prediction_freezes_theta() {
        let mut p = policy(1, 1, params_sa());
        p.update(0, Some(&[1.0]), 1.0).unwrap();
        let theta = p.theta(0)[0];
        // reward equal to the current prediction -> zero gradient
        p.update(0, Some(&[1.0]), theta).unwrap();
        assert_abs_diff_eq!(p.theta(0)[0], theta, epsilon = 1e-15);
    }

    #[test]
    fn epsilon_one_always_explores() {
        let mut params = params_sa();
        params.epsilon = 1.0;
        let mut p = policy(3, 1, params);
        let mut seen = [false; 3];
        for _ in 0..100 {
            let arm = p.select(Some(&[1.0]), &[0, 1, 2]).unwrap();
            assert!(p.last_explored());
            seen[arm] = true;
        }
        assert_eq!(seen, [true; 3]);
    }

    #[test]
    fn epsilon_zero_is_greedy_with_low_tie_break() {
        let mut params = params_sa();
        params.epsilon = 0.0;
        let mut p = policy(3, 2, params);
        // all-zero weights: tie across all arms -> arm 0
        assert_eq!(p.select(Some(&[0.5, 0.5]), &[0, 1, 2]).unwrap(), 0);
        // make arm 2 dominant under this context
        p.theta_ema[2] = vec![1.0, 1.0];
        assert_eq!(p.select(Some(&[0.5, 0.5]), &[0, 1, 2]).unwrap(), 2);
    }

    #[test]
    fn ema_rate_zero_tracks_raw_theta() {
        let mut params = params_sa();
        params.alpha_ema = 0.0;
        let mut p = policy(1, 1, params);
        for r in [1.0, 0.3, 0.8, 0.0] {
            p.update(0, Some(&[1.0]), r).unwrap();
            assert_abs_diff_eq!(p.theta_ema(0)[0], p.theta(0)[0], epsilon = 1e-15);
        }
    }

    #[test]
    fn accumulator_stays_non_negative() {
        let mut p = policy(1, 3, params_sa());
        let mut rng = stream_rng(5, "erlb-prop");
        for _ in 0..500 {
            let x: Vec<f64> = (0..3).map(|_| rng.random::<f64>()).collect();
            let r = rng.random::<f64>();
            p.update(0, Some(&x), r).unwrap();
            assert!(p.v[0].iter().all(|&v| v >= 0.0));
        }
    }
}
