//! Synthetic bandit environments that validate the algorithms independently
//! of the Wi-Fi simulator, plus the play loop that produces regret curves
//! and selection rates.

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use crate::bandits::{Agent, BanditError};
use crate::engine::stream_rng;

/// A synthetic reward process. Rewards always land in [0, 1].
#[derive(Debug, Clone)]
pub enum SyntheticEnv {
    /// Independent Bernoulli arms.
    Bernoulli { means: Vec<f64> },
    /// Bernoulli arms whose means are unimodal along the arm chain.
    UnimodalChain { means: Vec<f64> },
    /// Disjoint linear model: reward = clip(x . theta_a + noise) with
    /// noise ~ Uniform[-noise, +noise] and x ~ Uniform[0,1]^d.
    LinearContext { thetas: Vec<Vec<f64>>, noise: f64 },
    /// Linear model whose weights switch at fixed changepoints.
    PiecewiseLinearContext {
        phases: Vec<Vec<Vec<f64>>>,
        changepoints: Vec<usize>,
        noise: f64,
    },
}

impl SyntheticEnv {
    /// The 10-arm Bernoulli benchmark: one 0.9 arm among 0.5s.
    pub fn bernoulli10() -> Self {
        let mut means = vec![0.5; 10];
        means[3] = 0.9;
        SyntheticEnv::Bernoulli { means }
    }

    /// A 10-arm chain with a single interior peak.
    pub fn unimodal10() -> Self {
        SyntheticEnv::UnimodalChain {
            means: vec![0.30, 0.38, 0.46, 0.54, 0.62, 0.70, 0.78, 0.70, 0.62, 0.54],
        }
    }

    /// Stationary linear-context benchmark, d = 9 (the single-agent Wi-Fi
    /// context width). Arms are graded so the best one dominates by a wide
    /// margin for essentially every context, keeping the optimal action
    /// unambiguous against constant-step-size estimation noise.
    pub fn linear9() -> Self {
        let grades = [0.30, 0.95, 0.25, 0.20, 0.15];
        SyntheticEnv::LinearContext {
            thetas: grades.iter().map(|&c| vec![c / 9.0; 9]).collect(),
            noise: 0.05,
        }
    }

    /// Non-stationary variant of [`SyntheticEnv::linear9`]: the grade order
    /// rotates at the changepoints, moving the optimal arm.
    pub fn piecewise9(horizon: usize) -> Self {
        let base = [0.30, 0.95, 0.25, 0.20, 0.15];
        let mut phases = Vec::new();
        for shift in 0..3 {
            let thetas: Vec<Vec<f64>> = (0..base.len())
                .map(|a| vec![base[(a + shift) % base.len()] / 9.0; 9])
                .collect();
            phases.push(thetas);
        }
        SyntheticEnv::PiecewiseLinearContext {
            phases,
            changepoints: vec![horizon / 3, 2 * horizon / 3],
            noise: 0.05,
        }
    }

    pub fn num_arms(&self) -> usize {
        match self {
            SyntheticEnv::Bernoulli { means } | SyntheticEnv::UnimodalChain { means } => means.len(),
            SyntheticEnv::LinearContext { thetas, .. } => thetas.len(),
            SyntheticEnv::PiecewiseLinearContext { phases, .. } => phases[0].len(),
        }
    }

    pub fn dim(&self) -> Option<usize> {
        match self {
            SyntheticEnv::LinearContext { thetas, .. } => Some(thetas[0].len()),
            SyntheticEnv::PiecewiseLinearContext { phases, .. } => Some(phases[0][0].len()),
            _ => None,
        }
    }

    fn thetas_at(&self, t: usize) -> Option<&[Vec<f64>]> {
        match self {
            SyntheticEnv::LinearContext { thetas, .. } => Some(thetas),
            SyntheticEnv::PiecewiseLinearContext {
                phases,
                changepoints,
                ..
            } => {
                let phase = changepoints.iter().filter(|&&c| t >= c).count();
                Some(&phases[phase.min(phases.len() - 1)])
            }
            _ => None,
        }
    }

    /// Context for round `t`, if the environment is contextual.
    pub fn sample_context(&self, rng: &mut ChaCha12Rng) -> Option<Vec<f64>> {
        self.dim()
            .map(|d| (0..d).map(|_| rng.random::<f64>()).collect())
    }

    /// Expected reward of an arm for round `t` (pre-clip linear value).
    pub fn expected(&self, t: usize, arm: usize, ctx: Option<&[f64]>) -> f64 {
        match self {
            SyntheticEnv::Bernoulli { means } | SyntheticEnv::UnimodalChain { means } => means[arm],
            _ => {
                let thetas = self.thetas_at(t).expect("contextual env");
                let x = ctx.expect("contextual env needs a context");
                x.iter().zip(&thetas[arm]).map(|(xi, ti)| xi * ti).sum()
            }
        }
    }

    pub fn optimal_arm(&self, t: usize, ctx: Option<&[f64]>) -> usize {
        (0..self.num_arms())
            .max_by(|&a, &b| {
                self.expected(t, a, ctx)
                    .partial_cmp(&self.expected(t, b, ctx))
                    .unwrap()
            })
            .unwrap()
    }

    pub fn reward(&self, t: usize, arm: usize, ctx: Option<&[f64]>, rng: &mut ChaCha12Rng) -> f64 {
        match self {
            SyntheticEnv::Bernoulli { means } | SyntheticEnv::UnimodalChain { means } => {
                if rng.random::<f64>() < means[arm] {
                    1.0
                } else {
                    0.0
                }
            }
            SyntheticEnv::LinearContext { noise, .. }
            | SyntheticEnv::PiecewiseLinearContext { noise, .. } => {
                let mean = self.expected(t, arm, ctx);
                let eps = rng.random_range(-noise..=*noise);
                (mean + eps).clamp(0.0, 1.0)
            }
        }
    }

    /// Chain graph for unimodal environments (the OSUB topology).
    pub fn chain_graph(&self) -> crate::actions::NeighborGraph {
        crate::actions::linear_neighbors(self.num_arms())
    }
}

/// Result of one agent/environment run.
#[derive(Debug, Clone)]
pub struct PlayResult {
    /// Cumulative expected regret against the omniscient policy, sampled
    /// every `sample_every` rounds (index 0 = after round sample_every).
    pub regret_curve: Vec<f64>,
    pub sample_every: usize,
    pub final_regret: f64,
    /// Per-round flags: was the selected arm optimal for its context?
    pub optimal: Vec<bool>,
    /// Arms selected per round.
    pub selections: Vec<usize>,
}

impl PlayResult {
    /// Fraction of optimal selections within `[from, to)`.
    pub fn optimal_rate(&self, from: usize, to: usize) -> f64 {
        let to = to.min(self.optimal.len());
        if from >= to {
            return 0.0;
        }
        let hits = self.optimal[from..to].iter().filter(|&&b| b).count();
        hits as f64 / (to - from) as f64
    }

    /// Regret accumulated by round `t` (interpolated to the sample grid).
    pub fn regret_at(&self, t: usize) -> f64 {
        if self.regret_curve.is_empty() || t == 0 {
            return 0.0;
        }
        let idx = (t / self.sample_every).min(self.regret_curve.len()) - 1;
        self.regret_curve[idx]
    }
}

/// Plays `agent` against `env` for `horizon` rounds. Rewards come from the
/// `env/<seed>` stream; the agent's own exploration stream is whatever it
/// was built with.
pub fn play(
    env: &SyntheticEnv,
    agent: &mut dyn Agent,
    horizon: usize,
    seed: u64,
) -> Result<PlayResult, BanditError> {
    let mut rng = stream_rng(seed, "env");
    let allowed: Vec<usize> = (0..env.num_arms()).collect();
    let sample_every = (horizon / 200).max(1);
    let mut cumulative = 0.0;
    let mut curve = Vec::with_capacity(horizon / sample_every + 1);
    let mut optimal = Vec::with_capacity(horizon);
    let mut selections = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let ctx = env.sample_context(&mut rng);
        let arm = agent.select(ctx.as_deref(), &allowed)?;
        let r = env.reward(t, arm, ctx.as_deref(), &mut rng);
        agent.update(arm, ctx.as_deref(), r)?;
        let best = env.optimal_arm(t, ctx.as_deref());
        cumulative += env.expected(t, best, ctx.as_deref()) - env.expected(t, arm, ctx.as_deref());
        optimal.push(arm == best);
        selections.push(arm);
        if (t + 1) % sample_every == 0 {
            curve.push(cumulative);
        }
    }
    Ok(PlayResult {
        regret_curve: curve,
        sample_every,
        final_regret: cumulative,
        optimal,
        selections,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bandits::{RandomPolicy, UcbPolicy};

    #[test]
    fn random_baseline_has_the_expected_linear_slope() {
        // 10-arm Bernoulli, best 0.9 vs 0.5: uniform play loses 0.4 * 9/10
        // per round in expectation
        let env = SyntheticEnv::bernoulli10();
        let horizon = 20_000;
        let mut slopes = Vec::new();
        for seed in 0..20 {
            let mut agent = RandomPolicy::new(stream_rng(seed, "agent"));
            let res = play(&env, &mut agent, horizon, seed).unwrap();
            slopes.push(res.final_regret / horizon as f64);
        }
        let mean = slopes.iter().sum::<f64>() / slopes.len() as f64;
        let want = 0.4 * 9.0 / 10.0;
        assert!(
            (mean - want).abs() / want < 0.05,
            "slope {mean:.4} vs expected {want:.4}"
        );
    }

    #[test]
    fn ucb_regret_is_sublinear() {
        let env = SyntheticEnv::bernoulli10();
        let horizon = 20_000;
        let mut early = 0.0;
        let mut late = 0.0;
        for seed in 0..20 {
            let mut agent = UcbPolicy::new(10, 1.09);
            let res = play(&env, &mut agent, horizon, seed).unwrap();
            early += res.regret_at(2_000) / 2_000.0;
            late += res.regret_at(20_000) / 20_000.0;
        }
        assert!(
            late < early,
            "per-round regret should shrink: early {early:.5}, late {late:.5}"
        );
    }

    #[test]
    fn contexts_are_in_the_unit_cube() {
        let env = SyntheticEnv::linear9();
        let mut rng = stream_rng(0, "env");
        for _ in 0..100 {
            let x = env.sample_context(&mut rng).unwrap();
            assert_eq!(x.len(), 9);
            assert!(x.iter().all(|v| (0.0..1.0).contains(v)));
        }
    }

    #[test]
    fn rewards_stay_in_unit_interval() {
        let envs = [
            SyntheticEnv::bernoulli10(),
            SyntheticEnv::unimodal10(),
            SyntheticEnv::linear9(),
            SyntheticEnv::piecewise9(300),
        ];
        let mut rng = stream_rng(1, "env");
        for env in &envs {
            for t in 0..300 {
                let ctx = env.sample_context(&mut rng);
                for arm in 0..env.num_arms() {
                    let r = env.reward(t, arm, ctx.as_deref(), &mut rng);
                    assert!((0.0..=1.0).contains(&r));
                }
            }
        }
    }

    #[test]
    fn piecewise_env_moves_its_optimum() {
        let env = SyntheticEnv::piecewise9(300);
        let x = vec![0.5; 9];
        let first = env.optimal_arm(0, Some(&x));
        let second = env.optimal_arm(150, Some(&x));
        let third = env.optimal_arm(280, Some(&x));
        assert_ne!(first, second);
        assert_ne!(second, third);
    }

    #[test]
    fn unimodal_means_are_unimodal() {
        if let SyntheticEnv::UnimodalChain { means } = SyntheticEnv::unimodal10() {
            let peak = means
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0;
            for w in means[..=peak].windows(2) {
                assert!(w[0] < w[1]);
            }
            for w in means[peak..].windows(2) {
                assert!(w[0] > w[1]);
            }
        } else {
            unreachable!();
        }
    }
}
