//! Binds bandit agents to learning nodes: context construction, reward
//! computation, and the single-agent / multi-agent decision plumbing.
//!
//! In the multi-agent architecture three agents decide strictly in order
//! channel -> primary -> cw; later agents see earlier decisions through
//! one-hot encodings over the four basic channels, and all three receive the
//! identical scalar reward at the end of the cycle.

use crate::actions::{
    allocations, channel_overlap_graph, joint_neighbors, linear_neighbors, mask_primary,
    ActionTriple, CW_LADDER,
};
use crate::bandits::{
    Agent, AlgorithmKind, BanditError, ErlbParams, ErlbPolicy, FixedPolicy, LinUcbPolicy,
    OsubPolicy, RandomPolicy, UcbPolicy,
};
use crate::engine::stream_rng;

/// Cycle-duration bounds for the reward map, in ms.
pub const D_MIN_MS: f64 = 0.0;
pub const D_MAX_MS: f64 = 10.0;

/// r = clip((D_max - D) / (D_max - D_min)) for a cycle duration in ms.
pub fn compute_reward(d_ms: f64) -> f64 {
    ((D_MAX_MS - d_ms) / (D_MAX_MS - D_MIN_MS)).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Architecture {
    Sa,
    Ma,
}

impl Architecture {
    pub fn name(self) -> &'static str {
        match self {
            Architecture::Sa => "sa",
            Architecture::Ma => "ma",
        }
    }
}

impl std::str::FromStr for Architecture {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sa" => Ok(Architecture::Sa),
            "ma" => Ok(Architecture::Ma),
            other => Err(format!("unknown architecture '{other}' (expected sa|ma)")),
        }
    }
}

/// Resolved hyperparameters for one run. Defaults are the tuned values per
/// architecture; every field is config-overridable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tuning {
    pub ucb_alpha: f64,
    pub linucb_alpha: f64,
    pub erlb: ErlbParams,
    pub osub_p: f64,
    pub klucb_c: f64,
}

impl Tuning {
    pub fn defaults(arch: Architecture) -> Self {
        match arch {
            Architecture::Sa => Tuning {
                ucb_alpha: 1.09,
                linucb_alpha: 0.52,
                erlb: ErlbParams {
                    epsilon: 0.020,
                    eta: 0.086,
                    gamma: 0.87,
                    alpha_ema: 0.22,
                    eps_num: 1e-8,
                },
                osub_p: 0.0,
                klucb_c: 0.0,
            },
            Architecture::Ma => Tuning {
                ucb_alpha: 1.14,
                linucb_alpha: 0.50,
                erlb: ErlbParams {
                    epsilon: 0.038,
                    eta: 0.069,
                    gamma: 0.79,
                    alpha_ema: 0.25,
                    eps_num: 1e-8,
                },
                osub_p: 0.05,
                klucb_c: 0.0,
            },
        }
    }
}

/// Medium/queue features observed once at cycle start and reused for every
/// stage of that cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContextSnapshot {
    pub occupancy: [f64; 4],
    pub busy: [f64; 4],
    pub queue_util: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Sa,
    Channel,
    Primary,
    Cw,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Sa => "sa",
            Stage::Channel => "channel",
            Stage::Primary => "primary",
            Stage::Cw => "cw",
        }
    }

    /// Context width for the stage: 9 / 9 / 12 / 17.
    pub fn dim(self) -> usize {
        match self {
            Stage::Sa | Stage::Channel => 9,
            Stage::Primary => 12,
            Stage::Cw => 17,
        }
    }
}

fn one_hot_channel(primary: u8) -> [f64; 4] {
    std::array::from_fn(|i| if i as u8 + 1 == primary { 1.0 } else { 0.0 })
}

fn multi_hot_alloc(mask: crate::medium::ChannelMask) -> [f64; 4] {
    std::array::from_fn(|i| if mask.contains(i as u8 + 1) { 1.0 } else { 0.0 })
}

/// Assembles the feature vector for one decision stage. Earlier decisions
/// enter via `alloc` (primary and cw stages) and `primary` (cw stage only).
pub fn build_context(
    snap: &ContextSnapshot,
    stage: Stage,
    alloc: Option<crate::medium::ChannelMask>,
    primary: Option<u8>,
) -> Vec<f64> {
    let mut x = Vec::with_capacity(stage.dim());
    x.extend_from_slice(&snap.occupancy);
    x.extend_from_slice(&snap.busy);
    match stage {
        Stage::Sa | Stage::Channel => x.push(snap.queue_util),
        Stage::Primary => {
            x.extend_from_slice(&multi_hot_alloc(alloc.expect("primary stage needs the allocation")));
        }
        Stage::Cw => {
            x.push(snap.queue_util);
            x.extend_from_slice(&multi_hot_alloc(alloc.expect("cw stage needs the allocation")));
            x.extend_from_slice(&one_hot_channel(primary.expect("cw stage needs the primary")));
        }
    }
    debug_assert_eq!(x.len(), stage.dim());
    x
}

/// One cycle's decision: the chosen triple plus the arms and stage contexts
/// needed to feed the update half of the loop.
#[derive(Debug, Clone)]
pub struct Decision {
    pub triple: ActionTriple,
    pub arms: Vec<usize>,
    pub contexts: Vec<Vec<f64>>,
}

/// One learning node's agent stack: a single joint agent (SA) or the
/// channel/primary/cw chain (MA).
pub struct AgentBinding {
    arch: Architecture,
    agents: Vec<Box<dyn Agent + Send>>,
    joint: Vec<ActionTriple>,
    contextual: bool,
}

impl AgentBinding {
    pub fn new(
        algo: AlgorithmKind,
        arch: Architecture,
        tuning: &Tuning,
        seed: u64,
        node_label: &str,
    ) -> Self {
        let joint = crate::actions::enumerate_joint();
        let stages: &[Stage] = match arch {
            Architecture::Sa => &[Stage::Sa],
            Architecture::Ma => &[Stage::Channel, Stage::Primary, Stage::Cw],
        };
        let agents = stages
            .iter()
            .map(|&stage| {
                let arms = match (arch, stage) {
                    (Architecture::Sa, _) => joint.len(),
                    (_, Stage::Channel) => 7,
                    (_, Stage::Primary) => 4,
                    (_, Stage::Cw) => 7,
                    _ => unreachable!(),
                };
                let rng = stream_rng(seed, &format!("agent/{node_label}/{}", stage.name()));
                let agent: Box<dyn Agent + Send> = match algo {
                    AlgorithmKind::Ucb => Box::new(UcbPolicy::new(arms, tuning.ucb_alpha)),
                    AlgorithmKind::Linucb => {
                        Box::new(LinUcbPolicy::new(arms, stage.dim(), tuning.linucb_alpha))
                    }
                    AlgorithmKind::Erlb => {
                        Box::new(ErlbPolicy::new(arms, stage.dim(), tuning.erlb, rng))
                    }
                    AlgorithmKind::Random => Box::new(RandomPolicy::new(rng)),
                    AlgorithmKind::Osub => {
                        let graph = match (arch, stage) {
                            (Architecture::Sa, _) => joint_neighbors(&joint),
                            (_, Stage::Channel) => channel_overlap_graph(),
                            (_, Stage::Primary) => linear_neighbors(4),
                            (_, Stage::Cw) => linear_neighbors(7),
                            _ => unreachable!(),
                        };
                        Box::new(OsubPolicy::new(graph, tuning.osub_p, tuning.klucb_c, rng))
                    }
                };
                agent
            })
            .collect();
        AgentBinding {
            arch,
            agents,
            joint,
            contextual: algo.is_contextual(),
        }
    }

    /// A single-agent binding pinned to one triple (calibration runs).
    pub fn fixed_sa(triple: ActionTriple) -> Self {
        let joint = crate::actions::enumerate_joint();
        let arm = crate::actions::joint_index(&joint, &triple).expect("triple must be valid");
        AgentBinding {
            arch: Architecture::Sa,
            agents: vec![Box::new(FixedPolicy::new(arm))],
            joint,
            contextual: false,
        }
    }

    pub fn architecture(&self) -> Architecture {
        self.arch
    }

    /// Whether the bound algorithm consumes contexts (decides if snapshots
    /// are worth logging).
    pub fn is_contextual(&self) -> bool {
        self.contextual
    }

    /// Runs the per-cycle selection: one joint arm (SA) or the sequential
    /// channel -> primary -> cw chain (MA).
    pub fn decide(&mut self, snap: &ContextSnapshot) -> Result<Decision, BanditError> {
        match self.arch {
            Architecture::Sa => {
                let ctx = build_context(snap, Stage::Sa, None, None);
                let allowed: Vec<usize> = (0..self.joint.len()).collect();
                let arm = self.agents[0].select(Some(&ctx), &allowed)?;
                Ok(Decision {
                    triple: self.joint[arm],
                    arms: vec![arm],
                    contexts: vec![ctx],
                })
            }
            Architecture::Ma => {
                let ctx_ch = build_context(snap, Stage::Channel, None, None);
                let all7: Vec<usize> = (0..7).collect();
                let ch_arm = self.agents[0].select(Some(&ctx_ch), &all7)?;
                let alloc = allocations()[ch_arm];

                let ctx_p = build_context(snap, Stage::Primary, Some(alloc.mask), None);
                let allowed_p = mask_primary(alloc);
                let p_arm = self.agents[1].select(Some(&ctx_p), &allowed_p)?;
                let primary = p_arm as u8 + 1;

                let ctx_cw = build_context(snap, Stage::Cw, Some(alloc.mask), Some(primary));
                let cw_arm = self.agents[2].select(Some(&ctx_cw), &all7)?;
                let cw = CW_LADDER[cw_arm];

                Ok(Decision {
                    triple: ActionTriple::new(alloc, primary, cw),
                    arms: vec![ch_arm, p_arm, cw_arm],
                    contexts: vec![ctx_ch, ctx_p, ctx_cw],
                })
            }
        }
    }

    /// Feeds the cycle reward back: one update per bound agent, each with its
    /// own stage context and the identical scalar reward.
    pub fn learn(&mut self, decision: &Decision, reward: f64) -> Result<(), BanditError> {
        if !(0.0..=1.0).contains(&reward) {
            return Err(BanditError::RewardOutOfRange(reward));
        }
        for (i, agent) in self.agents.iter_mut().enumerate() {
            agent.update(decision.arms[i], Some(&decision.contexts[i]), reward)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::medium::ChannelMask;
    use approx::assert_abs_diff_eq;

    fn idle_snapshot() -> ContextSnapshot {
        ContextSnapshot {
            occupancy: [0.0; 4],
            busy: [0.0; 4],
            queue_util: 0.0,
        }
    }

    #[test]
    fn reward_formula_points() {
        assert_eq!(compute_reward(10.0), 0.0);
        assert_eq!(compute_reward(0.0), 1.0);
        assert_abs_diff_eq!(compute_reward(2.5), 0.75, epsilon = 1e-12);
        // durations past the cap clip to zero
        assert_eq!(compute_reward(25.0), 0.0);
    }

    #[test]
    fn sa_context_is_nine_zeros_when_idle() {
        let x = build_context(&idle_snapshot(), Stage::Sa, None, None);
        assert_eq!(x, vec![0.0; 9]);
    }

    #[test]
    fn primary_stage_context_shape() {
        let mut snap = idle_snapshot();
        snap.queue_util = 0.8; // must be excluded for the primary agent
        let x = build_context(&snap, Stage::Primary, Some(ChannelMask::from_channels(&[3, 4])), None);
        assert_eq!(x.len(), 12);
        assert_eq!(&x[8..12], &[0.0, 0.0, 1.0, 1.0]);
        assert!(!x.contains(&0.8));
    }

    #[test]
    fn cw_stage_context_shape() {
        let mut snap = idle_snapshot();
        snap.queue_util = 0.4;
        let x = build_context(&snap, Stage::Cw, Some(ChannelMask::from_channels(&[1, 2])), Some(2));
        assert_eq!(x.len(), 17);
        assert_eq!(x[8], 0.4);
        assert_eq!(&x[9..13], &[1.0, 1.0, 0.0, 0.0]);
        assert_eq!(&x[13..17], &[0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn sa_arm_to_triple_round_trips() {
        let tuning = Tuning::defaults(Architecture::Sa);
        let mut binding = AgentBinding::new(
            AlgorithmKind::Random,
            Architecture::Sa,
            &tuning,
            9,
            "bss1",
        );
        let joint = crate::actions::enumerate_joint();
        for _ in 0..200 {
            let d = binding.decide(&idle_snapshot()).unwrap();
            assert_eq!(joint[d.arms[0]], d.triple);
        }
    }

    #[test]
    fn ma_singleton_allocation_forces_its_primary() {
        let tuning = Tuning::defaults(Architecture::Ma);
        let mut binding =
            AgentBinding::new(AlgorithmKind::Ucb, Architecture::Ma, &tuning, 1, "bss1");
        for _ in 0..40 {
            let d = binding.decide(&idle_snapshot()).unwrap();
            assert!(d.triple.alloc.mask.contains(d.triple.primary));
            binding.learn(&d, 0.5).unwrap();
        }
    }

    #[test]
    fn ma_learn_updates_every_agent_with_the_same_reward() {
        let tuning = Tuning::defaults(Architecture::Ma);
        let mut binding =
            AgentBinding::new(AlgorithmKind::Linucb, Architecture::Ma, &tuning, 2, "bss1");
        let d = binding.decide(&idle_snapshot()).unwrap();
        assert_eq!(d.arms.len(), 3);
        assert_eq!(d.contexts[0].len(), 9);
        assert_eq!(d.contexts[1].len(), 12);
        assert_eq!(d.contexts[2].len(), 17);
        binding.learn(&d, 0.75).unwrap();
    }

    #[test]
    fn out_of_range_reward_is_surfaced() {
        let tuning = Tuning::defaults(Architecture::Sa);
        let mut binding =
            AgentBinding::new(AlgorithmKind::Ucb, Architecture::Sa, &tuning, 3, "bss1");
        let d = binding.decide(&idle_snapshot()).unwrap();
        assert_eq!(
            binding.learn(&d, 1.5),
            Err(BanditError::RewardOutOfRange(1.5))
        );
    }
}
