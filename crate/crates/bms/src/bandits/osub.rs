//! Optimal Sampling for Unimodal Bandits: leader-guided KL-UCB exploration
//! restricted to a neighbor graph.

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use super::{argmax_allowed, kl_ucb_index, validate_reward, Agent, BanditError};
use crate::actions::NeighborGraph;

/// OSUB over a fixed neighbor graph. Each round the empirical-mean leader is
/// found; every (gamma+1)-th time an arm leads it is replayed outright,
/// otherwise the KL-UCB maximizer among the leader and its neighbors is
/// selected. `explore_p` adds the small uniform-exploration factor used by
/// the multi-agent variant (0 disables it, and then the policy never touches
/// its random stream).
#[derive(Debug, Clone)]
pub struct OsubPolicy {
    graph: NeighborGraph,
    gamma: usize,
    explore_p: f64,
    klucb_c: f64,
    t: u64,
    counts: Vec<u64>,
    means: Vec<f64>,
    leader_counts: Vec<u64>,
    rng: ChaCha12Rng,
    last_explored: bool,
}

impl OsubPolicy {
    pub fn new(graph: NeighborGraph, explore_p: f64, klucb_c: f64, rng: ChaCha12Rng) -> Self {
        let n = graph.len();
        // the leader-replay period uses the full graph's maximum degree,
        // also under per-round masks
        let gamma = graph.max_degree;
        OsubPolicy {
            graph,
            gamma,
            explore_p,
            klucb_c,
            t: 0,
            counts: vec![0; n],
            means: vec![0.0; n],
            leader_counts: vec![0; n],
            rng,
            last_explored: false,
        }
    }

    fn exploration_budget(&self) -> f64 {
        let t = self.t as f64;
        let mut f = t.ln();
        if self.klucb_c > 0.0 && t > std::f64::consts::E {
            f += self.klucb_c * t.ln().ln();
        }
        f.max(0.0)
    }

    /// Whether the last `select` was a uniform-random exploration round.
    pub fn last_explored(&self) -> bool {
        self.last_explored
    }

    pub fn mean(&self, arm: usize) -> f64 {
        self.means[arm]
    }

    #[cfg(test)]
    fn force_rounds(&mut self, t: u64) {
        self.t = t;
    }
}

impl Agent for OsubPolicy {
    fn select(&mut self, _ctx: Option<&[f64]>, allowed: &[usize]) -> Result<usize, BanditError> {
        if allowed.is_empty() {
            return Err(BanditError::EmptyAllowed);
        }
        self.t += 1;
        self.last_explored = false;
        // one forced pull per allowed arm, in index order
        if let Some(&arm) = allowed.iter().find(|&&a| self.counts[a] == 0) {
            return Ok(arm);
        }
        if self.explore_p > 0.0 && self.rng.random::<f64>() < self.explore_p {
            self.last_explored = true;
            return Ok(allowed[self.rng.random_range(0..allowed.len())]);
        }
        let leader = argmax_allowed(allowed, |a| self.means[a])?;
        self.leader_counts[leader] += 1;
        if self.leader_counts[leader] % (self.gamma as u64 + 1) == 0 {
            return Ok(leader);
        }
        let mut candidates: Vec<usize> = self.graph.neighbors(leader).to_vec();
        candidates.push(leader);
        candidates.retain(|a| allowed.binary_search(a).is_ok());
        candidates.sort_unstable();
        let f = self.exploration_budget();
        argmax_allowed(&candidates, |a| kl_ucb_index(self.means[a], self.counts[a], f))
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
    use crate::actions::linear_neighbors;
    use crate::engine::stream_rng;

    fn chain_policy(n: usize, p: f64) -> OsubPolicy {
        OsubPolicy::new(linear_neighbors(n), p, 0.0, stream_rng(7, "osub-test"))
    }

    fn seed_means(policy: &mut OsubPolicy, means: &[f64], pulls: u64) {
        for (arm, &m) in means.iter().enumerate() {
            for _ in 0..pulls {
                policy.update(arm, None, m).unwrap();
            }
        }
    }

    #[test]
    fn candidates_restricted_to_leader_neighborhood() {
        // 5-chain with the leader in the middle: candidates {1, 2, 3} only
        let mut p = chain_policy(5, 0.0);
        let means = [0.1, 0.2, 0.9, 0.15, 0.05];
        seed_means(&mut p, &means, 3);
        for _ in 0..50 {
            let arm = p.select(None, &[0, 1, 2, 3, 4]).unwrap();
            assert!((1..=3).contains(&arm), "selected {arm} outside the neighborhood");
            p.update(arm, None, means[arm]).unwrap();
        }
    }

    #[test]
    fn neighborhood_excludes_non_adjacent_arms() {
        // 5-chain with leader at arm 0: only {0, 1} are candidates
        let mut p = chain_policy(5, 0.0);
        seed_means(&mut p, &[0.9, 0.1, 0.1, 0.1, 0.1], 2);
        for _ in 0..100 {
            let arm = p.select(None, &[0, 1, 2, 3, 4]).unwrap();
            assert!(arm <= 1, "selected {arm} outside the leader neighborhood");
            p.update(arm, None, if arm == 0 { 0.9 } else { 0.1 }).unwrap();
        }
    }

    #[test]
    fn leader_replayed_every_gamma_plus_one() {
        // gamma = 2 for a chain: with unpulled stats cleared, the leader is
        // replayed whenever its leadership count hits a multiple of 3
        let mut p = chain_policy(3, 0.0);
        seed_means(&mut p, &[0.9, 0.5, 0.1], 1);
        let mut leader_plays = 0;
        for round in 1..=9 {
            let arm = p.select(None, &[0, 1, 2]).unwrap();
            // arm 0 stays leader throughout; on rounds 3, 6, 9 it must be
            // replayed regardless of KL-UCB indices
            if round % 3 == 0 {
                assert_eq!(arm, 0, "round {round} should replay the leader");
                leader_plays += 1;
            }
            p.update(arm, None, if arm == 0 { 0.9 } else { 0.0 }).unwrap();
        }
        assert_eq!(leader_plays, 3);
    }

    #[test]
    fn strictly_best_neighbor_index_wins_when_not_replaying() {
        let mut p = chain_policy(3, 0.0);
        // leader arm 0 with many pulls (tight index); neighbor arm 1 with one
        // pull and a mean close behind -> arm 1's KL-UCB index dominates
        for _ in 0..200 {
            p.update(0, None, 0.6).unwrap();
        }
        p.update(1, None, 0.55).unwrap();
        p.update(2, None, 0.0).unwrap();
        p.force_rounds(201);
        let arm = p.select(None, &[0, 1, 2]).unwrap();
        assert_eq!(arm, 1);
    }

    #[test]
    fn empty_allowed_is_an_error() {
        let mut p = chain_policy(3, 0.0);
        assert_eq!(p.select(None, &[]), Err(BanditError::EmptyAllowed));
    }

    #[test]
    fn forced_initialization_covers_the_allowed_mask_only() {
        let mut p = chain_policy(4, 0.0);
        let allowed = [1, 3];
        assert_eq!(p.select(None, &allowed).unwrap(), 1);
        p.update(1, None, 0.4).unwrap();
        assert_eq!(p.select(None, &allowed).unwrap(), 3);
        p.update(3, None, 0.2).unwrap();
        assert_eq!(p.counts[0], 0);
        assert_eq!(p.counts[2], 0);
    }
}
