//! Action spaces for channel access: the 7 channel allocations, the CW
//! ladder, the 84-triple joint space, per-agent factorized spaces, and the
//! neighbor graphs used by structure-exploiting agents.
//!
//! Arm ordering is fixed and documented: allocations are #1..#7 in the order
//! below, primaries ascend by channel number, CWs ascend by value. Index
//! order drives sequential initialization, so it is part of the contract.

use crate::medium::ChannelMask;

/// CW sizes 2^(i+4) for i = 0..=6.
pub const CW_LADDER: [u32; 7] = [16, 32, 64, 128, 256, 512, 1024];

/// One of the 7 valid operational channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ChannelAllocation {
    /// Label number 1..=7 (printed as "#1".."#7").
    pub id: u8,
    pub mask: ChannelMask,
    pub width_mhz: u16,
}

impl ChannelAllocation {
    pub fn label(&self) -> String {
        format!("#{}", self.id)
    }
}

/// The 7 allocations in label order: {1},{2},{3},{4},{1,2},{3,4},{1,2,3,4}.
pub fn allocations() -> [ChannelAllocation; 7] {
    let mk = |id: u8, chs: &[u8]| ChannelAllocation {
        id,
        mask: ChannelMask::from_channels(chs),
        width_mhz: 20 * chs.len() as u16,
    };
    [
        mk(1, &[1]),
        mk(2, &[2]),
        mk(3, &[3]),
        mk(4, &[4]),
        mk(5, &[1, 2]),
        mk(6, &[3, 4]),
        mk(7, &[1, 2, 3, 4]),
    ]
}

pub fn allocation(id: u8) -> ChannelAllocation {
    allocations()[(id - 1) as usize]
}

/// Index of a CW value on the ladder.
pub fn cw_index(cw: u32) -> Option<usize> {
    CW_LADDER.iter().position(|&c| c == cw)
}

/// The decision vector: operational channel, primary channel, CW.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ActionTriple {
    pub alloc: ChannelAllocation,
    pub primary: u8,
    pub cw: u32,
}

impl ActionTriple {
    pub fn new(alloc: ChannelAllocation, primary: u8, cw: u32) -> Self {
        debug_assert!(alloc.mask.contains(primary), "primary must lie in the allocation");
        debug_assert!(cw_index(cw).is_some(), "cw must be on the ladder");
        ActionTriple { alloc, primary, cw }
    }

    /// Allocation label with the primary subscript when the allocation is
    /// wider than 20 MHz, e.g. "#7_3".
    pub fn channel_label(&self) -> String {
        if self.alloc.mask.count() == 1 {
            self.alloc.label()
        } else {
            format!("#{}_{}", self.alloc.id, self.primary)
        }
    }
}

/// One agent's ordered arm list. Arm index order is the initialization and
/// tie-break order everywhere.
#[derive(Debug, Clone)]
pub enum ActionSpace {
    /// All 84 triples (single-agent architecture).
    Joint(Vec<ActionTriple>),
    /// The 7 allocations in label order.
    ChannelAgent,
    /// The 4 basic channels; a per-round mask restricts to the allocation.
    PrimaryAgent,
    /// The 7 CW values in ladder order.
    CwAgent,
}

impl ActionSpace {
    pub fn joint() -> Self {
        ActionSpace::Joint(enumerate_joint())
    }

    pub fn arm_count(&self) -> usize {
        match self {
            ActionSpace::Joint(arms) => arms.len(),
            ActionSpace::ChannelAgent | ActionSpace::CwAgent => 7,
            ActionSpace::PrimaryAgent => 4,
        }
    }
}

/// All 84 triples, ordered lexicographically by (allocation id, primary
/// channel, CW index).
pub fn enumerate_joint() -> Vec<ActionTriple> {
    let mut arms = Vec::with_capacity(84);
    for alloc in allocations() {
        for primary in alloc.mask.channels() {
            for cw in CW_LADDER {
                arms.push(ActionTriple::new(alloc, primary, cw));
            }
        }
    }
    arms
}

/// Position of a triple in the joint ordering.
pub fn joint_index(arms: &[ActionTriple], triple: &ActionTriple) -> Option<usize> {
    arms.iter().position(|t| t == triple)
}

/// Allowed primary channels for an allocation (the mask for the primary
/// agent): exactly the allocation's basic channels.
pub fn mask_primary(alloc: ChannelAllocation) -> Vec<usize> {
    alloc.mask.channels().map(|c| (c - 1) as usize).collect()
}

/// Undirected neighbor graph over arm indices.
#[derive(Debug, Clone)]
pub struct NeighborGraph {
    pub adjacency: Vec<Vec<usize>>,
    pub max_degree: usize,
}

impl NeighborGraph {
    fn from_edges(n: usize, mut edge: impl FnMut(usize, usize) -> bool) -> Self {
        let mut adjacency = vec![Vec::new(); n];
        for u in 0..n {
            for v in (u + 1)..n {
                if edge(u, v) {
                    adjacency[u].push(v);
                    adjacency[v].push(u);
                }
            }
        }
        let max_degree = adjacency.iter().map(Vec::len).max().unwrap_or(0);
        NeighborGraph { adjacency, max_degree }
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn is_connected(&self) -> bool {
        if self.adjacency.is_empty() {
            return true;
        }
        let mut seen = vec![false; self.adjacency.len()];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for &v in &self.adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    pub fn is_symmetric(&self) -> bool {
        self.adjacency
            .iter()
            .enumerate()
            .all(|(u, ns)| ns.iter().all(|&v| self.adjacency[v].contains(&u)))
    }
}

/// Allocations sharing at least one basic channel with `a` (spectral
/// overlap), excluding `a` itself.
pub fn channel_neighbors(a: ChannelAllocation) -> Vec<ChannelAllocation> {
    allocations()
        .into_iter()
        .filter(|b| b.id != a.id && b.mask.intersects(a.mask))
        .collect()
}

/// Channel-overlap graph over the 7 allocations (MA channel agent).
pub fn channel_overlap_graph() -> NeighborGraph {
    let allocs = allocations();
    NeighborGraph::from_edges(7, |u, v| allocs[u].mask.intersects(allocs[v].mask))
}

/// Chain graph over `n` ordered arms: each arm connects to its adjacent
/// values (MA primary and CW agents).
pub fn linear_neighbors(n: usize) -> NeighborGraph {
    NeighborGraph::from_edges(n, |u, v| v == u + 1)
}

/// Joint-space graph: triples are neighbors iff their channel sets overlap
/// and both the primary channels and the CW ladder indices are adjacent or
/// equal. Primary adjacency uses the basic-channel numbering 1<2<3<4.
pub fn joint_neighbors(arms: &[ActionTriple]) -> NeighborGraph {
    NeighborGraph::from_edges(arms.len(), |u, v| {
        let (a, b) = (&arms[u], &arms[v]);
        let share = a.alloc.mask.intersects(b.alloc.mask);
        let primary_adj = a.primary.abs_diff(b.primary) <= 1;
        let cw_adj = cw_index(a.cw)
            .zip(cw_index(b.cw))
            .is_some_and(|(i, j)| i.abs_diff(j) <= 1);
        share && primary_adj && cw_adj
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exactly_84_joint_arms() {
        let arms = enumerate_joint();
        assert_eq!(arms.len(), 84);
    }

    #[test]
    fn joint_space_matches_brute_force_oracle() {
        // independent nested-loop enumeration over raw channel lists
        let channel_sets: [&[u8]; 7] = [
            &[1],
            &[2],
            &[3],
            &[4],
            &[1, 2],
            &[3, 4],
            &[1, 2, 3, 4],
        ];
        let mut oracle = Vec::new();
        for (i, chs) in channel_sets.iter().enumerate() {
            for &p in chs.iter() {
                for cw in CW_LADDER {
                    oracle.push((i as u8 + 1, p, cw));
                }
            }
        }
        let arms = enumerate_joint();
        assert_eq!(arms.len(), oracle.len());
        for (arm, want) in arms.iter().zip(oracle.iter()) {
            assert_eq!((arm.alloc.id, arm.primary, arm.cw), *want);
        }
        // bijection: every triple appears exactly once and round-trips
        for (i, arm) in arms.iter().enumerate() {
            assert_eq!(joint_index(&arms, arm), Some(i));
        }
    }

    #[test]
    fn per_allocation_arm_counts() {
        let arms = enumerate_joint();
        let count = |id: u8| arms.iter().filter(|a| a.alloc.id == id).count();
        assert_eq!(count(1), 7);
        assert_eq!(count(5), 14);
        assert_eq!(count(7), 28);
    }

    #[test]
    fn channel_neighbor_examples() {
        let ids = |a: ChannelAllocation| -> Vec<u8> {
            let mut v: Vec<u8> = channel_neighbors(a).iter().map(|n| n.id).collect();
            v.sort_unstable();
            v
        };
        assert_eq!(ids(allocation(1)), vec![5, 7]);
        assert_eq!(ids(allocation(5)), vec![1, 2, 7]);
        assert_eq!(ids(allocation(7)), vec![1, 2, 3, 4, 5, 6]);
    }

    #[test]
    fn chain_graph_shape() {
        let g = linear_neighbors(7);
        assert_eq!(g.neighbors(0), &[1]); // 16 -- 32
        assert_eq!(g.neighbors(2), &[1, 3]); // 64 -- {32, 128}
        assert_eq!(g.max_degree, 2);
        assert!(g.is_connected() && g.is_symmetric());
    }

    #[test]
    fn joint_graph_follows_the_sharing_rule() {
        let arms = enumerate_joint();
        let g = joint_neighbors(&arms);
        let idx = |id: u8, p: u8, cw: u32| {
            arms.iter()
                .position(|a| a.alloc.id == id && a.primary == p && a.cw == cw)
                .unwrap()
        };
        // ({1},1,16) ~ ({1,2},1,32): share channel 1, equal primary, adjacent CW
        let a = idx(1, 1, 16);
        let b = idx(5, 1, 32);
        assert!(g.neighbors(a).contains(&b));
        // ({1},1,16) !~ ({3,4},3,16): disjoint channel sets
        let c = idx(6, 3, 16);
        assert!(!g.neighbors(a).contains(&c));
        assert!(g.is_connected() && g.is_symmetric());
        // brute-force degree count matches the stored max degree
        let brute = g.adjacency.iter().map(Vec::len).max().unwrap();
        assert_eq!(g.max_degree, brute);
    }

    #[test]
    fn primary_mask_is_the_allocation() {
        assert_eq!(mask_primary(allocation(6)), vec![2, 3]); // {3,4}
        assert_eq!(mask_primary(allocation(2)), vec![1]); // forced singleton
        assert_eq!(mask_primary(allocation(7)), vec![0, 1, 2, 3]);
    }

    #[test]
    fn overlap_graph_connected_and_symmetric() {
        let g = channel_overlap_graph();
        assert!(g.is_connected() && g.is_symmetric());
        assert_eq!(g.max_degree, 6); // the 80 MHz allocation overlaps everything
    }

    #[test]
    fn labels_follow_fig3_notation() {
        let t = ActionTriple::new(allocation(7), 3, 64);
        assert_eq!(t.channel_label(), "#7_3");
        let t = ActionTriple::new(allocation(2), 2, 16);
        assert_eq!(t.channel_label(), "#2");
    }
}
