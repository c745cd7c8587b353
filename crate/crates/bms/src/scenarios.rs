//! Experiment topologies and traffic: the single-player scenario (one
//! learner among four legacy BSSs with 15 s load intervals) and the
//! multi-player scenario (three learners), plus Poisson traffic generation
//! anchored to the saturated 20 MHz reference capacity.

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use crate::engine::Micros;
use crate::mac::NodeRole;

pub const DEFAULT_DURATION_US: Micros = 60_000_000;
pub const DEFAULT_INTERVAL_US: Micros = 15_000_000;

/// Offered load for one BSS.
#[derive(Debug, Clone, PartialEq)]
pub enum Traffic {
    /// Queue kept full at all times.
    FullBuffer,
    /// Per-interval load fractions of the reference capacity; Poisson
    /// arrivals at rate load * C_ref / msdu_bits.
    VariableLoad(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BssSpec {
    pub role: NodeRole,
    /// Allocation label 1..=7; learners retune away from this immediately.
    pub alloc_id: u8,
    pub primary: u8,
    pub traffic: Traffic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub name: String,
    pub duration_us: Micros,
    pub interval_us: Micros,
    pub bss: Vec<BssSpec>,
    /// Draw the single-player load schedule for legacy BSSs each trial
    /// (one underloaded channel per interval).
    pub sp_dynamic_loads: bool,
}

impl ScenarioSpec {
    pub fn num_intervals(&self) -> usize {
        (self.duration_us as usize).div_ceil(self.interval_us as usize)
    }

    pub fn learner_indices(&self) -> Vec<usize> {
        self.bss
            .iter()
            .enumerate()
            .filter(|(_, b)| b.role == NodeRole::Learner)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Single-player preset: learning BSS1 (full buffer) plus four legacy BSSs
/// pinned to the four 20 MHz channels, with the per-interval load schedule
/// drawn per trial.
pub fn sp_preset() -> ScenarioSpec {
    let mut bss = vec![BssSpec {
        role: NodeRole::Learner,
        alloc_id: 1,
        primary: 1,
        traffic: Traffic::FullBuffer,
    }];
    for ch in 1..=4u8 {
        bss.push(BssSpec {
            role: NodeRole::Legacy,
            alloc_id: ch,
            primary: ch,
            traffic: Traffic::VariableLoad(vec![0.85; 4]),
        });
    }
    ScenarioSpec {
        name: "sp".into(),
        duration_us: DEFAULT_DURATION_US,
        interval_us: DEFAULT_INTERVAL_US,
        bss,
        sp_dynamic_loads: true,
    }
}

/// Multi-player preset: three self-interested learning BSSs, full buffer.
pub fn mp_preset() -> ScenarioSpec {
    let bss = (0..3)
        .map(|_| BssSpec {
            role: NodeRole::Learner,
            alloc_id: 1,
            primary: 1,
            traffic: Traffic::FullBuffer,
        })
        .collect();
    ScenarioSpec {
        name: "mp".into(),
        duration_us: DEFAULT_DURATION_US,
        interval_us: DEFAULT_INTERVAL_US,
        bss,
        sp_dynamic_loads: false,
    }
}

/// Per-trial single-player load schedule: in each interval one legacy BSS
/// (uniform draw) drops to Uniform[0.10, 0.20] while the rest sit at
/// Uniform[0.80, 0.90].
#[derive(Debug, Clone, PartialEq)]
pub struct LoadSchedule {
    /// loads[interval][legacy_index]
    pub loads: Vec<Vec<f64>>,
    /// The underloaded legacy's channel per interval: the interval-wise
    /// optimal channel for the learner.
    pub optimal_channels: Vec<u8>,
}

pub fn sp_load_schedule(
    num_intervals: usize,
    num_legacy: usize,
    rng: &mut ChaCha12Rng,
) -> LoadSchedule {
    let mut loads = Vec::with_capacity(num_intervals);
    let mut optimal_channels = Vec::with_capacity(num_intervals);
    for _ in 0..num_intervals {
        let under = rng.random_range(0..num_legacy);
        let row: Vec<f64> = (0..num_legacy)
            .map(|j| {
                if j == under {
                    rng.random_range(0.10..0.20)
                } else {
                    rng.random_range(0.80..0.90)
                }
            })
            .collect();
        loads.push(row);
        optimal_channels.push(under as u8 + 1);
    }
    LoadSchedule {
        loads,
        optimal_channels,
    }
}

/// Poisson arrival rate in packets/µs for a load fraction of the reference
/// capacity `c_ref` (bits/µs) at a given MSDU size.
pub fn arrival_rate(load: f64, c_ref: f64, msdu_bytes: u64) -> f64 {
    load * c_ref / (msdu_bytes as f64 * 8.0)
}

/// Exponential inter-arrival draw in µs (zero rate means no arrivals).
pub fn next_interarrival_us(rate: f64, rng: &mut ChaCha12Rng) -> Option<Micros> {
    if rate <= 0.0 {
        return None;
    }
    let u: f64 = rng.random();
    let dt = -(1.0 - u).ln() / rate;
    Some(dt.round() as Micros)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::stream_rng;

    #[test]
    fn presets_have_the_published_shape() {
        let sp = sp_preset();
        assert_eq!(sp.bss.len(), 5);
        assert_eq!(sp.bss[0].role, NodeRole::Learner);
        assert!(sp.bss[1..].iter().all(|b| b.role == NodeRole::Legacy));
        // legacy BSS k pinned to channel k
        let chans: Vec<u8> = sp.bss[1..].iter().map(|b| b.primary).collect();
        assert_eq!(chans, vec![1, 2, 3, 4]);
        assert_eq!(sp.num_intervals(), 4);

        let mp = mp_preset();
        assert_eq!(mp.bss.len(), 3);
        assert_eq!(mp.learner_indices(), vec![0, 1, 2]);
    }

    #[test]
    fn schedule_loads_stay_in_their_bands() {
        let mut rng = stream_rng(123, "traffic/schedule");
        let s = sp_load_schedule(4, 4, &mut rng);
        assert_eq!(s.loads.len(), 4);
        for (row, &opt) in s.loads.iter().zip(&s.optimal_channels) {
            for (j, &load) in row.iter().enumerate() {
                if j as u8 + 1 == opt {
                    assert!((0.10..0.20).contains(&load));
                } else {
                    assert!((0.80..0.90).contains(&load));
                }
            }
        }
    }

    #[test]
    fn schedule_is_reproducible_per_seed() {
        let mut a = stream_rng(7, "traffic/schedule");
        let mut b = stream_rng(7, "traffic/schedule");
        assert_eq!(sp_load_schedule(4, 4, &mut a), sp_load_schedule(4, 4, &mut b));
    }

    #[test]
    fn arrival_rate_scales_linearly() {
        let c_ref = 217.0; // bits/us
        let r = arrival_rate(0.85, c_ref, 1_500);
        assert!((r - 0.85 * 217.0 / 12_000.0).abs() < 1e-12);
        assert_eq!(arrival_rate(0.0, c_ref, 1_500), 0.0);
    }

    #[test]
    fn zero_rate_generates_no_arrivals() {
        let mut rng = stream_rng(1, "traffic/1");
        assert_eq!(next_interarrival_us(0.0, &mut rng), None);
        assert!(next_interarrival_us(0.01, &mut rng).is_some());
    }
}
