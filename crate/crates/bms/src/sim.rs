//! The per-trial simulation: event dispatch, node state machines (legacy DCF
//! and the learning transmission cycle), and metric accumulation.
//!
//! A trial is single-threaded and fully determined by its configuration and
//! seed. All nodes sense all channels; backoff counters pause on a busy
//! primary and resume after it has been idle for a DIFS.

use std::collections::VecDeque;

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use crate::actions::{allocation, ChannelAllocation};
use crate::bandits::AlgorithmKind;
use crate::engine::{stream_rng, EventHandle, EventQueue, Micros};
use crate::harness::{compute_reward, AgentBinding, Architecture, ContextSnapshot, Decision, Tuning};
use crate::mac::{
    bonding_decision, exchange_timeline, legacy_cw_after, Bonding, CycleCause, MacParams, NodeRole,
    Packet,
};
use crate::medium::{ChannelMask, Medium, PhyProfile};
use crate::metrics::{BssStats, RoundRow, TrialRecord};
use crate::scenarios::{arrival_rate, next_interarrival_us, sp_load_schedule, ScenarioSpec, Traffic};

/// Everything needed to run one trial.
#[derive(Clone)]
pub struct TrialParams {
    pub scenario: ScenarioSpec,
    pub bonding: Bonding,
    pub algorithm: AlgorithmKind,
    pub architecture: Architecture,
    pub tuning: Tuning,
    pub profile: PhyProfile,
    pub mac: MacParams,
    pub seed: u64,
    pub trial: usize,
    pub log_contexts: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EventKind {
    Arrival { node: usize },
    IntervalSwitch,
    DifsDone { node: usize },
    BackoffExpiry { node: usize },
    FrameBegin { channels: ChannelMask },
    FrameEnd { channels: ChannelMask },
    ExchangeDone { node: usize },
    CycleTimeout { node: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Idle,
    Contending,
    Transmitting,
}

struct CycleState {
    start: Micros,
    decision: Decision,
}

struct Exchange {
    mpdu_count: usize,
}

struct Node {
    role: NodeRole,
    alloc: ChannelAllocation,
    primary: u8,
    cw: u32,
    queue: VecDeque<Packet>,
    full_buffer: bool,
    /// Per-interval load fractions (legacy traffic).
    loads: Vec<f64>,
    rate: f64,
    phase: Phase,
    /// Backoff slots still to count down.
    remaining: u32,
    /// Whether the current contention attempt has drawn its counter yet.
    drawn: bool,
    count_started: Micros,
    difs: Option<EventHandle>,
    expiry: Option<EventHandle>,
    timeout: Option<EventHandle>,
    arrival: Option<EventHandle>,
    binding: Option<AgentBinding>,
    cycle: Option<CycleState>,
    exchange: Option<Exchange>,
}

/// One trial's world. Build with [`Simulation::new`], optionally swap in a
/// custom agent binding, then [`Simulation::run`].
pub struct Simulation {
    params: TrialParams,
    queue: EventQueue<EventKind>,
    medium: Medium,
    nodes: Vec<Node>,
    backoff_rngs: Vec<ChaCha12Rng>,
    per_rngs: Vec<ChaCha12Rng>,
    traffic_rngs: Vec<ChaCha12Rng>,
    c_ref: f64,
    rounds: Vec<RoundRow>,
    stats: Vec<BssStats>,
    optimal_channels: Vec<u8>,
}

impl Simulation {
    pub fn new(params: TrialParams) -> Self {
        let scenario = &params.scenario;
        let num_intervals = scenario.num_intervals();
        let duration_s = (scenario.duration_us as usize).div_ceil(1_000_000);
        let c_ref = crate::mac::reference_capacity(&params.profile, &params.mac);

        // single-player load schedule, drawn from the trial-level stream so
        // it is identical across algorithm runs at the same seed
        let legacy_ids: Vec<usize> = scenario
            .bss
            .iter()
            .enumerate()
            .filter(|(_, b)| b.role == NodeRole::Legacy)
            .map(|(i, _)| i)
            .collect();
        let mut schedule = None;
        let mut optimal_channels = Vec::new();
        if scenario.sp_dynamic_loads && !legacy_ids.is_empty() {
            let mut rng = stream_rng(params.seed, "traffic/schedule");
            let s = sp_load_schedule(num_intervals, legacy_ids.len(), &mut rng);
            optimal_channels = s
                .optimal_channels
                .iter()
                .map(|&j| scenario.bss[legacy_ids[(j - 1) as usize]].primary)
                .collect();
            schedule = Some(s);
        }

        let mut nodes = Vec::with_capacity(scenario.bss.len());
        let mut backoff_rngs = Vec::new();
        let mut per_rngs = Vec::new();
        let mut traffic_rngs = Vec::new();
        let mut stats = Vec::new();
        for (i, spec) in scenario.bss.iter().enumerate() {
            let label = format!("bss{}", i + 1);
            backoff_rngs.push(stream_rng(params.seed, &format!("backoff/{label}")));
            per_rngs.push(stream_rng(params.seed, &format!("per/{label}")));
            traffic_rngs.push(stream_rng(params.seed, &format!("traffic/{label}")));
            stats.push(BssStats::new(spec.role, num_intervals, duration_s));

            let full_buffer = matches!(spec.traffic, Traffic::FullBuffer);
            let mut loads = match &spec.traffic {
                Traffic::FullBuffer => Vec::new(),
                Traffic::VariableLoad(l) => l.clone(),
            };
            if let (Some(s), Some(pos)) = (
                schedule.as_ref(),
                legacy_ids.iter().position(|&id| id == i),
            ) {
                loads = s.loads.iter().map(|row| row[pos]).collect();
            }
            let mut queue = VecDeque::new();
            if full_buffer {
                queue.extend((0..params.mac.queue_capacity).map(|_| Packet {
                    arrival_us: 0,
                    size_bytes: params.mac.msdu_bytes,
                    retries: 0,
                }));
            }
            let binding = (spec.role == NodeRole::Learner).then(|| {
                AgentBinding::new(
                    params.algorithm,
                    params.architecture,
                    &params.tuning,
                    params.seed,
                    &label,
                )
            });
            nodes.push(Node {
                role: spec.role,
                alloc: allocation(spec.alloc_id),
                primary: spec.primary,
                cw: params.mac.cw_min,
                queue,
                full_buffer,
                loads,
                rate: 0.0,
                phase: Phase::Idle,
                remaining: 0,
                drawn: false,
                count_started: 0,
                difs: None,
                expiry: None,
                timeout: None,
                arrival: None,
                binding,
                cycle: None,
                exchange: None,
            });
        }

        Simulation {
            params,
            queue: EventQueue::new(),
            medium: Medium::new(),
            nodes,
            backoff_rngs,
            per_rngs,
            traffic_rngs,
            c_ref,
            rounds: Vec::new(),
            stats,
            optimal_channels,
        }
    }

    /// Replaces a learner's agent stack (e.g. with a pinned policy for
    /// calibration runs).
    pub fn set_binding(&mut self, node: usize, binding: AgentBinding) {
        self.nodes[node].binding = Some(binding);
    }

    pub fn reference_capacity(&self) -> f64 {
        self.c_ref
    }

    fn interval_of(&self, t: Micros) -> usize {
        let k = (t / self.params.scenario.interval_us) as usize;
        k.min(self.params.scenario.num_intervals() - 1)
    }

    fn load_at(&self, node: usize, interval: usize) -> f64 {
        let loads = &self.nodes[node].loads;
        if loads.is_empty() {
            0.0
        } else {
            loads[interval.min(loads.len() - 1)]
        }
    }

    /// Runs the trial to its configured duration and returns the record.
    pub fn run(mut self) -> TrialRecord {
        let duration = self.params.scenario.duration_us;
        let interval = self.params.scenario.interval_us;
        for k in 1..self.params.scenario.num_intervals() {
            self.queue
                .schedule(k as Micros * interval, EventKind::IntervalSwitch)
                .expect("future event");
        }
        for i in 0..self.nodes.len() {
            match self.nodes[i].role {
                NodeRole::Learner if self.nodes[i].full_buffer => self.start_cycle(i),
                NodeRole::Learner => self.schedule_next_arrival(i),
                NodeRole::Legacy => {
                    let rate = arrival_rate(self.load_at(i, 0), self.c_ref, self.params.mac.msdu_bytes);
                    self.nodes[i].rate = rate;
                    self.schedule_next_arrival(i);
                }
            }
        }
        while let Some((_, event)) = self.queue.pop_next(duration) {
            self.dispatch(event);
        }
        self.queue.advance_to(duration);
        TrialRecord {
            trial: self.params.trial,
            seed: self.params.seed,
            duration_us: duration,
            interval_us: interval,
            bonding: self.params.bonding,
            rounds: self.rounds,
            bss: self.stats,
            optimal_channels: self.optimal_channels,
        }
    }

    fn dispatch(&mut self, event: EventKind) {
        match event {
            EventKind::Arrival { node } => self.on_arrival(node),
            EventKind::IntervalSwitch => self.on_interval_switch(),
            EventKind::DifsDone { node } => self.on_difs_done(node),
            EventKind::BackoffExpiry { node } => self.on_backoff_expiry(node),
            EventKind::FrameBegin { channels } => {
                let now = self.queue.now();
                let transitions = self.medium.frame_begin(channels, now);
                for c in transitions.channels() {
                    self.on_channel_busy(c);
                }
            }
            EventKind::FrameEnd { channels } => {
                let now = self.queue.now();
                let transitions = self.medium.frame_end(channels, now);
                for c in transitions.channels() {
                    self.on_channel_idle(c);
                }
            }
            EventKind::ExchangeDone { node } => self.on_exchange_done(node),
            EventKind::CycleTimeout { node } => self.on_cycle_timeout(node),
        }
    }

    // ---- traffic ----------------------------------------------------------

    fn schedule_next_arrival(&mut self, i: usize) {
        let rate = self.nodes[i].rate;
        if self.nodes[i].role == NodeRole::Legacy || !self.nodes[i].full_buffer {
            if let Some(dt) = next_interarrival_us(rate, &mut self.traffic_rngs[i]) {
                let at = self.queue.now() + dt;
                let h = self
                    .queue
                    .schedule(at, EventKind::Arrival { node: i })
                    .expect("future event");
                self.nodes[i].arrival = Some(h);
            } else {
                self.nodes[i].arrival = None;
            }
        }
    }

    fn on_arrival(&mut self, i: usize) {
        let now = self.queue.now();
        self.nodes[i].arrival = None;
        if self.nodes[i].queue.len() < self.params.mac.queue_capacity {
            let size = self.params.mac.msdu_bytes;
            self.nodes[i].queue.push_back(Packet {
                arrival_us: now,
                size_bytes: size,
                retries: 0,
            });
        } else {
            self.stats[i].overflow_drops += 1;
        }
        if self.nodes[i].phase == Phase::Idle && !self.nodes[i].queue.is_empty() {
            match self.nodes[i].role {
                NodeRole::Legacy => self.start_contention(i),
                NodeRole::Learner => self.start_cycle(i),
            }
        }
        self.schedule_next_arrival(i);
    }

    fn on_interval_switch(&mut self) {
        let now = self.queue.now();
        let interval = self.interval_of(now);
        for i in 0..self.nodes.len() {
            if self.nodes[i].role != NodeRole::Legacy {
                continue;
            }
            let rate = arrival_rate(
                self.load_at(i, interval),
                self.c_ref,
                self.params.mac.msdu_bytes,
            );
            self.nodes[i].rate = rate;
            // redraw the pending inter-arrival gap under the new rate
            if let Some(h) = self.nodes[i].arrival.take() {
                self.queue.cancel(h);
            }
            self.schedule_next_arrival(i);
        }
    }

    // ---- contention -------------------------------------------------------

    /// Begins a contention attempt: wait for the primary to be idle a DIFS,
    /// then draw (or resume) the backoff counter.
    fn start_contention(&mut self, i: usize) {
        let now = self.queue.now();
        self.nodes[i].phase = Phase::Contending;
        self.nodes[i].drawn = false;
        self.nodes[i].remaining = 0;
        if !self.medium.busy(self.nodes[i].primary) {
            let h = self
                .queue
                .schedule(now + self.params.profile.difs_us, EventKind::DifsDone { node: i })
                .expect("future event");
            self.nodes[i].difs = Some(h);
        }
        // if busy, the idle transition will schedule the DIFS wait
    }

    fn on_difs_done(&mut self, i: usize) {
        let now = self.queue.now();
        self.nodes[i].difs = None;
        debug_assert_eq!(self.nodes[i].phase, Phase::Contending);
        if !self.nodes[i].drawn {
            let cw = self.nodes[i].cw;
            self.nodes[i].remaining = self.backoff_rngs[i].random_range(0..cw);
            self.nodes[i].drawn = true;
        }
        if self.nodes[i].remaining == 0 {
            self.grant(i);
        } else {
            self.nodes[i].count_started = now;
            let at = now + self.nodes[i].remaining as Micros * self.params.profile.slot_us;
            let h = self
                .queue
                .schedule(at, EventKind::BackoffExpiry { node: i })
                .expect("future event");
            self.nodes[i].expiry = Some(h);
        }
    }

    fn on_channel_busy(&mut self, c: u8) {
        let now = self.queue.now();
        let slot = self.params.profile.slot_us;
        for i in 0..self.nodes.len() {
            if self.nodes[i].phase != Phase::Contending || self.nodes[i].primary != c {
                continue;
            }
            if let Some(h) = self.nodes[i].difs.take() {
                self.queue.cancel(h);
            }
            if let Some(h) = self.nodes[i].expiry.take() {
                self.queue.cancel(h);
                let completed = ((now - self.nodes[i].count_started) / slot) as u32;
                self.nodes[i].remaining -= completed.min(self.nodes[i].remaining);
            }
        }
    }

    fn on_channel_idle(&mut self, c: u8) {
        let now = self.queue.now();
        for i in 0..self.nodes.len() {
            let node = &self.nodes[i];
            if node.phase != Phase::Contending
                || node.primary != c
                || node.difs.is_some()
                || node.expiry.is_some()
            {
                continue;
            }
            let h = self
                .queue
                .schedule(now + self.params.profile.difs_us, EventKind::DifsDone { node: i })
                .expect("future event");
            self.nodes[i].difs = Some(h);
        }
    }

    fn on_backoff_expiry(&mut self, i: usize) {
        self.nodes[i].expiry = None;
        self.nodes[i].remaining = 0;
        debug_assert!(
            !self.medium.busy(self.nodes[i].primary),
            "a busy transition should have canceled this expiry"
        );
        self.grant(i);
    }

    /// TXOP granted on the primary: assess secondaries over PIFS and either
    /// transmit (SCB full set / DCB widest idle subset) or defer.
    fn grant(&mut self, i: usize) {
        let now = self.queue.now();
        let idle = self.medium.idle_set(self.params.profile.pifs_us, now);
        let node = &self.nodes[i];
        match bonding_decision(self.params.bonding, node.alloc, node.primary, idle) {
            Some(txset) => self.transmit(i, txset),
            None => {
                // SCB deferral: re-draw at the same CW and re-contend;
                // the learner's cycle timeout keeps running
                self.nodes[i].drawn = false;
                let h = self
                    .queue
                    .schedule(now + self.params.profile.difs_us, EventKind::DifsDone { node: i })
                    .expect("future event");
                self.nodes[i].difs = Some(h);
            }
        }
    }

    // ---- the frame exchange ------------------------------------------------

    fn transmit(&mut self, i: usize, txset: ChannelMask) {
        let now = self.queue.now();
        if let Some(h) = self.nodes[i].timeout.take() {
            self.queue.cancel(h);
        }
        self.nodes[i].phase = Phase::Transmitting;
        let mpdu_count = self
            .params
            .mac
            .ampdu_capacity()
            .min(self.nodes[i].queue.len());
        debug_assert!(mpdu_count > 0, "transmission requires queued data");
        let payload_bits: u64 = self.nodes[i]
            .queue
            .iter()
            .take(mpdu_count)
            .map(|p| p.size_bytes * 8)
            .sum();
        let width = 20 * txset.count() as u16;
        let timeline = exchange_timeline(&self.params.profile, width, payload_bits)
            .expect("width is one of 20/40/80");
        for (_, start, dur) in timeline.frames() {
            if dur == 0 {
                continue;
            }
            self.queue
                .schedule(now + start, EventKind::FrameBegin { channels: txset })
                .expect("future event");
            self.queue
                .schedule(now + start + dur, EventKind::FrameEnd { channels: txset })
                .expect("future event");
        }
        // scheduled after the block-ACK FrameEnd so it is dispatched after
        // the channels have gone idle
        self.queue
            .schedule(now + timeline.end, EventKind::ExchangeDone { node: i })
            .expect("future event");
        self.nodes[i].exchange = Some(Exchange { mpdu_count });
    }

    fn on_exchange_done(&mut self, i: usize) {
        let now = self.queue.now();
        let exchange = self.nodes[i].exchange.take().expect("exchange in flight");
        let interval = self.interval_of(now);
        let second = ((now / 1_000_000) as usize).min(self.stats[i].timeline_bits.len() - 1);

        let mut kept = Vec::new();
        let mut any_success = false;
        for _ in 0..exchange.mpdu_count {
            let pkt = self.nodes[i].queue.pop_front().expect("in-flight packet");
            let failed = self.per_rngs[i].random::<f64>() < self.params.mac.per;
            if failed {
                if pkt.retries == self.params.mac.retry_limit {
                    self.stats[i].retry_drops += 1;
                } else {
                    kept.push(Packet {
                        retries: pkt.retries + 1,
                        ..pkt
                    });
                }
            } else {
                any_success = true;
                self.stats[i].delivered_bits[interval] += pkt.size_bytes * 8;
                self.stats[i].delivered_packets[interval] += 1;
                self.stats[i].delay_sum_ms[interval] += (now - pkt.arrival_us) as f64 / 1_000.0;
                self.stats[i].timeline_bits[second] += pkt.size_bytes * 8;
            }
        }
        for pkt in kept.into_iter().rev() {
            self.nodes[i].queue.push_front(pkt);
        }
        if self.nodes[i].full_buffer {
            let deficit = self.params.mac.queue_capacity - self.nodes[i].queue.len();
            let size = self.params.mac.msdu_bytes;
            self.nodes[i].queue.extend((0..deficit).map(|_| Packet {
                arrival_us: now,
                size_bytes: size,
                retries: 0,
            }));
        }

        match self.nodes[i].role {
            NodeRole::Legacy => {
                self.nodes[i].cw = legacy_cw_after(self.nodes[i].cw, any_success, &self.params.mac);
                if self.nodes[i].queue.is_empty() {
                    self.nodes[i].phase = Phase::Idle;
                } else {
                    self.start_contention(i);
                }
            }
            NodeRole::Learner => self.finish_cycle(i, CycleCause::Acked),
        }
    }

    // ---- the learning cycle -------------------------------------------------

    fn start_cycle(&mut self, i: usize) {
        let now = self.queue.now();
        debug_assert!(!self.nodes[i].queue.is_empty());
        let snapshot = ContextSnapshot {
            occupancy: self.medium.occupancy(now),
            busy: self.medium.busy_flags(),
            queue_util: (self.nodes[i].queue.len() as f64
                / self.params.mac.queue_capacity as f64)
                .min(1.0),
        };
        let decision = self.nodes[i]
            .binding
            .as_mut()
            .expect("learner has a binding")
            .decide(&snapshot)
            .expect("selection over a non-empty arm set");
        self.nodes[i].alloc = decision.triple.alloc;
        self.nodes[i].primary = decision.triple.primary;
        self.nodes[i].cw = decision.triple.cw;
        self.nodes[i].cycle = Some(CycleState { start: now, decision });
        let h = self
            .queue
            .schedule(now + self.params.mac.d_max_us, EventKind::CycleTimeout { node: i })
            .expect("future event");
        self.nodes[i].timeout = Some(h);
        self.start_contention(i);
    }

    fn on_cycle_timeout(&mut self, i: usize) {
        self.nodes[i].timeout = None;
        debug_assert_eq!(self.nodes[i].phase, Phase::Contending);
        if let Some(h) = self.nodes[i].difs.take() {
            self.queue.cancel(h);
        }
        if let Some(h) = self.nodes[i].expiry.take() {
            self.queue.cancel(h);
        }
        self.finish_cycle(i, CycleCause::Timeout);
    }

    fn finish_cycle(&mut self, i: usize, cause: CycleCause) {
        let now = self.queue.now();
        if let Some(h) = self.nodes[i].timeout.take() {
            self.queue.cancel(h);
        }
        let cycle = self.nodes[i].cycle.take().expect("cycle in progress");
        let d_cap_ms = self.params.mac.d_max_us as f64 / 1_000.0;
        let d_ms = ((now - cycle.start) as f64 / 1_000.0).min(d_cap_ms);
        let reward = compute_reward(d_ms);
        let interval = self.interval_of(cycle.start);
        self.stats[i].cycles[interval] += 1;

        let binding = self.nodes[i].binding.as_mut().expect("learner has a binding");
        binding
            .learn(&cycle.decision, reward)
            .expect("clipped reward is in range");
        let contexts = if self.params.log_contexts {
            stage_contexts(&cycle.decision, self.params.architecture)
        } else {
            Vec::new()
        };
        self.rounds.push(RoundRow {
            time_us: cycle.start,
            bss: i + 1,
            triple: cycle.decision.triple,
            d_ms,
            reward,
            cause,
            contexts,
        });

        if self.nodes[i].queue.is_empty() {
            self.nodes[i].phase = Phase::Idle;
        } else {
            self.start_cycle(i);
        }
    }
}

fn stage_contexts(
    decision: &Decision,
    arch: Architecture,
) -> Vec<(crate::harness::Stage, Vec<f64>)> {
    use crate::harness::Stage;
    let stages: &[Stage] = match arch {
        Architecture::Sa => &[Stage::Sa],
        Architecture::Ma => &[Stage::Channel, Stage::Primary, Stage::Cw],
    };
    stages
        .iter()
        .zip(&decision.contexts)
        .map(|(&s, x)| (s, x.clone()))
        .collect()
}

/// Builds and runs one trial.
pub fn run_trial(params: TrialParams) -> TrialRecord {
    Simulation::new(params).run()
}
