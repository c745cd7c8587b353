//! Per-node channel-access rules: DCF parameters, SCB/DCB bonding decisions,
//! A-MPDU exchange timing, and the legacy binary-exponential-backoff ladder.
//!
//! Learning nodes never apply BEB (their CW is chosen by the agent each
//! cycle) and abort a cycle that cannot obtain a TXOP within 10 ms. Legacy
//! nodes run the standard doubling/reset ladder with no cycle cap.

use crate::actions::{allocations, ChannelAllocation};
use crate::engine::Micros;
use crate::medium::{ChannelMask, FrameKind, MediumError, PhyProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeRole {
    Legacy,
    Learner,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bonding {
    Scb,
    Dcb,
}

impl Bonding {
    pub fn name(self) -> &'static str {
        match self {
            Bonding::Scb => "scb",
            Bonding::Dcb => "dcb",
        }
    }
}

impl std::str::FromStr for Bonding {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "scb" => Ok(Bonding::Scb),
            "dcb" => Ok(Bonding::Dcb),
            other => Err(format!("unknown bonding mode '{other}' (expected scb|dcb)")),
        }
    }
}

/// How a transmission cycle ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CycleCause {
    Acked,
    Timeout,
}

impl CycleCause {
    pub fn name(self) -> &'static str {
        match self {
            CycleCause::Acked => "acked",
            CycleCause::Timeout => "timeout",
        }
    }
}

/// MAC-level parameters shared by all nodes of a trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacParams {
    pub queue_capacity: usize,
    pub retry_limit: u32,
    pub ampdu_max_bytes: u64,
    pub msdu_bytes: u64,
    /// Per-MPDU error probability, applied independently inside an A-MPDU;
    /// control frames are error-free.
    pub per: f64,
    pub cw_min: u32,
    pub cw_max: u32,
    /// Learner cycle cap (D_max).
    pub d_max_us: Micros,
}

impl Default for MacParams {
    fn default() -> Self {
        MacParams {
            queue_capacity: 500,
            retry_limit: 7,
            ampdu_max_bytes: 65_535,
            msdu_bytes: 1_500,
            per: 0.1,
            cw_min: 16,
            cw_max: 1_024,
            d_max_us: 10_000,
        }
    }
}

impl MacParams {
    /// MPDUs that fit in one A-MPDU.
    pub fn ampdu_capacity(&self) -> usize {
        ((self.ampdu_max_bytes / self.msdu_bytes) as usize).max(1)
    }
}

/// One queued MSDU.
#[derive(Debug, Clone, Copy)]
pub struct Packet {
    pub arrival_us: Micros,
    pub size_bytes: u64,
    pub retries: u32,
}

/// Legacy BEB: double on a failed exchange (capped), reset on success.
pub fn legacy_cw_after(cw: u32, success: bool, params: &MacParams) -> u32 {
    if success {
        params.cw_min
    } else {
        (cw * 2).min(params.cw_max)
    }
}

/// Picks the transmit set once the backoff completes, from the channels idle
/// over the PIFS assessment.
///
/// SCB transmits on the full allocation or defers; DCB transmits on the
/// widest valid allocation containing the primary whose channels are all
/// idle (valid sets are the 7 allocations restricted to subsets of the
/// configured one). Returns `None` to defer.
pub fn bonding_decision(
    mode: Bonding,
    alloc: ChannelAllocation,
    primary: u8,
    idle: ChannelMask,
) -> Option<ChannelMask> {
    debug_assert!(alloc.mask.contains(primary));
    match mode {
        Bonding::Scb => alloc.mask.is_subset_of(idle).then_some(alloc.mask),
        Bonding::Dcb => allocations()
            .into_iter()
            .filter(|a| {
                a.mask.is_subset_of(alloc.mask)
                    && a.mask.contains(primary)
                    && a.mask.is_subset_of(idle)
            })
            .max_by_key(|a| a.mask.count())
            .map(|a| a.mask),
    }
}

/// Relative timing of one RTS/CTS-protected A-MPDU exchange. Offsets are
/// from the TXOP grant instant; every frame occupies the whole transmit set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExchangeTimeline {
    pub rts: (Micros, Micros),
    pub cts: (Micros, Micros),
    pub data: (Micros, Micros),
    pub back: (Micros, Micros),
    /// Block-ACK end: the cycle-closing instant.
    pub end: Micros,
}

impl ExchangeTimeline {
    pub fn frames(&self) -> [(FrameKind, Micros, Micros); 4] {
        [
            (FrameKind::Rts, self.rts.0, self.rts.1),
            (FrameKind::Cts, self.cts.0, self.cts.1),
            (FrameKind::Data, self.data.0, self.data.1),
            (FrameKind::BlockAck, self.back.0, self.back.1),
        ]
    }
}

/// RTS -- SIFS -- CTS -- SIFS -- A-MPDU -- SIFS -- blockACK.
pub fn exchange_timeline(
    profile: &PhyProfile,
    width_mhz: u16,
    payload_bits: u64,
) -> Result<ExchangeTimeline, MediumError> {
    let data_dur = profile.frame_duration(FrameKind::Data, payload_bits, width_mhz)?;
    let rts = (0, profile.rts_us);
    let cts = (rts.0 + rts.1 + profile.sifs_us, profile.cts_us);
    let data = (cts.0 + cts.1 + profile.sifs_us, data_dur);
    let back = (data.0 + data.1 + profile.sifs_us, profile.back_us);
    Ok(ExchangeTimeline {
        rts,
        cts,
        data,
        back,
        end: back.0 + back.1,
    })
}

/// Closed-form mean cycle duration of a saturated node alone on a channel:
/// DIFS + E[backoff] slots + the full-aggregate frame exchange.
pub fn saturated_cycle_us(
    profile: &PhyProfile,
    params: &MacParams,
    cw: u32,
    width_mhz: u16,
) -> Result<f64, MediumError> {
    let payload_bits = params.ampdu_capacity() as u64 * params.msdu_bytes * 8;
    let exchange = exchange_timeline(profile, width_mhz, payload_bits)?;
    let mean_backoff = (cw as f64 - 1.0) / 2.0 * profile.slot_us as f64;
    Ok(profile.difs_us as f64 + mean_backoff + exchange.end as f64)
}

/// Saturated single-BSS 20 MHz goodput in bits/µs: the reference capacity
/// that anchors legacy load fractions.
pub fn reference_capacity(profile: &PhyProfile, params: &MacParams) -> f64 {
    let delivered_bits =
        params.ampdu_capacity() as f64 * params.msdu_bytes as f64 * 8.0 * (1.0 - params.per);
    let cycle = saturated_cycle_us(profile, params, params.cw_min, 20)
        .expect("20 MHz rate is always configured");
    delivered_bits / cycle
}
