//! The shared radio medium: four 20 MHz basic channels, frame occupancy,
//! PHY timings and rates, and the 100 ms sliding-window occupancy statistics
//! that feed agent contexts.
//!
//! Carrier sensing is ideal and universal: every node senses every frame.
//! Overlapping frames are allowed; a collision shows up as overlapping busy
//! time, never as frame capture.

use thiserror::Error;

use crate::engine::Micros;

/// Number of 20 MHz basic channels, numbered 1..=4.
pub const NUM_CHANNELS: usize = 4;

/// Sliding-window length for occupancy ratios.
pub const OCCUPANCY_WINDOW_US: Micros = 100_000;

#[derive(Debug, Error, PartialEq)]
pub enum MediumError {
    #[error("unknown channel width {0} MHz (expected 20, 40 or 80)")]
    UnknownWidth(u16),
}

/// Set of basic channels as a 4-bit mask (bit 0 = channel 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ChannelMask(u8);

impl ChannelMask {
    pub const fn empty() -> Self {
        ChannelMask(0)
    }

    /// Builds a mask from channel numbers in 1..=4.
    pub fn from_channels(channels: &[u8]) -> Self {
        let mut bits = 0u8;
        for &c in channels {
            assert!((1..=NUM_CHANNELS as u8).contains(&c), "channel out of range");
            bits |= 1 << (c - 1);
        }
        ChannelMask(bits)
    }

    pub fn single(channel: u8) -> Self {
        Self::from_channels(&[channel])
    }

    pub fn contains(self, channel: u8) -> bool {
        channel >= 1 && channel <= NUM_CHANNELS as u8 && self.0 & (1 << (channel - 1)) != 0
    }

    pub fn intersects(self, other: ChannelMask) -> bool {
        self.0 & other.0 != 0
    }

    pub fn is_subset_of(self, other: ChannelMask) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn count(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Channel numbers in ascending order.
    pub fn channels(self) -> impl Iterator<Item = u8> {
        let bits = self.0;
        (1..=NUM_CHANNELS as u8).filter(move |c| bits & (1 << (c - 1)) != 0)
    }
}

impl std::fmt::Display for ChannelMask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{")?;
        for (i, c) in self.channels().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "}}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameKind {
    Rts,
    Cts,
    Data,
    BlockAck,
}

/// One frame on the air: a channel set occupied for `[start, start+duration)`.
#[derive(Debug, Clone, Copy)]
pub struct FrameTx {
    pub channels: ChannelMask,
    pub start: Micros,
    pub duration: Micros,
    pub source: usize,
    pub kind: FrameKind,
}

/// PHY/MAC timing and rate profile. Defaults follow 5 GHz OFDM timings with
/// 802.11ax MCS 11, 2 spatial streams, 0.8 µs GI rates; everything is a
/// config key.
#[derive(Debug, Clone, PartialEq)]
pub struct PhyProfile {
    pub slot_us: Micros,
    pub sifs_us: Micros,
    pub difs_us: Micros,
    pub pifs_us: Micros,
    pub rts_us: Micros,
    pub cts_us: Micros,
    pub back_us: Micros,
    pub preamble_us: Micros,
    /// Data rates in bits/µs (numerically equal to Mbps) for 20/40/80 MHz.
    pub rate_20: f64,
    pub rate_40: f64,
    pub rate_80: f64,
}

impl Default for PhyProfile {
    fn default() -> Self {
        let slot = 9;
        let sifs = 16;
        PhyProfile {
            slot_us: slot,
            sifs_us: sifs,
            difs_us: sifs + 2 * slot,
            pifs_us: sifs + slot,
            rts_us: 52,
            cts_us: 44,
            back_us: 50,
            preamble_us: 40,
            rate_20: 286.8,
            rate_40: 573.5,
            rate_80: 1201.0,
        }
    }
}

impl PhyProfile {
    pub fn data_rate(&self, width_mhz: u16) -> Result<f64, MediumError> {
        match width_mhz {
            20 => Ok(self.rate_20),
            40 => Ok(self.rate_40),
            80 => Ok(self.rate_80),
            w => Err(MediumError::UnknownWidth(w)),
        }
    }

    /// Airtime of a frame in µs. Control frames have fixed durations; data
    /// frames take `preamble + ceil(payload_bits / rate(width))`.
    pub fn frame_duration(
        &self,
        kind: FrameKind,
        payload_bits: u64,
        width_mhz: u16,
    ) -> Result<Micros, MediumError> {
        match kind {
            FrameKind::Rts => Ok(self.rts_us),
            FrameKind::Cts => Ok(self.cts_us),
            FrameKind::BlockAck => Ok(self.back_us),
            FrameKind::Data => {
                let rate = self.data_rate(width_mhz)?;
                let tx = (payload_bits as f64 / rate).ceil() as Micros;
                Ok(self.preamble_us + tx)
            }
        }
    }
}

#[derive(Debug, Clone, Default)]
struct Channel {
    /// Number of frames currently on the air covering this channel.
    active: u32,
    busy_since: Micros,
    last_busy_end: Micros,
    ever_busy: bool,
    /// Completed busy intervals inside the trailing occupancy window.
    intervals: std::collections::VecDeque<(Micros, Micros)>,
}

/// Tracks busy state and sliding-window occupancy per basic channel.
#[derive(Debug, Clone)]
pub struct Medium {
    channels: [Channel; NUM_CHANNELS],
    window_us: Micros,
}

impl Default for Medium {
    fn default() -> Self {
        Self::new()
    }
}

impl Medium {
    pub fn new() -> Self {
        Medium {
            channels: Default::default(),
            window_us: OCCUPANCY_WINDOW_US,
        }
    }

    fn ch(&self, channel: u8) -> &Channel {
        &self.channels[(channel - 1) as usize]
    }

    /// A frame covering `mask` starts now. Returns the channels that went
    /// from idle to busy (listeners pause their backoff on those).
    pub fn frame_begin(&mut self, mask: ChannelMask, now: Micros) -> ChannelMask {
        let mut transitions = Vec::new();
        for c in mask.channels() {
            let ch = &mut self.channels[(c - 1) as usize];
            ch.active += 1;
            if ch.active == 1 {
                ch.busy_since = now;
                transitions.push(c);
            }
        }
        ChannelMask::from_channels(&transitions)
    }

    /// A frame covering `mask` ends now. Returns the channels that went from
    /// busy back to idle.
    pub fn frame_end(&mut self, mask: ChannelMask, now: Micros) -> ChannelMask {
        let mut transitions = Vec::new();
        for c in mask.channels() {
            let ch = &mut self.channels[(c - 1) as usize];
            debug_assert!(ch.active > 0, "frame_end without matching frame_begin");
            ch.active -= 1;
            if ch.active == 0 {
                if now > ch.busy_since {
                    ch.intervals.push_back((ch.busy_since, now));
                }
                ch.last_busy_end = now;
                ch.ever_busy = true;
                transitions.push(c);
                let cutoff = now.saturating_sub(self.window_us);
                while ch.intervals.front().is_some_and(|&(_, end)| end < cutoff) {
                    ch.intervals.pop_front();
                }
            }
        }
        ChannelMask::from_channels(&transitions)
    }

    /// Instantaneous busy flag: true iff some active frame covers `channel`.
    pub fn busy(&self, channel: u8) -> bool {
        self.ch(channel).active > 0
    }

    /// True iff `channel` has been continuously idle for at least `dur` µs
    /// ending at `now` (the PIFS secondary-channel assessment).
    pub fn idle_for(&self, channel: u8, dur: Micros, now: Micros) -> bool {
        let ch = self.ch(channel);
        if ch.active > 0 {
            return false;
        }
        if !ch.ever_busy {
            return now >= dur;
        }
        ch.last_busy_end + dur <= now
    }

    /// Channels idle for the whole trailing `dur` µs.
    pub fn idle_set(&self, dur: Micros, now: Micros) -> ChannelMask {
        let idle: Vec<u8> = (1..=NUM_CHANNELS as u8)
            .filter(|&c| self.idle_for(c, dur, now))
            .collect();
        ChannelMask::from_channels(&idle)
    }

    /// Fraction of the trailing 100 ms window during which `channel` was
    /// busy, by exact interval integration. Returns 0 at `now == 0`.
    pub fn occupancy_ratio(&self, channel: u8, now: Micros) -> f64 {
        if now == 0 {
            return 0.0;
        }
        let ch = self.ch(channel);
        let window = self.window_us.min(now);
        let from = now - window;
        let mut busy: Micros = 0;
        for &(start, end) in &ch.intervals {
            let s = start.max(from);
            let e = end.min(now);
            if e > s {
                busy += e - s;
            }
        }
        if ch.active > 0 {
            let s = ch.busy_since.max(from);
            if now > s {
                busy += now - s;
            }
        }
        busy as f64 / window as f64
    }

    /// Occupancy ratios for all four channels.
    pub fn occupancy(&self, now: Micros) -> [f64; NUM_CHANNELS] {
        std::array::from_fn(|i| self.occupancy_ratio(i as u8 + 1, now))
    }

    /// Instantaneous busy flags as 0/1 features.
    pub fn busy_flags(&self) -> [f64; NUM_CHANNELS] {
        std::array::from_fn(|i| if self.channels[i].active > 0 { 1.0 } else { 0.0 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn difs_and_pifs_relations_hold() {
        let p = PhyProfile::default();
        assert_eq!(p.difs_us, p.sifs_us + 2 * p.slot_us);
        assert_eq!(p.pifs_us, p.sifs_us + p.slot_us);
        assert!(p.rate_20 < p.rate_40 && p.rate_40 < p.rate_80);
    }

    #[test]
    fn frame_marks_only_its_channels_busy() {
        let mut m = Medium::new();
        m.frame_begin(ChannelMask::from_channels(&[1, 2]), 100);
        assert!(m.busy(1) && m.busy(2));
        assert!(!m.busy(3) && !m.busy(4));
    }

    #[test]
    fn overlapping_frames_union_busy_time() {
        let mut m = Medium::new();
        let c1 = ChannelMask::single(1);
        m.frame_begin(c1, 0);
        m.frame_begin(c1, 500);
        let t = m.frame_end(c1, 1_000);
        assert_eq!(t, ChannelMask::empty()); // still one frame active
        assert!(m.busy(1));
        let t = m.frame_end(c1, 1_500);
        assert_eq!(t, c1);
        assert!(!m.busy(1));
        // busy 0..1500 within a window of 2000 µs at now = 2000
        assert_abs_diff_eq!(m.occupancy_ratio(1, 2_000), 1_500.0 / 2_000.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_duration_frame_is_a_no_op_for_occupancy() {
        let mut m = Medium::new();
        let c1 = ChannelMask::single(1);
        m.frame_begin(c1, 100);
        m.frame_end(c1, 100);
        assert!(!m.busy(1));
        assert_abs_diff_eq!(m.occupancy_ratio(1, 200), 0.0);
    }

    #[test]
    fn occupancy_edges() {
        let mut m = Medium::new();
        assert_eq!(m.occupancy_ratio(1, 0), 0.0);
        // idle for the whole window
        assert_eq!(m.occupancy_ratio(2, 1_000_000), 0.0);
        // busy for the whole window
        m.frame_begin(ChannelMask::single(3), 0);
        assert_abs_diff_eq!(m.occupancy_ratio(3, 500_000), 1.0);
    }

    #[test]
    fn busy_25ms_of_last_100ms_gives_quarter() {
        // hand-integrated: busy [150, 175) ms, window [150, 250) ms -> 25/100
        let mut m = Medium::new();
        let c = ChannelMask::single(1);
        m.frame_begin(c, 150_000);
        m.frame_end(c, 175_000);
        assert_abs_diff_eq!(m.occupancy_ratio(1, 250_000), 0.25, epsilon = 1e-12);
    }

    #[test]
    fn idle_for_requires_gap_after_last_frame() {
        let mut m = Medium::new();
        let c = ChannelMask::single(2);
        m.frame_begin(c, 1_000);
        m.frame_end(c, 2_000);
        assert!(!m.idle_for(2, 25, 2_010));
        assert!(m.idle_for(2, 25, 2_025));
        // never-busy channel is idle once the clock has run at least `dur`
        assert!(m.idle_for(4, 25, 25));
        assert!(!m.idle_for(4, 25, 10));
    }

    #[test]
    fn control_frames_fixed_and_data_scales_with_payload() {
        let p = PhyProfile::default();
        assert_eq!(p.frame_duration(FrameKind::Rts, 0, 20).unwrap(), 52);
        assert_eq!(p.frame_duration(FrameKind::Rts, 999, 80).unwrap(), 52);
        // payload 0 -> preamble only
        assert_eq!(p.frame_duration(FrameKind::Data, 0, 20).unwrap(), 40);
        // 65,535 B at the default 20 MHz rate
        let bits = 65_535u64 * 8;
        let expect = 40 + (bits as f64 / 286.8).ceil() as u64;
        assert_eq!(p.frame_duration(FrameKind::Data, bits, 20).unwrap(), expect);
        assert_eq!(p.frame_duration(FrameKind::Data, 1, 33), Err(MediumError::UnknownWidth(33)));
    }
}
