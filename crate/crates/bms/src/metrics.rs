//! Run metrics and artifacts: goodput, per-packet delay, Jain's fairness,
//! per-interval selection frequencies, and the CSV/JSON/SVG exports.
//!
//! `rounds.csv` and `intervals.csv` carry a trial column and concatenate all
//! trials; `summary.json` aggregates mean and standard deviation across
//! trials. All floating-point output uses 6 significant digits.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use crate::actions::ActionTriple;
use crate::engine::Micros;
use crate::harness::Stage;
use crate::mac::{Bonding, CycleCause, NodeRole};

/// One learning round (transmission cycle) as logged.
#[derive(Debug, Clone)]
pub struct RoundRow {
    pub time_us: Micros,
    /// 1-based BSS label (BSS1 is the first node).
    pub bss: usize,
    pub triple: ActionTriple,
    pub d_ms: f64,
    pub reward: f64,
    pub cause: CycleCause,
    /// Stage contexts captured for audit when context logging is enabled.
    pub contexts: Vec<(Stage, Vec<f64>)>,
}

/// Per-BSS accumulators for one trial.
#[derive(Debug, Clone)]
pub struct BssStats {
    pub role: NodeRole,
    /// Delivered application bits, binned by 15 s interval of delivery.
    pub delivered_bits: Vec<u64>,
    pub delivered_packets: Vec<u64>,
    /// Sum of per-packet delays (queuing + backoff + (re)transmission) of
    /// delivered packets, ms; dropped packets are excluded.
    pub delay_sum_ms: Vec<f64>,
    pub retry_drops: u64,
    pub overflow_drops: u64,
    pub cycles: Vec<u64>,
    /// Delivered bits per 1 s bin, for the goodput timeline.
    pub timeline_bits: Vec<u64>,
}

impl BssStats {
    pub fn new(role: NodeRole, num_intervals: usize, duration_s: usize) -> Self {
        BssStats {
            role,
            delivered_bits: vec![0; num_intervals],
            delivered_packets: vec![0; num_intervals],
            delay_sum_ms: vec![0.0; num_intervals],
            retry_drops: 0,
            overflow_drops: 0,
            cycles: vec![0; num_intervals],
            timeline_bits: vec![0; duration_s],
        }
    }

    pub fn total_delivered_bits(&self) -> u64 {
        self.delivered_bits.iter().sum()
    }
}

/// Everything one trial produced.
#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub duration_us: Micros,
    pub interval_us: Micros,
    pub bonding: Bonding,
    pub rounds: Vec<RoundRow>,
    pub bss: Vec<BssStats>,
    /// Interval-wise optimal channel (single-player schedules), else empty.
    pub optimal_channels: Vec<u8>,
}

impl TrialRecord {
    pub fn num_intervals(&self) -> usize {
        (self.duration_us as usize).div_ceil(self.interval_us as usize)
    }

    /// Whole-trial goodput in Mbps (bits/µs) for one BSS.
    pub fn goodput_mbps(&self, bss: usize) -> f64 {
        self.bss[bss].total_delivered_bits() as f64 / self.duration_us as f64
    }

    pub fn interval_goodput_mbps(&self, bss: usize, interval: usize) -> f64 {
        let span = self.interval_span_us(interval);
        self.bss[bss].delivered_bits[interval] as f64 / span as f64
    }

    fn interval_span_us(&self, interval: usize) -> Micros {
        let start = interval as Micros * self.interval_us;
        (self.duration_us - start).min(self.interval_us)
    }

    pub fn mean_delay_ms(&self, bss: usize) -> f64 {
        let s = &self.bss[bss];
        let packets: u64 = s.delivered_packets.iter().sum();
        if packets == 0 {
            return 0.0;
        }
        s.delay_sum_ms.iter().sum::<f64>() / packets as f64
    }

    /// Jain's index over all BSS goodputs of this trial.
    pub fn jain(&self) -> f64 {
        let goodputs: Vec<f64> = (0..self.bss.len()).map(|i| self.goodput_mbps(i)).collect();
        jain_index(&goodputs)
    }
}

/// Jain's fairness index (sum x)^2 / (n * sum x^2). An all-zero input is
/// undefined and reported as 1 by convention, with a warning on stderr.
pub fn jain_index(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let sum: f64 = xs.iter().sum();
    let sum_sq: f64 = xs.iter().map(|x| x * x).sum();
    if sum_sq == 0.0 {
        eprintln!("warning: Jain's index of an all-zero share vector is undefined; reporting 1");
        return 1.0;
    }
    sum * sum / (n * sum_sq)
}

/// Per-interval fraction of cycles spent on each channel configuration.
/// Labels are allocation labels, with the primary subscript under DCB
/// (e.g. "#7_3"). Fractions sum to 1 for any interval with cycles.
pub fn selection_frequency(
    rounds: &[RoundRow],
    bss: usize,
    interval: usize,
    interval_us: Micros,
    bonding: Bonding,
) -> Vec<(String, f64)> {
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    let mut total = 0u64;
    for row in rounds {
        if row.bss != bss || (row.time_us / interval_us) as usize != interval {
            continue;
        }
        let label = match bonding {
            Bonding::Scb => row.triple.alloc.label(),
            Bonding::Dcb => row.triple.channel_label(),
        };
        *counts.entry(label).or_insert(0) += 1;
        total += 1;
    }
    let mut freq: Vec<(String, f64)> = counts
        .into_iter()
        .map(|(label, c)| (label, c as f64 / total as f64))
        .collect();
    freq.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    freq
}

/// Formats a number with 6 significant digits, trimming trailing zeros
/// (printf %.6g without the exponent form for ordinary magnitudes).
pub fn fmt_g6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-5..6).contains(&exp) {
        return format!("{:.5e}", x);
    }
    let prec = (5 - exp).max(0) as usize;
    let s = format!("{:.*}", prec, x);
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// A whole run: one record per trial, in trial order.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub scenario: String,
    pub algorithm: String,
    pub architecture: String,
    pub bonding: Bonding,
    pub base_seed: u64,
    pub trials: Vec<TrialRecord>,
}

impl RunRecord {
    pub fn num_bss(&self) -> usize {
        self.trials.first().map_or(0, |t| t.bss.len())
    }

    /// Mean and standard deviation of whole-trial goodput per BSS.
    pub fn goodput_mean_std(&self, bss: usize) -> (f64, f64) {
        mean_std(&self.trials.iter().map(|t| t.goodput_mbps(bss)).collect::<Vec<_>>())
    }

    pub fn jain_mean_std(&self) -> (f64, f64) {
        mean_std(&self.trials.iter().map(|t| t.jain()).collect::<Vec<_>>())
    }
}

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub const ROUNDS_HEADER: &str = "trial,time_us,bss,alloc,primary,cw,D_ms,reward,cause";
pub const INTERVALS_HEADER: &str =
    "trial,interval,bss,goodput_mbps,delay_ms,delivered_bits,drops,cycles";

fn rounds_csv(trials: &[TrialRecord]) -> String {
    let mut out = String::from(ROUNDS_HEADER);
    out.push('\n');
    for t in trials {
        for r in &t.rounds {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                t.trial,
                r.time_us,
                r.bss,
                r.triple.alloc.label(),
                r.triple.primary,
                r.triple.cw,
                fmt_g6(r.d_ms),
                fmt_g6(r.reward),
                r.cause.name(),
            ));
        }
    }
    out
}

fn intervals_csv(trials: &[TrialRecord]) -> String {
    let mut out = String::from(INTERVALS_HEADER);
    out.push('\n');
    for t in trials {
        for interval in 0..t.num_intervals() {
            for (i, s) in t.bss.iter().enumerate() {
                let delay = if s.delivered_packets[interval] > 0 {
                    s.delay_sum_ms[interval] / s.delivered_packets[interval] as f64
                } else {
                    0.0
                };
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    t.trial,
                    interval,
                    i + 1,
                    fmt_g6(t.interval_goodput_mbps(i, interval)),
                    fmt_g6(delay),
                    s.delivered_bits[interval],
                    s.retry_drops + s.overflow_drops,
                    s.cycles[interval],
                ));
            }
        }
    }
    out
}

fn contexts_csv(trials: &[TrialRecord]) -> String {
    let mut out = String::from("trial,time_us,bss,stage,context\n");
    for t in trials {
        for r in &t.rounds {
            for (stage, x) in &r.contexts {
                let joined: Vec<String> = x.iter().map(|v| fmt_g6(*v)).collect();
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    t.trial,
                    r.time_us,
                    r.bss,
                    stage.name(),
                    joined.join(";"),
                ));
            }
        }
    }
    out
}

fn summary_json(run: &RunRecord) -> serde_json::Value {
    let num_bss = run.num_bss();
    let per_bss: Vec<serde_json::Value> = (0..num_bss)
        .map(|i| {
            let (mean, std) = run.goodput_mean_std(i);
            let delays: Vec<f64> = run.trials.iter().map(|t| t.mean_delay_ms(i)).collect();
            let (dmean, dstd) = mean_std(&delays);
            let interval_means: Vec<f64> = (0..run.trials[0].num_intervals())
                .map(|k| {
                    let vals: Vec<f64> = run
                        .trials
                        .iter()
                        .map(|t| t.interval_goodput_mbps(i, k))
                        .collect();
                    mean_std(&vals).0
                })
                .collect();
            serde_json::json!({
                "bss": i + 1,
                "role": match run.trials[0].bss[i].role {
                    NodeRole::Learner => "learner",
                    NodeRole::Legacy => "legacy",
                },
                "goodput_mbps_mean": round6(mean),
                "goodput_mbps_std": round6(std),
                "delay_ms_mean": round6(dmean),
                "delay_ms_std": round6(dstd),
                "interval_goodput_mbps_mean": interval_means.iter().map(|v| round6(*v)).collect::<Vec<_>>(),
            })
        })
        .collect();
    let (jain_mean, jain_std) = run.jain_mean_std();
    let selection: Vec<serde_json::Value> = run
        .trials
        .first()
        .map(|t| {
            let learners: Vec<usize> = t
                .bss
                .iter()
                .enumerate()
                .filter(|(_, s)| s.role == NodeRole::Learner)
                .map(|(i, _)| i + 1)
                .collect();
            learners
                .iter()
                .map(|&bss| {
                    let per_interval: Vec<serde_json::Value> = (0..t.num_intervals())
                        .map(|k| {
                            let freq = selection_frequency(&t.rounds, bss, k, t.interval_us, t.bonding);
                            let top: Vec<serde_json::Value> = freq
                                .into_iter()
                                .take(5)
                                .map(|(label, f)| serde_json::json!({"action": label, "fraction": round6(f)}))
                                .collect();
                            serde_json::json!(top)
                        })
                        .collect();
                    serde_json::json!({"bss": bss, "trial": t.trial, "per_interval": per_interval})
                })
                .collect()
        })
        .unwrap_or_default();
    serde_json::json!({
        "scenario": run.scenario,
        "algorithm": run.algorithm,
        "architecture": run.architecture,
        "bonding": run.bonding.name(),
        "base_seed": run.base_seed,
        "trials": run.trials.len(),
        "jain_mean": round6(jain_mean),
        "jain_std": round6(jain_std),
        "per_bss": per_bss,
        "optimal_channels_per_trial": run.trials.iter().map(|t| t.optimal_channels.clone()).collect::<Vec<_>>(),
        "representative_trial_selection": selection,
    })
}

fn round6(x: f64) -> f64 {
    fmt_g6(x).parse().unwrap_or(x)
}

/// Renders the 1 s-binned goodput timeline of the first trial as a small
/// self-contained SVG, one polyline per BSS.
fn timeline_svg(trial: &TrialRecord) -> String {
    const W: f64 = 720.0;
    const H: f64 = 360.0;
    const ML: f64 = 60.0;
    const MB: f64 = 40.0;
    const MT: f64 = 20.0;
    const MR: f64 = 20.0;
    let bins = trial.bss.first().map_or(0, |s| s.timeline_bits.len());
    let max_mbps = trial
        .bss
        .iter()
        .flat_map(|s| s.timeline_bits.iter())
        .map(|&b| b as f64 / 1e6)
        .fold(1.0f64, f64::max);
    let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n\
         <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"
    );
    // axes
    svg.push_str(&format!(
        "<line x1=\"{ML}\" y1=\"{MT}\" x2=\"{ML}\" y2=\"{}\" stroke=\"black\"/>\n\
         <line x1=\"{ML}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        H - MB,
        H - MB,
        W - MR,
        H - MB
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">time (s)</text>\n\
         <text x=\"14\" y=\"{}\" font-size=\"12\" transform=\"rotate(-90 14 {})\" text-anchor=\"middle\">goodput (Mbps)</text>\n",
        (ML + W - MR) / 2.0,
        H - 8.0,
        (MT + H - MB) / 2.0,
        (MT + H - MB) / 2.0
    ));
    for (i, s) in trial.bss.iter().enumerate() {
        let color = colors[i % colors.len()];
        let points: Vec<String> = s
            .timeline_bits
            .iter()
            .enumerate()
            .map(|(k, &bits)| {
                let x = ML + (k as f64 + 0.5) / bins.max(1) as f64 * (W - ML - MR);
                let y = (H - MB) - (bits as f64 / 1e6 / max_mbps) * (H - MB - MT);
                format!("{:.1},{:.1}", x, y)
            })
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            points.join(" ")
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" fill=\"{color}\">BSS{}</text>\n",
            W - MR - 60.0,
            MT + 16.0 * (i as f64 + 1.0),
            i + 1
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"10\" fill=\"#666\">y max = {} Mbps</text>\n",
        ML + 6.0,
        MT + 12.0,
        fmt_g6(max_mbps)
    ));
    svg.push_str("</svg>\n");
    svg
}

/// Writes the run artifacts into `dir`: concatenated `rounds.csv` and
/// `intervals.csv`, the aggregate `summary.json`, per-trial directories
/// `trial_NN/` with the same CSVs scoped to one trial, and (optionally) the
/// first trial's `goodput_timeline.svg` and per-round `contexts.csv`.
pub fn export(
    run: &RunRecord,
    dir: &Path,
    plots: bool,
    log_contexts: bool,
) -> io::Result<()> {
    fs::create_dir_all(dir).map_err(|e| annotate(e, dir))?;
    write_file(&dir.join("rounds.csv"), &rounds_csv(&run.trials))?;
    write_file(&dir.join("intervals.csv"), &intervals_csv(&run.trials))?;
    let summary = serde_json::to_string_pretty(&summary_json(run)).expect("serializable");
    write_file(&dir.join("summary.json"), &summary)?;
    for t in &run.trials {
        let tdir = dir.join(format!("trial_{:02}", t.trial));
        fs::create_dir_all(&tdir).map_err(|e| annotate(e, &tdir))?;
        let one = std::slice::from_ref(t);
        write_file(&tdir.join("rounds.csv"), &rounds_csv(one))?;
        write_file(&tdir.join("intervals.csv"), &intervals_csv(one))?;
        if log_contexts {
            write_file(&tdir.join("contexts.csv"), &contexts_csv(one))?;
        }
    }
    if plots {
        if let Some(first) = run.trials.first() {
            write_file(&dir.join("goodput_timeline.svg"), &timeline_svg(first))?;
        }
    }
    Ok(())
}

fn write_file(path: &Path, contents: &str) -> io::Result<()> {
    let mut f = fs::File::create(path).map_err(|e| annotate(e, path))?;
    f.write_all(contents.as_bytes()).map_err(|e| annotate(e, path))
}

fn annotate(e: io::Error, path: &Path) -> io::Error {
    io::Error::new(e.kind(), format!("{}: {e}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn jain_equal_shares_is_one() {
        assert_abs_diff_eq!(jain_index(&[100.0, 100.0, 100.0]), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn jain_single_user_extreme() {
        assert_abs_diff_eq!(jain_index(&[300.0, 0.0, 0.0]), 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn jain_bounds_hold() {
        let cases = [
            vec![1.0, 2.0, 3.0],
            vec![5.0, 0.0, 0.1, 9.0],
            vec![0.3],
            vec![7.0, 7.0],
        ];
        for xs in cases {
            let j = jain_index(&xs);
            assert!(j <= 1.0 + 1e-12);
            assert!(j >= 1.0 / xs.len() as f64 - 1e-12);
        }
    }

    #[test]
    fn jain_all_zero_reports_one() {
        assert_eq!(jain_index(&[0.0, 0.0]), 1.0);
    }

    #[test]
    fn jain_formula_regression_near_0973() {
        // two equal shares plus one 40% larger give J close to 0.973
        let gp = [200.0, 200.0, 280.0];
        let j = jain_index(&gp);
        let expect = (gp.iter().sum::<f64>()).powi(2) / (3.0 * gp.iter().map(|x| x * x).sum::<f64>());
        assert_abs_diff_eq!(j, expect, epsilon = 1e-12);
        assert_abs_diff_eq!(j, 0.973, epsilon = 1e-3);
    }

    #[test]
    fn g6_formatting() {
        assert_eq!(fmt_g6(0.0), "0");
        assert_eq!(fmt_g6(0.75), "0.75");
        assert_eq!(fmt_g6(150.9), "150.9");
        assert_eq!(fmt_g6(1.0 / 3.0), "0.333333");
        assert_eq!(fmt_g6(123456.78), "123457");
        assert_eq!(fmt_g6(10.0), "10");
        assert_eq!(fmt_g6(-2.5), "-2.5");
    }
}
