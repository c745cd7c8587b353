//! Executes run matrices: seeds and dispatches trials (optionally across
//! worker threads, with identical artifacts either way), aggregates the
//! records, writes artifacts, and prints the summary table.

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use thiserror::Error;

use crate::bandits::{Agent, AlgorithmKind, ErlbPolicy, LinUcbPolicy, OsubPolicy, RandomPolicy, UcbPolicy};
use crate::config::{validate, RunConfig, ScenarioChoice};
use crate::engine::stream_rng;
use crate::harness::Architecture;
use crate::metrics::{export, fmt_g6, RunRecord, TrialRecord};
use crate::sim::{run_trial, TrialParams};
use crate::testbeds::{play, PlayResult, SyntheticEnv};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid configuration:\n{0}")]
    InvalidConfig(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bandit contract violation: {0}")]
    Bandit(#[from] crate::bandits::BanditError),
}

/// Summary of a finished run, returned to the caller and printed.
#[derive(Debug)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub record: Option<RunRecord>,
    pub lines: Vec<String>,
}

/// Validates and executes a configuration end to end.
pub fn run(config: &RunConfig) -> Result<RunSummary, RunError> {
    let report = validate(config);
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    if !report.ok() {
        return Err(RunError::InvalidConfig(report.violations.join("\n")));
    }
    match &config.scenario {
        ScenarioChoice::Synthetic(kind) => run_synthetic(config, kind),
        _ => run_simulation(config),
    }
}

/// Runs the Wi-Fi scenario trials and writes artifacts.
pub fn run_simulation(config: &RunConfig) -> Result<RunSummary, RunError> {
    let trials = execute_trials(config);
    let record = RunRecord {
        scenario: config.scenario.name(),
        algorithm: config.algorithm.name().to_string(),
        architecture: config.architecture.name().to_string(),
        bonding: config.bonding,
        base_seed: config.base_seed,
        trials,
    };
    let out_dir = config.resolved_out_dir();
    export(&record, &out_dir, config.plots, config.log_contexts)?;
    let lines = summary_lines(&record);
    Ok(RunSummary {
        out_dir,
        record: Some(record),
        lines,
    })
}

/// Runs all trials of a config, in trial order, using up to
/// `config.threads` workers. Each trial is self-contained, so the results
/// are identical to serial execution.
pub fn execute_trials(config: &RunConfig) -> Vec<TrialRecord> {
    let scenario = config.scenario_spec();
    let make_params = |k: usize| TrialParams {
        scenario: scenario.clone(),
        bonding: config.bonding,
        algorithm: config.algorithm,
        architecture: config.architecture,
        tuning: config.tuning,
        profile: config.profile.clone(),
        mac: config.mac,
        seed: config.trial_seed(k),
        trial: k,
        log_contexts: config.log_contexts,
    };
    let n = config.trials;
    let workers = config.threads.max(1).min(n);
    if workers == 1 {
        return (0..n).map(|k| run_trial(make_params(k))).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<TrialRecord>>> = Mutex::new((0..n).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                if k >= n {
                    break;
                }
                let record = run_trial(make_params(k));
                slots.lock().expect("no poisoned trials")[k] = Some(record);
            });
        }
    });
    slots
        .into_inner()
        .expect("no poisoned trials")
        .into_iter()
        .map(|r| r.expect("every trial ran"))
        .collect()
}

fn summary_lines(record: &RunRecord) -> Vec<String> {
    let mut lines = Vec::new();
    lines.push(format!(
        "scenario {} | algo {} | arch {} | bonding {} | {} trials",
        record.scenario,
        record.algorithm,
        record.architecture,
        record.bonding.name(),
        record.trials.len()
    ));
    lines.push("bss  role     goodput_mbps (mean +/- std)   delay_ms".to_string());
    for i in 0..record.num_bss() {
        let (g_mean, g_std) = record.goodput_mean_std(i);
        let delays: Vec<f64> = record.trials.iter().map(|t| t.mean_delay_ms(i)).collect();
        let d_mean = delays.iter().sum::<f64>() / delays.len() as f64;
        let role = match record.trials[0].bss[i].role {
            crate::mac::NodeRole::Learner => "learner",
            crate::mac::NodeRole::Legacy => "legacy",
        };
        lines.push(format!(
            "{:<4} {:<8} {:>8} +/- {:>7}          {:>8}",
            i + 1,
            role,
            fmt_g6(g_mean),
            fmt_g6(g_std),
            fmt_g6(d_mean)
        ));
    }
    let (j_mean, j_std) = record.jain_mean_std();
    lines.push(format!(
        "Jain index over BSS set: {} +/- {}",
        fmt_g6(j_mean),
        fmt_g6(j_std)
    ));
    lines
}

/// One synthetic-testbed run: plays the configured algorithm on the chosen
/// environment across `trials` seeds and writes a regret summary.
pub fn run_synthetic(config: &RunConfig, kind: &str) -> Result<RunSummary, RunError> {
    let horizon = 20_000;
    let env = match kind {
        "bernoulli" => SyntheticEnv::bernoulli10(),
        "unimodal" => SyntheticEnv::unimodal10(),
        "linear" => SyntheticEnv::linear9(),
        "piecewise" => SyntheticEnv::piecewise9(horizon),
        other => {
            return Err(RunError::InvalidConfig(format!(
                "unknown synthetic environment '{other}'"
            )))
        }
    };
    let mut curves: Vec<PlayResult> = Vec::new();
    for k in 0..config.trials {
        let seed = config.trial_seed(k);
        let mut agent = synthetic_agent(config.algorithm, &env, config, seed);
        curves.push(play(&env, agent.as_mut(), horizon, seed)?);
    }
    let mean_final =
        curves.iter().map(|c| c.final_regret).sum::<f64>() / curves.len() as f64;
    let burn_in = horizon / 2;
    let mean_rate = curves
        .iter()
        .map(|c| c.optimal_rate(burn_in, horizon))
        .sum::<f64>()
        / curves.len() as f64;

    let out_dir = config.resolved_out_dir();
    std::fs::create_dir_all(&out_dir)?;
    let mut csv = String::from("round,mean_cumulative_regret\n");
    let samples = curves[0].regret_curve.len();
    for s in 0..samples {
        let round = (s + 1) * curves[0].sample_every;
        let mean: f64 =
            curves.iter().map(|c| c.regret_curve[s]).sum::<f64>() / curves.len() as f64;
        csv.push_str(&format!("{round},{}\n", fmt_g6(mean)));
    }
    std::fs::write(out_dir.join("regret_curve.csv"), csv)?;

    let lines = vec![
        format!(
            "synthetic {kind} | algo {} | {} seeds | horizon {horizon}",
            config.algorithm.name(),
            config.trials
        ),
        format!("mean cumulative regret: {}", fmt_g6(mean_final)),
        format!(
            "mean optimal-action rate over rounds {burn_in}..{horizon}: {}",
            fmt_g6(mean_rate)
        ),
        format!("regret curve written to {}", out_dir.join("regret_curve.csv").display()),
    ];
    Ok(RunSummary {
        out_dir,
        record: None,
        lines,
    })
}

/// Builds the configured algorithm sized for a synthetic environment.
pub fn synthetic_agent(
    algo: AlgorithmKind,
    env: &SyntheticEnv,
    config: &RunConfig,
    seed: u64,
) -> Box<dyn Agent + Send> {
    let arms = env.num_arms();
    let dim = env.dim().unwrap_or(1);
    let t = &config.tuning;
    match algo {
        AlgorithmKind::Ucb => Box::new(UcbPolicy::new(arms, t.ucb_alpha)),
        AlgorithmKind::Linucb => Box::new(LinUcbPolicy::new(arms, dim, t.linucb_alpha)),
        AlgorithmKind::Erlb => Box::new(ErlbPolicy::new(
            arms,
            dim,
            t.erlb,
            stream_rng(seed, "agent/synth"),
        )),
        AlgorithmKind::Osub => Box::new(OsubPolicy::new(
            env.chain_graph(),
            if config.architecture == Architecture::Ma {
                t.osub_p
            } else {
                0.0
            },
            t.klucb_c,
            stream_rng(seed, "agent/synth"),
        )),
        AlgorithmKind::Random => Box::new(RandomPolicy::new(stream_rng(seed, "agent/synth"))),
    }
}
