//! Thin command-line front end over the `bms` library: parse flags and an
//! optional config file, validate, run, print the summary table.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use bms::config::{validate, RunConfig, ScenarioChoice};
use bms::runner::run;

/// Bandit-driven IEEE 802.11 channel-access simulator.
#[derive(Debug, Parser)]
#[command(name = "bms", version, about)]
struct Cli {
    /// Scenario: sp, mp, custom, or synth:<bernoulli|unimodal|linear|piecewise>
    #[arg(long)]
    scenario: Option<String>,

    /// Algorithm: ucb | osub | linucb | erlb | random
    #[arg(long)]
    algo: Option<String>,

    /// Action-space architecture: sa (joint) | ma (factorized)
    #[arg(long)]
    arch: Option<String>,

    /// Channel bonding mode: scb | dcb
    #[arg(long)]
    bonding: Option<String>,

    /// Number of independent trials (trial k uses seed + k)
    #[arg(long)]
    trials: Option<usize>,

    /// Base seed
    #[arg(long)]
    seed: Option<u64>,

    /// Flat key = value config file (flags override it)
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory (falls back to $BMS_OUT_DIR, then runs/<name>)
    #[arg(long)]
    out: Option<PathBuf>,

    /// Also write the goodput timeline SVG
    #[arg(long)]
    plots: bool,

    /// Also write per-round context vectors (contexts.csv per trial)
    #[arg(long)]
    log_contexts: bool,

    /// Worker threads for trials (1 = serial; results identical either way)
    #[arg(long)]
    threads: Option<usize>,

    /// Print the resolved configuration and its validation report, then exit
    #[arg(long)]
    validate: bool,
}

fn build_config(cli: &Cli) -> Result<(RunConfig, Vec<String>), String> {
    let mut config = RunConfig::default();
    let mut violations = Vec::new();
    if let Some(path) = &cli.config {
        violations = config.apply_file(path).map_err(|e| e.to_string())?;
    }
    if let Some(s) = &cli.scenario {
        config.scenario = ScenarioChoice::parse(s).map_err(|e| e.to_string())?;
    }
    if let Some(a) = &cli.algo {
        config.algorithm = a.parse()?;
    }
    if let Some(a) = &cli.arch {
        let arch = a.parse()?;
        config.set_architecture(arch);
    }
    if let Some(b) = &cli.bonding {
        config.bonding = b.parse()?;
    }
    if let Some(t) = cli.trials {
        config.trials = t;
    }
    if let Some(s) = cli.seed {
        config.base_seed = s;
    }
    if let Some(out) = &cli.out {
        config.out_dir = Some(out.clone());
    }
    if let Some(threads) = cli.threads {
        config.threads = threads.max(1);
    }
    config.plots |= cli.plots;
    config.log_contexts |= cli.log_contexts;
    Ok((config, violations))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (config, file_violations) = match build_config(&cli) {
        Ok(pair) => pair,
        Err(message) => {
            eprintln!("error: {message}");
            return ExitCode::from(2);
        }
    };

    if cli.validate {
        let mut report = validate(&config);
        report.violations.extend(file_violations);
        println!("# resolved configuration");
        print!("{}", report.resolved);
        for w in &report.warnings {
            println!("warning: {w}");
        }
        if report.violations.is_empty() {
            println!("ok: zero violations");
        } else {
            for v in &report.violations {
                println!("violation: {v}");
            }
        }
        return ExitCode::SUCCESS;
    }

    if !file_violations.is_empty() {
        for v in &file_violations {
            eprintln!("error: {v}");
        }
        return ExitCode::from(2);
    }

    match run(&config) {
        Ok(summary) => {
            for line in &summary.lines {
                println!("{line}");
            }
            println!("artifacts: {}", summary.out_dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
