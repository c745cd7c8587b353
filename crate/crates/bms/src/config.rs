//! Run configuration: a flat key/value config file with dotted sections,
//! CLI-level option merging, defaults, and validation.
//!
//! Precedence: built-in defaults < config file < command-line flags. The
//! output directory additionally falls back to the `BMS_OUT_DIR`
//! environment variable when neither the flag nor the file set it.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::actions::CW_LADDER;
use crate::bandits::AlgorithmKind;
use crate::harness::{Architecture, Tuning};
use crate::mac::{Bonding, MacParams, NodeRole};
use crate::medium::PhyProfile;
use crate::scenarios::{self, BssSpec, ScenarioSpec, Traffic};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config line {line}: expected 'key = value', got '{text}'")]
    Syntax { line: usize, text: String },
    #[error("config key '{key}': {message}")]
    Value { key: String, message: String },
    #[error("{0}")]
    Usage(String),
}

/// Which experiment to run: a simulator scenario or a synthetic testbed.
#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioChoice {
    Sp,
    Mp,
    /// `synth:<bernoulli|unimodal|linear|piecewise>`
    Synthetic(String),
    /// BSS list supplied through `bssN.*` config keys.
    Custom,
}

impl ScenarioChoice {
    pub fn parse(s: &str) -> Result<Self, ConfigError> {
        match s {
            "sp" => Ok(ScenarioChoice::Sp),
            "mp" => Ok(ScenarioChoice::Mp),
            "custom" => Ok(ScenarioChoice::Custom),
            other => {
                if let Some(kind) = other.strip_prefix("synth:") {
                    if ["bernoulli", "unimodal", "linear", "piecewise"].contains(&kind) {
                        return Ok(ScenarioChoice::Synthetic(kind.to_string()));
                    }
                }
                Err(ConfigError::Usage(format!(
                    "unknown scenario '{other}' (expected sp, mp, custom, or synth:<bernoulli|unimodal|linear|piecewise>)"
                )))
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            ScenarioChoice::Sp => "sp".into(),
            ScenarioChoice::Mp => "mp".into(),
            ScenarioChoice::Synthetic(kind) => format!("synth:{kind}"),
            ScenarioChoice::Custom => "custom".into(),
        }
    }
}

/// The fully resolved configuration of one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scenario: ScenarioChoice,
    pub algorithm: AlgorithmKind,
    pub architecture: Architecture,
    pub bonding: Bonding,
    pub trials: usize,
    pub base_seed: u64,
    pub out_dir: Option<PathBuf>,
    pub plots: bool,
    pub log_contexts: bool,
    /// Worker threads for trial execution (1 = serial). Results are
    /// identical either way.
    pub threads: usize,
    pub duration_s: u64,
    pub interval_s: u64,
    pub profile: PhyProfile,
    pub mac: MacParams,
    pub tuning: Tuning,
    /// Explicit BSS list for `scenario = custom`.
    pub custom_bss: Vec<BssSpec>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scenario: ScenarioChoice::Sp,
            algorithm: AlgorithmKind::Linucb,
            architecture: Architecture::Sa,
            bonding: Bonding::Scb,
            trials: 20,
            base_seed: 1,
            out_dir: None,
            plots: false,
            log_contexts: false,
            threads: std::thread::available_parallelism().map_or(1, |n| n.get()),
            duration_s: 60,
            interval_s: 15,
            profile: PhyProfile::default(),
            mac: MacParams::default(),
            tuning: Tuning::defaults(Architecture::Sa),
            custom_bss: Vec::new(),
        }
    }
}

impl RunConfig {
    /// Trial `k` runs with seed `base_seed + k`.
    pub fn trial_seed(&self, k: usize) -> u64 {
        self.base_seed + k as u64
    }

    /// Builds the scenario this config describes (not for synthetic runs).
    pub fn scenario_spec(&self) -> ScenarioSpec {
        let mut spec = match &self.scenario {
            ScenarioChoice::Sp => scenarios::sp_preset(),
            ScenarioChoice::Mp => scenarios::mp_preset(),
            ScenarioChoice::Custom => ScenarioSpec {
                name: "custom".into(),
                duration_us: 0,
                interval_us: 0,
                bss: self.custom_bss.clone(),
                sp_dynamic_loads: false,
            },
            ScenarioChoice::Synthetic(_) => panic!("synthetic runs have no Wi-Fi scenario"),
        };
        spec.duration_us = self.duration_s * 1_000_000;
        spec.interval_us = self.interval_s * 1_000_000;
        spec
    }

    pub fn resolved_out_dir(&self) -> PathBuf {
        if let Some(dir) = &self.out_dir {
            return dir.clone();
        }
        if let Ok(env) = std::env::var("BMS_OUT_DIR") {
            if !env.is_empty() {
                return PathBuf::from(env);
            }
        }
        PathBuf::from(format!(
            "runs/{}_{}_{}_{}",
            self.scenario.name().replace(':', "_"),
            self.algorithm.name(),
            self.architecture.name(),
            self.bonding.name()
        ))
    }

    /// Applies one dotted config key. Unknown keys and malformed values are
    /// reported, not applied.
    pub fn apply_key(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = |message: String| ConfigError::Value {
            key: key.to_string(),
            message,
        };
        let parse_f64 = |v: &str| {
            v.parse::<f64>()
                .map_err(|e| bad(format!("not a number: {e}")))
        };
        let parse_u64 = |v: &str| {
            v.parse::<u64>()
                .map_err(|e| bad(format!("not an integer: {e}")))
        };
        let parse_bool = |v: &str| match v {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            other => Err(bad(format!("not a boolean: '{other}'"))),
        };
        match key {
            "scenario" => self.scenario = ScenarioChoice::parse(value)?,
            "algo" => {
                self.algorithm = value
                    .parse()
                    .map_err(|e: String| ConfigError::Usage(e))?
            }
            "arch" => {
                let arch: Architecture = value.parse().map_err(ConfigError::Usage)?;
                self.set_architecture(arch);
            }
            "bonding" => self.bonding = value.parse().map_err(ConfigError::Usage)?,
            "trials" => self.trials = parse_u64(value)? as usize,
            "seed" => self.base_seed = parse_u64(value)?,
            "out_dir" => self.out_dir = Some(PathBuf::from(value)),
            "plots" => self.plots = parse_bool(value)?,
            "log_contexts" => self.log_contexts = parse_bool(value)?,
            "threads" => self.threads = (parse_u64(value)? as usize).max(1),
            "scenario.duration_s" => self.duration_s = parse_u64(value)?,
            "scenario.interval_s" => self.interval_s = parse_u64(value)?,
            "phy.slot_us" => self.profile.slot_us = parse_u64(value)?,
            "phy.sifs_us" => self.profile.sifs_us = parse_u64(value)?,
            "phy.difs_us" => self.profile.difs_us = parse_u64(value)?,
            "phy.pifs_us" => self.profile.pifs_us = parse_u64(value)?,
            "phy.rts_us" => self.profile.rts_us = parse_u64(value)?,
            "phy.cts_us" => self.profile.cts_us = parse_u64(value)?,
            "phy.back_us" => self.profile.back_us = parse_u64(value)?,
            "phy.preamble_us" => self.profile.preamble_us = parse_u64(value)?,
            "phy.rate20_mbps" => self.profile.rate_20 = parse_f64(value)?,
            "phy.rate40_mbps" => self.profile.rate_40 = parse_f64(value)?,
            "phy.rate80_mbps" => self.profile.rate_80 = parse_f64(value)?,
            "mac.queue_capacity" => self.mac.queue_capacity = parse_u64(value)? as usize,
            "mac.retry_limit" => self.mac.retry_limit = parse_u64(value)? as u32,
            "mac.ampdu_max_bytes" => self.mac.ampdu_max_bytes = parse_u64(value)?,
            "mac.msdu_bytes" => self.mac.msdu_bytes = parse_u64(value)?,
            "mac.per" => self.mac.per = parse_f64(value)?,
            "mac.cw_min" => self.mac.cw_min = parse_u64(value)? as u32,
            "mac.cw_max" => self.mac.cw_max = parse_u64(value)? as u32,
            "mac.d_max_ms" => self.mac.d_max_us = (parse_f64(value)? * 1_000.0).round() as u64,
            "ucb.alpha" => self.tuning.ucb_alpha = parse_f64(value)?,
            "linucb.alpha" => self.tuning.linucb_alpha = parse_f64(value)?,
            "erlb.eps" => self.tuning.erlb.epsilon = parse_f64(value)?,
            "erlb.eta" => self.tuning.erlb.eta = parse_f64(value)?,
            "erlb.gamma" => self.tuning.erlb.gamma = parse_f64(value)?,
            "erlb.alpha_ema" => self.tuning.erlb.alpha_ema = parse_f64(value)?,
            "erlb.eps_num" => self.tuning.erlb.eps_num = parse_f64(value)?,
            "osub.p" => self.tuning.osub_p = parse_f64(value)?,
            "klucb.c" => self.tuning.klucb_c = parse_f64(value)?,
            _ => {
                if let Some(rest) = key.strip_prefix("bss") {
                    return self.apply_bss_key(key, rest, value);
                }
                return Err(bad("unknown key".into()));
            }
        }
        Ok(())
    }

    /// Switching architecture re-resolves the tuned hyperparameter defaults;
    /// explicit overrides must therefore come after `arch` in the file.
    pub fn set_architecture(&mut self, arch: Architecture) {
        self.architecture = arch;
        self.tuning = Tuning::defaults(arch);
    }

    fn apply_bss_key(&mut self, key: &str, rest: &str, value: &str) -> Result<(), ConfigError> {
        let bad = |message: String| ConfigError::Value {
            key: key.to_string(),
            message,
        };
        let (idx, field) = rest
            .split_once('.')
            .ok_or_else(|| bad("expected bssN.<field>".into()))?;
        let idx: usize = idx
            .parse::<usize>()
            .ok()
            .and_then(|i| i.checked_sub(1))
            .ok_or_else(|| bad("BSS numbers start at 1".into()))?;
        while self.custom_bss.len() <= idx {
            self.custom_bss.push(BssSpec {
                role: NodeRole::Legacy,
                alloc_id: 1,
                primary: 1,
                traffic: Traffic::VariableLoad(vec![0.85]),
            });
        }
        let spec = &mut self.custom_bss[idx];
        match field {
            "role" => {
                spec.role = match value {
                    "legacy" => NodeRole::Legacy,
                    "learner" => NodeRole::Learner,
                    other => return Err(bad(format!("unknown role '{other}'"))),
                }
            }
            "alloc" => {
                let id: u8 = value
                    .parse()
                    .map_err(|e| bad(format!("allocation label 1..7 expected: {e}")))?;
                if !(1..=7).contains(&id) {
                    return Err(bad("allocation label 1..7 expected".into()));
                }
                spec.alloc_id = id;
            }
            "primary" => {
                let p: u8 = value
                    .parse()
                    .map_err(|e| bad(format!("channel 1..4 expected: {e}")))?;
                if !(1..=4).contains(&p) {
                    return Err(bad("channel 1..4 expected".into()));
                }
                spec.primary = p;
            }
            "traffic" => {
                spec.traffic = if value == "full" {
                    Traffic::FullBuffer
                } else {
                    let loads: Result<Vec<f64>, _> =
                        value.split(',').map(|s| s.trim().parse::<f64>()).collect();
                    Traffic::VariableLoad(
                        loads.map_err(|e| bad(format!("'full' or comma-separated loads: {e}")))?,
                    )
                }
            }
            other => return Err(bad(format!("unknown BSS field '{other}'"))),
        }
        Ok(())
    }

    /// Parses a flat `key = value` document. `#` starts a comment. Returns
    /// the violations (unknown keys, bad values) without aborting, so
    /// `validate` can list them all.
    pub fn apply_file(&mut self, path: &Path) -> Result<Vec<String>, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut violations = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line: lineno + 1,
                    text: raw.to_string(),
                });
            };
            if let Err(e) = self.apply_key(key.trim(), value.trim()) {
                violations.push(e.to_string());
            }
        }
        Ok(violations)
    }
}

/// Validation output: hard violations, soft warnings, and the resolved
/// effective configuration.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violations: Vec<String>,
    pub warnings: Vec<String>,
    pub resolved: String,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks configuration invariants and the tuned-hyperparameter ranges.
/// Out-of-range hyperparameters warn; structural problems are violations.
pub fn validate(config: &RunConfig) -> ValidationReport {
    let mut report = ValidationReport::default();
    let p = &config.profile;
    if p.difs_us != p.sifs_us + 2 * p.slot_us {
        report.violations.push(format!(
            "phy: DIFS must equal SIFS + 2*slot ({} != {} + 2*{})",
            p.difs_us, p.sifs_us, p.slot_us
        ));
    }
    if p.pifs_us != p.sifs_us + p.slot_us {
        report.violations.push(format!(
            "phy: PIFS must equal SIFS + slot ({} != {} + {})",
            p.pifs_us, p.sifs_us, p.slot_us
        ));
    }
    if !(p.rate_20 < p.rate_40 && p.rate_40 < p.rate_80) {
        report
            .violations
            .push("phy: data rates must be strictly increasing in width".into());
    }
    if !CW_LADDER.contains(&config.mac.cw_min) || !CW_LADDER.contains(&config.mac.cw_max) {
        report
            .violations
            .push("mac: cw_min and cw_max must be on the CW ladder".into());
    }
    if config.mac.msdu_bytes == 0 || config.mac.msdu_bytes > config.mac.ampdu_max_bytes {
        report
            .violations
            .push("mac: msdu_bytes must be positive and fit in an A-MPDU".into());
    }
    if !(0.0..=1.0).contains(&config.mac.per) {
        report.violations.push("mac: per must be in [0, 1]".into());
    }
    if config.trials == 0 {
        report.violations.push("trials must be at least 1".into());
    }
    if matches!(config.scenario, ScenarioChoice::Custom) {
        if config.custom_bss.is_empty() {
            report
                .violations
                .push("custom scenario needs at least one bssN.* entry".into());
        }
        for (i, b) in config.custom_bss.iter().enumerate() {
            let alloc = crate::actions::allocation(b.alloc_id);
            if !alloc.mask.contains(b.primary) {
                report.violations.push(format!(
                    "bss{}: primary {} is outside allocation #{}",
                    i + 1,
                    b.primary,
                    b.alloc_id
                ));
            }
            if let Traffic::VariableLoad(loads) = &b.traffic {
                if loads.iter().any(|l| !(0.0..=1.0).contains(l)) {
                    report
                        .violations
                        .push(format!("bss{}: load fractions must be in [0, 1]", i + 1));
                }
            }
        }
    }

    let t = &config.tuning;
    let mut range_warn = |name: &str, value: f64, lo: f64, hi: f64| {
        if !(lo..hi).contains(&value) {
            report.warnings.push(format!(
                "{name} = {value} is outside the tuning range ({lo}, {hi})"
            ));
        }
    };
    range_warn("ucb.alpha", t.ucb_alpha, 1.0, 10.0);
    range_warn("linucb.alpha", t.linucb_alpha, 0.2, 20.0);
    range_warn("erlb.eps", t.erlb.epsilon, 0.01, 0.30);
    range_warn("erlb.eta", t.erlb.eta, 1e-4, 1e-1);
    range_warn("erlb.gamma", t.erlb.gamma, 0.70, 0.99);
    range_warn("erlb.alpha_ema", t.erlb.alpha_ema, 0.01, 0.30);

    report.resolved = resolved_config(config);
    report
}

/// Renders the effective configuration as the same flat key/value format.
pub fn resolved_config(config: &RunConfig) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "scenario = {}", config.scenario.name());
    let _ = writeln!(s, "algo = {}", config.algorithm.name());
    let _ = writeln!(s, "arch = {}", config.architecture.name());
    let _ = writeln!(s, "bonding = {}", config.bonding.name());
    let _ = writeln!(s, "trials = {}", config.trials);
    let _ = writeln!(s, "seed = {}", config.base_seed);
    let _ = writeln!(s, "out_dir = {}", config.resolved_out_dir().display());
    let _ = writeln!(s, "plots = {}", config.plots);
    let _ = writeln!(s, "log_contexts = {}", config.log_contexts);
    let _ = writeln!(s, "threads = {}", config.threads);
    let _ = writeln!(s, "scenario.duration_s = {}", config.duration_s);
    let _ = writeln!(s, "scenario.interval_s = {}", config.interval_s);
    let p = &config.profile;
    let _ = writeln!(s, "phy.slot_us = {}", p.slot_us);
    let _ = writeln!(s, "phy.sifs_us = {}", p.sifs_us);
    let _ = writeln!(s, "phy.difs_us = {}", p.difs_us);
    let _ = writeln!(s, "phy.pifs_us = {}", p.pifs_us);
    let _ = writeln!(s, "phy.rts_us = {}", p.rts_us);
    let _ = writeln!(s, "phy.cts_us = {}", p.cts_us);
    let _ = writeln!(s, "phy.back_us = {}", p.back_us);
    let _ = writeln!(s, "phy.preamble_us = {}", p.preamble_us);
    let _ = writeln!(s, "phy.rate20_mbps = {}", p.rate_20);
    let _ = writeln!(s, "phy.rate40_mbps = {}", p.rate_40);
    let _ = writeln!(s, "phy.rate80_mbps = {}", p.rate_80);
    let m = &config.mac;
    let _ = writeln!(s, "mac.queue_capacity = {}", m.queue_capacity);
    let _ = writeln!(s, "mac.retry_limit = {}", m.retry_limit);
    let _ = writeln!(s, "mac.ampdu_max_bytes = {}", m.ampdu_max_bytes);
    let _ = writeln!(s, "mac.msdu_bytes = {}", m.msdu_bytes);
    let _ = writeln!(s, "mac.per = {}", m.per);
    let _ = writeln!(s, "mac.cw_min = {}", m.cw_min);
    let _ = writeln!(s, "mac.cw_max = {}", m.cw_max);
    let _ = writeln!(s, "mac.d_max_ms = {}", m.d_max_us as f64 / 1_000.0);
    let t = &config.tuning;
    let _ = writeln!(s, "ucb.alpha = {}", t.ucb_alpha);
    let _ = writeln!(s, "linucb.alpha = {}", t.linucb_alpha);
    let _ = writeln!(s, "erlb.eps = {}", t.erlb.epsilon);
    let _ = writeln!(s, "erlb.eta = {}", t.erlb.eta);
    let _ = writeln!(s, "erlb.gamma = {}", t.erlb.gamma);
    let _ = writeln!(s, "erlb.alpha_ema = {}", t.erlb.alpha_ema);
    let _ = writeln!(s, "erlb.eps_num = {}", t.erlb.eps_num);
    let _ = writeln!(s, "osub.p = {}", t.osub_p);
    let _ = writeln!(s, "klucb.c = {}", t.klucb_c);
    for (i, b) in config.custom_bss.iter().enumerate() {
        let role = match b.role {
            NodeRole::Learner => "learner",
            NodeRole::Legacy => "legacy",
        };
        let _ = writeln!(s, "bss{}.role = {role}", i + 1);
        let _ = writeln!(s, "bss{}.alloc = {}", i + 1, b.alloc_id);
        let _ = writeln!(s, "bss{}.primary = {}", i + 1, b.primary);
        let traffic = match &b.traffic {
            Traffic::FullBuffer => "full".to_string(),
            Traffic::VariableLoad(l) => l
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(","),
        };
        let _ = writeln!(s, "bss{}.traffic = {traffic}", i + 1);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_resolve_with_zero_violations() {
        let config = RunConfig::default();
        let report = validate(&config);
        assert!(report.ok(), "violations: {:?}", report.violations);
        assert!(report.warnings.is_empty());
        assert!(report.resolved.contains("ucb.alpha = 1.09"));
    }

    #[test]
    fn ma_architecture_switches_tuned_defaults() {
        let mut config = RunConfig::default();
        config.apply_key("arch", "ma").unwrap();
        assert_eq!(config.tuning.ucb_alpha, 1.14);
        assert_eq!(config.tuning.erlb.epsilon, 0.038);
        assert_eq!(config.tuning.osub_p, 0.05);
        // explicit override after arch wins
        config.apply_key("erlb.eps", "0.1").unwrap();
        assert_eq!(config.tuning.erlb.epsilon, 0.1);
    }

    #[test]
    fn unknown_key_is_a_violation_with_its_path() {
        let mut config = RunConfig::default();
        let err = config.apply_key("phy.bogus_us", "12").unwrap_err();
        assert!(err.to_string().contains("phy.bogus_us"));
    }

    #[test]
    fn legacy_primary_outside_allocation_is_flagged() {
        let mut config = RunConfig::default();
        config.apply_key("scenario", "custom").unwrap();
        config.apply_key("bss1.role", "legacy").unwrap();
        config.apply_key("bss1.alloc", "6").unwrap(); // {3,4}
        config.apply_key("bss1.primary", "1").unwrap();
        let report = validate(&config);
        assert!(report
            .violations
            .iter()
            .any(|v| v.contains("primary 1 is outside allocation #6")));
    }

    #[test]
    fn hyperparameters_out_of_tuning_range_warn_but_pass() {
        let mut config = RunConfig::default();
        config.apply_key("ucb.alpha", "42.0").unwrap();
        let report = validate(&config);
        assert!(report.ok());
        assert!(report.warnings.iter().any(|w| w.contains("ucb.alpha")));
    }

    #[test]
    fn inconsistent_difs_is_a_violation() {
        let mut config = RunConfig::default();
        config.apply_key("phy.difs_us", "50").unwrap();
        let report = validate(&config);
        assert!(!report.ok());
    }

    #[test]
    fn config_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(
            &path,
            "# comment\nscenario = mp\nalgo = erlb\narch = ma\nbonding = dcb\ntrials = 5\nmystery.key = 1\n",
        )
        .unwrap();
        let mut config = RunConfig::default();
        let violations = config.apply_file(&path).unwrap();
        assert_eq!(config.scenario, ScenarioChoice::Mp);
        assert_eq!(config.algorithm, AlgorithmKind::Erlb);
        assert_eq!(config.bonding, Bonding::Dcb);
        assert_eq!(config.trials, 5);
        assert_eq!(violations.len(), 1);
        assert!(violations[0].contains("mystery.key"));
    }

    #[test]
    fn scenario_parse_covers_synthetic() {
        assert_eq!(
            ScenarioChoice::parse("synth:unimodal").unwrap(),
            ScenarioChoice::Synthetic("unimodal".into())
        );
        assert!(ScenarioChoice::parse("synth:nope").is_err());
        assert!(ScenarioChoice::parse("sp2").is_err());
    }
}
