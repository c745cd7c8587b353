//! BMS — Bandit MAC Simulator.
//!
//! A deterministic discrete-event simulator of IEEE 802.11 channel access
//! (static and dynamic channel bonding) in which learning-enabled access
//! points tune their operational channel, primary channel, and contention
//! window online through multi-armed-bandit agents: UCB, OSUB, LinUCB, and
//! E-RLB, under joint (single-agent) or factorized (multi-agent) action
//! spaces. Synthetic bandit testbeds validate the algorithms in isolation.
//!
//! The `examples/` directory is the front door: one runnable example per
//! capability. A thin `bms` binary drives full scenario matrices from the
//! command line.

pub mod actions;
pub mod bandits;
pub mod engine;
pub mod harness;
pub mod medium;

pub mod config;
pub mod mac;
pub mod metrics;
pub mod runner;
pub mod scenarios;
pub mod sim;
pub mod testbeds;
