//! Distributed transformer monitoring.
//!
//! End devices sample an RTD signal chain and an oil-level switch, classify
//! against thresholds and send 23-byte API frames through a simulated ZigBee
//! network to a coordinator that decodes, logs, displays and raises alarms.
//!
//! * [`signal_chain`]: RTD, bridge, amplifier and ADC models.
//! * [`frame`]: the telemetry wire format.
//! * [`calibration`]: temperature sweeps, affine fit, code→°C tables.
//! * [`network`]: topologies, routing, lossy ack/retry links, battery model
//!   and the discrete-event simulation loop.
//! * [`end_device`]: the transmitter-side state machine.
//! * [`coordinator`]: ingestion, persistence, LCD, alarms and queries.
//! * [`config`] and [`cli`]: scenario files and the `dtms` command line.

// `!(x > 0.0)` is how parameter checks reject NaN along with non-positives.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub mod calibration;
pub mod cli;
pub mod config;
pub mod coordinator;
pub mod end_device;
pub mod frame;
pub mod network;
pub mod signal_chain;

/// 64-bit radio address. Serialized as 16 uppercase hex digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct NodeAddr(pub u64);

impl fmt::Display for NodeAddr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016X}", self.0)
    }
}

impl FromStr for NodeAddr {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let digits = s
            .strip_prefix("0x")
            .or_else(|| s.strip_prefix("0X"))
            .unwrap_or(s);
        if digits.is_empty() || digits.len() > 16 {
            return Err(format!(
                "invalid node address {s:?}: expected 1-16 hex digits"
            ));
        }
        u64::from_str_radix(digits, 16)
            .map(NodeAddr)
            .map_err(|e| format!("invalid node address {s:?}: {e}"))
    }
}

impl Serialize for NodeAddr {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for NodeAddr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Simulated time in whole milliseconds since scenario start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SimTime(pub u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub fn from_secs_f64(s: f64) -> SimTime {
        SimTime((s * 1000.0).round().max(0.0) as u64)
    }

    pub fn from_secs(s: u32) -> SimTime {
        SimTime(u64::from(s) * 1000)
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / 1000.0
    }

    /// Whole seconds, saturating at `u32::MAX`.
    pub fn whole_secs(self) -> u32 {
        u32::try_from(self.0 / 1000).unwrap_or(u32::MAX)
    }

    pub fn plus_ms(self, ms: u64) -> SimTime {
        SimTime(self.0.saturating_add(ms))
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3}s", self.as_secs_f64())
    }
}
