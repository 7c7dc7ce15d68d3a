//! Receiver side: decode, convert, persist, display and alarm.
//!
//! A [`Coordinator`] is a single-writer state machine. Time only moves forward
//! through [`Coordinator::advance_to`] and [`Coordinator::ingest`], so the same
//! sequence of calls always yields the same reading and alarm logs. The
//! simulator and `replay` both rely on that.

use std::collections::BTreeMap;
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calibration::CalibrationTable;
use crate::frame::{self, FrameError};
use crate::signal_chain::{ChainError, OilState};
use crate::{NodeAddr, SimTime};

pub mod alarm;
pub mod lcd;
pub mod query;
pub mod service;

pub use alarm::{AlarmEvent, AlarmKind, AlarmLimits, AlarmState, AlarmTracker};
pub use lcd::{render_lcd, LcdBuffer};
pub use query::{parse_query, Query, QueryError};

pub const DEFAULT_HYSTERESIS_C: f64 = 2.0;
pub const DEFAULT_OFFLINE_MULTIPLIER: f64 = 3.0;

/// One accepted telemetry frame, as persisted in the reading log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reading {
    #[serde(rename = "addr")]
    pub device_addr: NodeAddr,
    #[serde(rename = "seq")]
    pub sequence: u8,
    #[serde(rename = "t_dev")]
    pub device_timestamp_s: u32,
    #[serde(rename = "t_rx")]
    pub received_at_s: u32,
    pub temp_c: f64,
    pub temp_code: u16,
    #[serde(rename = "oil")]
    pub oil_state: OilState,
    #[serde(rename = "batt_mv")]
    pub battery_mv: u16,
    pub hops: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceRegistration {
    pub addr: NodeAddr,
    pub sample_period: SimTime,
    pub temp_high_c: f64,
    pub table: CalibrationTable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoordinatorConfig {
    pub devices: Vec<DeviceRegistration>,
    pub hysteresis_c: f64,
    pub offline_multiplier: f64,
}

impl CoordinatorConfig {
    pub fn new(devices: Vec<DeviceRegistration>) -> Self {
        Self {
            devices,
            hysteresis_c: DEFAULT_HYSTERESIS_C,
            offline_multiplier: DEFAULT_OFFLINE_MULTIPLIER,
        }
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("frame rejected: {0}")]
    Decode(#[from] FrameError),
    #[error("frame from unconfigured device {0}")]
    UnknownDevice(NodeAddr),
    #[error("temperature conversion failed for {addr}: {source}")]
    Conversion { addr: NodeAddr, source: ChainError },
    #[error("log write failed: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stats {
    pub frames_ok: u64,
    pub frames_bad: u64,
    pub unknown_device: u64,
    pub conversion_errors: u64,
    pub alarms_raised: u64,
    pub alarms_cleared: u64,
    pub sequence_gaps: u64,
    pub duplicates: u64,
    pub decode_errors: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Liveness {
    NeverSeen,
    Online,
    Offline,
}

#[derive(Debug, Clone)]
struct DeviceStatus {
    reg: DeviceRegistration,
    last_seen: Option<SimTime>,
    last_reading: Option<Reading>,
    last_seq: u8,
    readings: u64,
    gaps: u64,
    duplicates: u64,
    alarms: AlarmTracker,
}

/// Per-device state that survives a restart through the logs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceSnapshot {
    pub addr: NodeAddr,
    pub liveness: Liveness,
    pub readings: u64,
    pub sequence_gaps: u64,
    pub duplicates: u64,
    pub active_alarms: Vec<AlarmKind>,
    pub last_reading: Option<Reading>,
}

#[derive(Debug)]
pub struct Ingest {
    pub reading: Reading,
    pub alarms: Vec<AlarmEvent>,
}

/// Append-only sinks for the reading and alarm logs.
pub struct LogSinks {
    pub readings: Box<dyn Write + Send + Sync>,
    pub alarms: Box<dyn Write + Send + Sync>,
}

pub struct Coordinator {
    devices: BTreeMap<NodeAddr, DeviceStatus>,
    hysteresis_c: f64,
    offline_multiplier: f64,
    readings: Vec<Reading>,
    alarms: Vec<AlarmEvent>,
    stats: Stats,
    lcd: LcdBuffer,
    clock: SimTime,
    sinks: Option<LogSinks>,
}

impl Coordinator {
    pub fn new(config: CoordinatorConfig) -> Self {
        let devices = config
            .devices
            .into_iter()
            .map(|reg| {
                (
                    reg.addr,
                    DeviceStatus {
                        reg,
                        last_seen: None,
                        last_reading: None,
                        last_seq: 0,
                        readings: 0,
                        gaps: 0,
                        duplicates: 0,
                        alarms: AlarmTracker::default(),
                    },
                )
            })
            .collect();
        Self {
            devices,
            hysteresis_c: config.hysteresis_c,
            offline_multiplier: config.offline_multiplier,
            readings: Vec::new(),
            alarms: Vec::new(),
            stats: Stats::default(),
            lcd: LcdBuffer::default(),
            clock: SimTime::ZERO,
            sinks: None,
        }
    }

    /// Streams every new reading and alarm to `sinks` as JSON Lines.
    pub fn with_sinks(mut self, sinks: LogSinks) -> Self {
        self.sinks = Some(sinks);
        self
    }

    /// Rebuilds state from previously written logs. Alarm state comes from the
    /// alarm log, never from re-running the alarm rules.
    pub fn restore(
        config: CoordinatorConfig,
        readings: Vec<Reading>,
        alarms: Vec<AlarmEvent>,
    ) -> Result<Self, IngestError> {
        let mut c = Self::new(config);
        for r in readings {
            let status = c
                .devices
                .get_mut(&r.device_addr)
                .ok_or(IngestError::UnknownDevice(r.device_addr))?;
            let at = SimTime::from_secs(r.received_at_s);
            track_sequence(status, &mut c.stats, r.sequence);
            status.readings += 1;
            status.last_seen = Some(at);
            status.last_reading = Some(r.clone());
            c.clock = c.clock.max(at);
            c.stats.frames_ok += 1;
            c.lcd = render_lcd(&r);
            c.readings.push(r);
        }
        for a in alarms {
            let status = c
                .devices
                .get_mut(&a.device_addr)
                .ok_or(IngestError::UnknownDevice(a.device_addr))?;
            status.alarms.apply(a.kind, a.state);
            match a.state {
                AlarmState::Raised => c.stats.alarms_raised += 1,
                AlarmState::Cleared => c.stats.alarms_cleared += 1,
            }
            c.clock = c.clock.max(SimTime::from_secs_f64(a.at_s));
            c.alarms.push(a);
        }
        Ok(c)
    }

    pub fn now(&self) -> SimTime {
        self.clock
    }

    pub fn readings(&self) -> &[Reading] {
        &self.readings
    }

    pub fn alarms(&self) -> &[AlarmEvent] {
        &self.alarms
    }

    pub fn stats(&self) -> &Stats {
        &self.stats
    }

    pub fn lcd(&self) -> &LcdBuffer {
        &self.lcd
    }

    pub fn device_addrs(&self) -> impl Iterator<Item = NodeAddr> + '_ {
        self.devices.keys().copied()
    }

    pub fn is_configured(&self, addr: NodeAddr) -> bool {
        self.devices.contains_key(&addr)
    }

    fn offline_deadline(&self, status: &DeviceStatus) -> SimTime {
        let window = (status.reg.sample_period.0 as f64 * self.offline_multiplier).round() as u64;
        status
            .last_seen
            .unwrap_or(SimTime::ZERO)
            .plus_ms(window + 1)
    }

    /// Fires every DeviceOffline deadline at or before `now`, in time order.
    ///
    /// A device goes offline once it has been silent for strictly longer than
    /// `offline_multiplier × sample_period` (one millisecond past the window).
    pub fn advance_to(&mut self, now: SimTime) -> Vec<AlarmEvent> {
        let mut due: Vec<(SimTime, NodeAddr)> = self
            .devices
            .values()
            .filter(|s| !s.alarms.is_active(AlarmKind::DeviceOffline))
            .map(|s| (self.offline_deadline(s), s.reg.addr))
            .filter(|(deadline, _)| *deadline <= now)
            .collect();
        due.sort();
        let mut fired = Vec::new();
        for (deadline, addr) in due {
            let status = self.devices.get_mut(&addr).unwrap();
            if let Some((kind, state)) = status.alarms.on_silence() {
                fired.push(AlarmEvent {
                    device_addr: addr,
                    kind,
                    state,
                    at_s: deadline.as_secs_f64(),
                    reading: None,
                });
            }
        }
        self.clock = self.clock.max(now);
        for a in &fired {
            self.record_alarm(a.clone());
        }
        fired
    }

    /// Decodes `raw`, converts it and updates every piece of coordinator state.
    pub fn ingest(
        &mut self,
        raw: &[u8],
        received_at: SimTime,
        hops: u32,
    ) -> Result<Ingest, IngestError> {
        let mut alarms = self.advance_to(received_at);
        let payload = match frame::decode(raw) {
            Ok(p) => p,
            Err(e) => {
                self.stats.frames_bad += 1;
                *self
                    .stats
                    .decode_errors
                    .entry(e.kind().to_string())
                    .or_default() += 1;
                return Err(e.into());
            }
        };
        let addr = payload.source_addr;
        let Some(status) = self.devices.get_mut(&addr) else {
            self.stats.unknown_device += 1;
            return Err(IngestError::UnknownDevice(addr));
        };
        let temp_c = match status.reg.table.temperature_from_code(payload.temp_code) {
            Ok(t) => t,
            Err(source) => {
                self.stats.conversion_errors += 1;
                return Err(IngestError::Conversion { addr, source });
            }
        };
        let reading = Reading {
            device_addr: addr,
            sequence: payload.sequence,
            device_timestamp_s: payload.timestamp_s,
            received_at_s: received_at.whole_secs(),
            temp_c,
            temp_code: payload.temp_code,
            oil_state: if payload.oil_low() {
                OilState::Low
            } else {
                OilState::Normal
            },
            battery_mv: payload.battery_mv,
            hops,
        };

        track_sequence(status, &mut self.stats, reading.sequence);
        status.readings += 1;
        status.last_seen = Some(received_at);
        status.last_reading = Some(reading.clone());
        let limits = AlarmLimits {
            temp_high_c: status.reg.temp_high_c,
            hysteresis_c: self.hysteresis_c,
        };
        let transitions = status
            .alarms
            .on_reading(&reading, payload.temp_high(), limits);

        self.stats.frames_ok += 1;
        if let Some(s) = self.sinks.as_mut() {
            writeln!(
                s.readings,
                "{}",
                serde_json::to_string(&reading).expect("reading serializes")
            )?;
        }
        self.readings.push(reading.clone());
        self.lcd = render_lcd(&reading);

        for (kind, state) in transitions {
            let event = AlarmEvent {
                device_addr: addr,
                kind,
                state,
                at_s: received_at.as_secs_f64(),
                reading: Some(reading.clone()),
            };
            self.record_alarm(event.clone());
            alarms.push(event);
        }
        Ok(Ingest { reading, alarms })
    }

    fn record_alarm(&mut self, event: AlarmEvent) {
        match event.state {
            AlarmState::Raised => self.stats.alarms_raised += 1,
            AlarmState::Cleared => self.stats.alarms_cleared += 1,
        }
        if let Some(s) = self.sinks.as_mut() {
            // Alarm transitions are already applied; a failed write is
            // surfaced on the next flush rather than unwinding state.
            let _ = writeln!(
                s.alarms,
                "{}",
                serde_json::to_string(&event).expect("alarm serializes")
            );
        }
        self.alarms.push(event);
    }

    pub fn flush(&mut self) -> io::Result<()> {
        if let Some(s) = self.sinks.as_mut() {
            s.readings.flush()?;
            s.alarms.flush()?;
        }
        Ok(())
    }

    pub fn liveness(&self, addr: NodeAddr) -> Option<Liveness> {
        let s = self.devices.get(&addr)?;
        Some(if s.alarms.is_active(AlarmKind::DeviceOffline) {
            Liveness::Offline
        } else if s.last_seen.is_none() {
            Liveness::NeverSeen
        } else {
            Liveness::Online
        })
    }

    pub fn device_snapshot(&self, addr: NodeAddr) -> Option<DeviceSnapshot> {
        let s = self.devices.get(&addr)?;
        Some(DeviceSnapshot {
            addr,
            liveness: self.liveness(addr)?,
            readings: s.readings,
            sequence_gaps: s.gaps,
            duplicates: s.duplicates,
            active_alarms: AlarmKind::ALL
                .into_iter()
                .filter(|k| s.alarms.is_active(*k))
                .collect(),
            last_reading: s.last_reading.clone(),
        })
    }

    pub fn snapshot(&self) -> Vec<DeviceSnapshot> {
        self.devices
            .keys()
            .filter_map(|a| self.device_snapshot(*a))
            .collect()
    }

    pub fn readings_jsonl(&self) -> String {
        to_jsonl(&self.readings)
    }

    pub fn alarms_jsonl(&self) -> String {
        to_jsonl(&self.alarms)
    }
}

/// Counts skipped and repeated sequence numbers. Devices start at 0 and stamp
/// their first record with 1, so a missing first frame is also a gap.
fn track_sequence(status: &mut DeviceStatus, stats: &mut Stats, seq: u8) {
    match seq.wrapping_sub(status.last_seq) {
        0 => {
            status.duplicates += 1;
            stats.duplicates += 1;
        }
        d => {
            let gap = u64::from(d - 1);
            status.gaps += gap;
            stats.sequence_gaps += gap;
        }
    }
    status.last_seq = seq;
}

pub fn to_jsonl<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("log record serializes"));
        out.push('\n');
    }
    out
}

/// Parses a JSON Lines log, skipping blank lines.
pub fn read_jsonl<T: for<'de> Deserialize<'de>>(reader: impl BufRead) -> io::Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|e| {
            io::Error::new(io::ErrorKind::InvalidData, format!("line {}: {e}", i + 1))
        })?;
        out.push(item);
    }
    Ok(out)
}
