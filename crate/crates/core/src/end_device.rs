//! Transmitter-side state machine: sample, classify, record, encode.

use std::collections::VecDeque;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calibration::{default_sweep_temps, CalibrationError, CalibrationTable};
use crate::frame::{self, TelemetryPayload, FLAG_OIL_LOW, FLAG_TEMP_HIGH, TELEMETRY_FRAME_LEN};
use crate::network::battery::{battery_mv, BatteryModel};
use crate::signal_chain::{oil_level_state, ChainError, OilLevelSensor, OilState, SignalChain};
use crate::NodeAddr;

#[derive(Debug, Error)]
pub enum DeviceError {
    #[error("invalid device config: {field}: {reason}")]
    InvalidConfig { field: String, reason: String },
    #[error(transparent)]
    Chain(#[from] ChainError),
}

fn invalid(field: &str, reason: impl Into<String>) -> DeviceError {
    DeviceError::InvalidConfig {
        field: field.to_string(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceConfig {
    pub addr: NodeAddr,
    #[serde(default = "default_period")]
    pub sample_period_s: f64,
    /// Time of the first sample.
    #[serde(default)]
    pub phase_s: f64,
    #[serde(default = "default_temp_high")]
    pub temp_high_c: f64,
    #[serde(default = "default_oil_low")]
    pub oil_low_mm: f64,
    #[serde(default)]
    pub adc_channel_temp: usize,
    #[serde(default)]
    pub chain: SignalChain,
    #[serde(default = "default_ring")]
    pub ring_capacity: usize,
    #[serde(default)]
    pub battery: BatteryModel,
    /// JSON calibration table; when absent the table is built from an ideal
    /// sweep of `chain` over the default temperatures.
    #[serde(default)]
    pub calibration: Option<PathBuf>,
}

fn default_period() -> f64 {
    60.0
}
fn default_temp_high() -> f64 {
    90.0
}
fn default_oil_low() -> f64 {
    100.0
}
fn default_ring() -> usize {
    64
}

impl DeviceConfig {
    pub fn new(addr: NodeAddr) -> Self {
        Self {
            addr,
            sample_period_s: default_period(),
            phase_s: 0.0,
            temp_high_c: default_temp_high(),
            oil_low_mm: default_oil_low(),
            adc_channel_temp: 0,
            chain: SignalChain::default(),
            ring_capacity: default_ring(),
            battery: BatteryModel::default(),
            calibration: None,
        }
    }

    pub fn validate(&self) -> Result<(), DeviceError> {
        if !(self.sample_period_s > 0.0 && self.sample_period_s.is_finite()) {
            return Err(invalid("sample_period_s", "must be > 0"));
        }
        if !(self.phase_s >= 0.0 && self.phase_s.is_finite()) {
            return Err(invalid("phase_s", "must be >= 0"));
        }
        if self.ring_capacity == 0 {
            return Err(invalid("ring_capacity", "must be >= 1"));
        }
        if !self.temp_high_c.is_finite() {
            return Err(invalid("temp_high_c", "must be finite"));
        }
        if !self.oil_low_mm.is_finite() {
            return Err(invalid("oil_low_mm", "must be finite"));
        }
        self.chain
            .validate()
            .map_err(|e| invalid("chain", e.to_string()))?;
        if self.adc_channel_temp >= self.chain.adc.channel_count {
            return Err(invalid(
                "adc_channel_temp",
                format!(
                    "channel {} >= channel count {}",
                    self.adc_channel_temp, self.chain.adc.channel_count
                ),
            ));
        }
        self.battery.validate().map_err(|e| invalid("battery", e))?;
        Ok(())
    }

    /// Loads or builds the calibration table; relative paths resolve against
    /// `base_dir`.
    pub fn calibration_table(&self, base_dir: &Path) -> Result<CalibrationTable, CalibrationError> {
        match &self.calibration {
            Some(p) => CalibrationTable::load(&base_dir.join(p)),
            None => CalibrationTable::for_chain(
                &self.chain,
                self.adc_channel_temp,
                &default_sweep_temps(),
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetryRecord {
    pub sequence: u8,
    pub timestamp_s: u32,
    pub temp_code: u16,
    pub temp_c_local: f64,
    pub oil_state: OilState,
    pub status_flags: u8,
    pub battery_mv: u16,
}

/// Bounded FIFO; pushing into a full buffer evicts the oldest entry.
#[derive(Debug, Clone, PartialEq)]
pub struct RingBuffer<T> {
    capacity: usize,
    items: VecDeque<T>,
}

impl<T> RingBuffer<T> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1);
        Self {
            capacity,
            items: VecDeque::with_capacity(capacity),
        }
    }

    pub fn push(&mut self, item: T) -> Option<T> {
        let evicted = if self.items.len() == self.capacity {
            self.items.pop_front()
        } else {
            None
        };
        self.items.push_back(item);
        evicted
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.items.iter()
    }

    pub fn latest(&self) -> Option<&T> {
        self.items.back()
    }
}

/// Sensor inputs at one sampling instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub temp_c: f64,
    pub oil_level_mm: f64,
}

#[derive(Debug, Clone)]
pub struct DeviceState {
    config: DeviceConfig,
    table: CalibrationTable,
    sequence: u8,
    ring: RingBuffer<TelemetryRecord>,
}

pub fn init_device(
    config: DeviceConfig,
    table: CalibrationTable,
) -> Result<DeviceState, DeviceError> {
    config.validate()?;
    Ok(DeviceState {
        ring: RingBuffer::new(config.ring_capacity),
        config,
        table,
        sequence: 0,
    })
}

/// Status flag byte: bit1 when `temp_c >= temp_high_c`, bit0 when oil is low.
pub fn classify(temp_c: f64, oil: OilState, config: &DeviceConfig) -> u8 {
    let mut flags = 0;
    if temp_c >= config.temp_high_c {
        flags |= FLAG_TEMP_HIGH;
    }
    if oil.is_low() {
        flags |= FLAG_OIL_LOW;
    }
    flags
}

impl DeviceState {
    pub fn config(&self) -> &DeviceConfig {
        &self.config
    }

    pub fn table(&self) -> &CalibrationTable {
        &self.table
    }

    pub fn addr(&self) -> NodeAddr {
        self.config.addr
    }

    /// Sequence number of the most recent record; 0 after init, so the
    /// first record carries 1.
    pub fn sequence(&self) -> u8 {
        self.sequence
    }

    pub fn ring(&self) -> &RingBuffer<TelemetryRecord> {
        &self.ring
    }

    /// Samples the chain, classifies, records and encodes one frame.
    ///
    /// Nothing is recorded and the sequence does not advance on error.
    pub fn sample_cycle(
        &mut self,
        env: Environment,
        now_s: u32,
    ) -> Result<(TelemetryRecord, [u8; TELEMETRY_FRAME_LEN]), DeviceError> {
        let reading = self
            .config
            .chain
            .forward(env.temp_c, self.config.adc_channel_temp)?;
        let temp_c_local = self.table.temperature_from_code(reading.code)?;
        let oil_state = oil_level_state(&OilLevelSensor {
            level_mm: env.oil_level_mm,
            low_threshold_mm: self.config.oil_low_mm,
        });
        let sequence = self.sequence.wrapping_add(1);
        let record = TelemetryRecord {
            sequence,
            timestamp_s: now_s,
            temp_code: reading.code,
            temp_c_local,
            oil_state,
            status_flags: classify(temp_c_local, oil_state, &self.config),
            battery_mv: battery_mv(&self.config.battery, f64::from(now_s)),
        };
        let bytes = frame::encode(&TelemetryPayload {
            source_addr: self.config.addr,
            sequence: record.sequence,
            timestamp_s: record.timestamp_s,
            temp_code: record.temp_code,
            status_flags: record.status_flags,
            battery_mv: record.battery_mv,
        })
        .expect("device records satisfy payload invariants");
        self.ring.push(record.clone());
        self.sequence = sequence;
        Ok((record, bytes))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::decode;

    fn device() -> DeviceState {
        let cfg = DeviceConfig {
            ring_capacity: 8,
            ..DeviceConfig::new(NodeAddr(0xBEEF))
        };
        let table = cfg.calibration_table(Path::new(".")).unwrap();
        init_device(cfg, table).unwrap()
    }

    fn env(temp_c: f64, oil_level_mm: f64) -> Environment {
        Environment {
            temp_c,
            oil_level_mm,
        }
    }

    #[test]
    fn init_resets_state() {
        let d = device();
        assert_eq!(d.sequence(), 0);
        assert!(d.ring().is_empty());
    }

    #[test]
    fn init_rejects_bad_channel_and_ring() {
        let table = DeviceConfig::new(NodeAddr(1))
            .calibration_table(Path::new("."))
            .unwrap();
        let cfg = DeviceConfig {
            adc_channel_temp: 8,
            ..DeviceConfig::new(NodeAddr(1))
        };
        match init_device(cfg, table.clone()) {
            Err(DeviceError::InvalidConfig { field, .. }) => assert_eq!(field, "adc_channel_temp"),
            other => panic!("{other:?}"),
        }
        let cfg = DeviceConfig {
            ring_capacity: 0,
            ..DeviceConfig::new(NodeAddr(1))
        };
        match init_device(cfg, table.clone()) {
            Err(DeviceError::InvalidConfig { field, .. }) => assert_eq!(field, "ring_capacity"),
            other => panic!("{other:?}"),
        }
        let cfg = DeviceConfig {
            adc_channel_temp: 7,
            ..DeviceConfig::new(NodeAddr(1))
        };
        assert!(init_device(cfg, table).is_ok());
    }

    #[test]
    fn classify_boundaries() {
        let cfg = DeviceConfig::new(NodeAddr(1));
        assert_eq!(classify(89.99, OilState::Normal, &cfg), 0x00);
        assert_eq!(classify(90.0, OilState::Normal, &cfg), 0x02);
        assert_eq!(classify(50.0, OilState::Low, &cfg), 0x01);
        assert_eq!(classify(120.0, OilState::Low, &cfg), 0x03);
    }

    #[test]
    fn sample_flags() {
        let mut d = device();
        let (rec, _) = d.sample_cycle(env(70.0, 120.0), 0).unwrap();
        assert_eq!(rec.status_flags, 0x00);
        let (rec, _) = d.sample_cycle(env(95.0, 80.0), 60).unwrap();
        assert_eq!(rec.status_flags, 0x03);
        assert_eq!(rec.oil_state, OilState::Low);
    }

    #[test]
    fn sequence_wraps_after_300_cycles() {
        let mut d = device();
        let mut last = None;
        for i in 0..300u32 {
            last = Some(d.sample_cycle(env(40.0, 150.0), i * 60).unwrap().0);
        }
        assert_eq!(last.unwrap().sequence, 44);
        assert_eq!(d.sequence(), 44);
    }

    #[test]
    fn ring_keeps_last_records() {
        let mut d = device();
        for i in 0..20u32 {
            d.sample_cycle(env(40.0, 150.0), i).unwrap();
        }
        let stamps: Vec<u32> = d.ring().iter().map(|r| r.timestamp_s).collect();
        assert_eq!(stamps, (12..20).collect::<Vec<_>>());
    }

    #[test]
    fn frame_reproduces_record() {
        let mut d = device();
        let (rec, bytes) = d.sample_cycle(env(100.0, 90.0), 3600).unwrap();
        let p = decode(&bytes).unwrap();
        assert_eq!(p.source_addr, NodeAddr(0xBEEF));
        assert_eq!(p.sequence, rec.sequence);
        assert_eq!(p.timestamp_s, 3600);
        assert_eq!(p.temp_code, 863);
        assert_eq!(p.status_flags, rec.status_flags);
        assert_eq!(p.battery_mv, rec.battery_mv);
    }

    #[test]
    fn out_of_range_environment_is_rejected_without_side_effects() {
        let mut d = device();
        assert!(matches!(
            d.sample_cycle(env(200.0, 150.0), 0),
            Err(DeviceError::Chain(ChainError::OutOfRange { .. }))
        ));
        assert_eq!(d.sequence(), 0);
        assert!(d.ring().is_empty());
    }

    #[test]
    fn consecutive_records_differ_by_one() {
        let mut d = device();
        let seqs: Vec<u8> = (0..600u32)
            .map(|i| d.sample_cycle(env(40.0, 150.0), i).unwrap().0.sequence)
            .collect();
        assert_eq!(seqs[0], 1);
        assert!(seqs.windows(2).all(|w| w[1] == w[0].wrapping_add(1)));
    }
}
