use serde::{Deserialize, Serialize};

use super::Reading;
use crate::NodeAddr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AlarmKind {
    TempHigh,
    OilLow,
    DeviceOffline,
}

impl AlarmKind {
    pub const ALL: [AlarmKind; 3] = [
        AlarmKind::TempHigh,
        AlarmKind::OilLow,
        AlarmKind::DeviceOffline,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AlarmState {
    Raised,
    Cleared,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlarmEvent {
    #[serde(rename = "addr")]
    pub device_addr: NodeAddr,
    pub kind: AlarmKind,
    pub state: AlarmState,
    pub at_s: f64,
    pub reading: Option<Reading>,
}

/// Edge-triggered alarm state for one device.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AlarmTracker {
    temp_high: bool,
    oil_low: bool,
    offline: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlarmLimits {
    pub temp_high_c: f64,
    pub hysteresis_c: f64,
}

impl AlarmTracker {
    pub fn is_active(&self, kind: AlarmKind) -> bool {
        match kind {
            AlarmKind::TempHigh => self.temp_high,
            AlarmKind::OilLow => self.oil_low,
            AlarmKind::DeviceOffline => self.offline,
        }
    }

    /// Replays a logged transition without side effects.
    pub fn apply(&mut self, kind: AlarmKind, state: AlarmState) {
        let slot = match kind {
            AlarmKind::TempHigh => &mut self.temp_high,
            AlarmKind::OilLow => &mut self.oil_low,
            AlarmKind::DeviceOffline => &mut self.offline,
        };
        *slot = state == AlarmState::Raised;
    }

    /// Transitions caused by a new reading.
    ///
    /// TempHigh raises on the device's high flag and clears once the
    /// coordinator temperature falls to `threshold - hysteresis`. OilLow follows
    /// the oil state edges. A pending DeviceOffline clears first.
    pub fn on_reading(
        &mut self,
        reading: &Reading,
        temp_high_flag: bool,
        limits: AlarmLimits,
    ) -> Vec<(AlarmKind, AlarmState)> {
        let mut out = Vec::new();
        if self.offline {
            self.offline = false;
            out.push((AlarmKind::DeviceOffline, AlarmState::Cleared));
        }
        if !self.temp_high && temp_high_flag {
            self.temp_high = true;
            out.push((AlarmKind::TempHigh, AlarmState::Raised));
        } else if self.temp_high && reading.temp_c <= limits.temp_high_c - limits.hysteresis_c {
            self.temp_high = false;
            out.push((AlarmKind::TempHigh, AlarmState::Cleared));
        }
        let low = reading.oil_state.is_low();
        if low != self.oil_low {
            self.oil_low = low;
            let state = if low {
                AlarmState::Raised
            } else {
                AlarmState::Cleared
            };
            out.push((AlarmKind::OilLow, state));
        }
        out
    }

    /// Raises DeviceOffline unless already raised.
    pub fn on_silence(&mut self) -> Option<(AlarmKind, AlarmState)> {
        if self.offline {
            return None;
        }
        self.offline = true;
        Some((AlarmKind::DeviceOffline, AlarmState::Raised))
    }
}
