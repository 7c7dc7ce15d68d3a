//! Analog measurement chain of the end device.
//!
//! RTD resistance, Wheatstone bridge, amplifier and ADC are modelled as pure
//! functions over plain parameter structs. Defaults describe a PT100 in a
//! single-active-arm bridge feeding a 10-bit, 8-channel ADC with a 5 V
//! reference.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calibration::CalibrationTable;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChainError {
    #[error("temperature {value} °C outside valid range [{min}, {max}]")]
    OutOfRange { value: f64, min: f64, max: f64 },
    #[error("code {code} outside calibrated span [{min}, {max}]")]
    CodeOutOfRange { code: u16, min: u16, max: u16 },
    #[error("ADC channel {channel} does not exist (channel count {count})")]
    BadChannel { channel: usize, count: usize },
    #[error("calibration table is empty")]
    Uncalibrated,
    #[error("invalid parameter {field}: {reason}")]
    InvalidParameter { field: &'static str, reason: String },
}

/// Quadratic RTD law `R(T) = R0 (1 + A T + B T²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RtdModel {
    pub r0_ohms: f64,
    pub coeff_a: f64,
    pub coeff_b: f64,
    pub valid_range_c: [f64; 2],
}

impl Default for RtdModel {
    fn default() -> Self {
        Self::pt100()
    }
}

impl RtdModel {
    pub const PT100_A: f64 = 3.9083e-3;
    pub const PT100_B: f64 = -5.775e-7;

    pub fn pt100() -> Self {
        Self {
            r0_ohms: 100.0,
            coeff_a: Self::PT100_A,
            coeff_b: Self::PT100_B,
            valid_range_c: [-40.0, 120.0],
        }
    }

    pub fn min_c(&self) -> f64 {
        self.valid_range_c[0]
    }

    pub fn max_c(&self) -> f64 {
        self.valid_range_c[1]
    }

    pub fn validate(&self) -> Result<(), ChainError> {
        if !(self.r0_ohms > 0.0) {
            return Err(invalid("r0_ohms", "must be > 0"));
        }
        let [lo, hi] = self.valid_range_c;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(invalid("valid_range_c", "min must be < max"));
        }
        // dR/dT = R0 (A + 2 B T) is linear in T, so checking both ends suffices.
        let slope = |t: f64| self.coeff_a + 2.0 * self.coeff_b * t;
        if !(slope(lo) > 0.0 && slope(hi) > 0.0) {
            return Err(invalid(
                "coeff_a/coeff_b",
                "resistance must be strictly increasing on the valid range",
            ));
        }
        if self.resistance_unchecked(lo) <= 0.0 {
            return Err(invalid("valid_range_c", "resistance must stay positive"));
        }
        Ok(())
    }

    fn resistance_unchecked(&self, temp_c: f64) -> f64 {
        self.r0_ohms * (1.0 + self.coeff_a * temp_c + self.coeff_b * temp_c * temp_c)
    }

    pub fn contains(&self, temp_c: f64) -> bool {
        temp_c >= self.min_c() && temp_c <= self.max_c()
    }
}

/// Resistance in ohms at `temp_c`.
pub fn rtd_resistance(model: &RtdModel, temp_c: f64) -> Result<f64, ChainError> {
    if !model.contains(temp_c) {
        return Err(ChainError::OutOfRange {
            value: temp_c,
            min: model.min_c(),
            max: model.max_c(),
        });
    }
    Ok(model.resistance_unchecked(temp_c))
}

/// Wheatstone bridge with the RTD in one arm, `r_ref_ohms` opposite it and an
/// ideal half divider on the reference side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BridgeCircuit {
    pub excitation_volts: f64,
    pub r_ref_ohms: f64,
    #[serde(default = "half")]
    pub half_ratio: f64,
}

fn half() -> f64 {
    0.5
}

impl Default for BridgeCircuit {
    fn default() -> Self {
        Self {
            excitation_volts: 5.0,
            r_ref_ohms: 100.0,
            half_ratio: 0.5,
        }
    }
}

impl BridgeCircuit {
    pub fn validate(&self) -> Result<(), ChainError> {
        if !(self.excitation_volts > 0.0) {
            return Err(invalid("excitation_volts", "must be > 0"));
        }
        if !(self.r_ref_ohms > 0.0) {
            return Err(invalid("r_ref_ohms", "must be > 0"));
        }
        if self.half_ratio != 0.5 {
            return Err(invalid(
                "half_ratio",
                "the reference divider is fixed at 0.5",
            ));
        }
        Ok(())
    }
}

/// Differential bridge output `Vex (R / (R + Rref) - 0.5)`.
///
/// Zero exactly when the RTD matches the reference resistor; swapping the two
/// resistances negates the output.
pub fn bridge_output(bridge: &BridgeCircuit, r_rtd: f64) -> f64 {
    let r_ref = bridge.r_ref_ohms;
    // (R - Rref) / (2 (R + Rref)) is the same expression without cancellation
    // at balance, which keeps the antisymmetry exact in floating point.
    bridge.excitation_volts * (r_rtd - r_ref) / (2.0 * (r_rtd + r_ref))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmplifierStage {
    pub gain: f64,
    pub offset_volts: f64,
    pub rail_low: f64,
    pub rail_high: f64,
}

impl Default for AmplifierStage {
    fn default() -> Self {
        Self {
            gain: 6.0,
            offset_volts: 1.8,
            rail_low: 0.0,
            rail_high: 5.0,
        }
    }
}

impl AmplifierStage {
    pub fn validate(&self) -> Result<(), ChainError> {
        if !(self.gain > 0.0) {
            return Err(invalid("gain", "must be > 0"));
        }
        if !(self.rail_low < self.rail_high) {
            return Err(invalid(
                "rail_low/rail_high",
                "rail_low must be < rail_high",
            ));
        }
        Ok(())
    }

    /// Output before rail clamping.
    pub fn linear(&self, v_diff: f64) -> f64 {
        self.gain * v_diff + self.offset_volts
    }

    pub fn is_clamped(&self, v_diff: f64) -> bool {
        let v = self.linear(v_diff);
        v <= self.rail_low || v >= self.rail_high
    }
}

pub fn amplify(amp: &AmplifierStage, v_diff: f64) -> f64 {
    amp.linear(v_diff).clamp(amp.rail_low, amp.rail_high)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdcModel {
    pub resolution_bits: u32,
    pub vref_volts: f64,
    pub channel_count: usize,
}

impl Default for AdcModel {
    fn default() -> Self {
        Self {
            resolution_bits: 10,
            vref_volts: 5.0,
            channel_count: 8,
        }
    }
}

impl AdcModel {
    pub fn max_code(&self) -> u16 {
        ((1u32 << self.resolution_bits) - 1) as u16
    }

    pub fn validate(&self) -> Result<(), ChainError> {
        if !(1..=16).contains(&self.resolution_bits) {
            return Err(invalid("resolution_bits", "must be in 1..=16"));
        }
        if !(self.vref_volts > 0.0) {
            return Err(invalid("vref_volts", "must be > 0"));
        }
        if self.channel_count == 0 {
            return Err(invalid("channel_count", "must be >= 1"));
        }
        Ok(())
    }

    pub fn check_channel(&self, channel: usize) -> Result<(), ChainError> {
        if channel >= self.channel_count {
            return Err(ChainError::BadChannel {
                channel,
                count: self.channel_count,
            });
        }
        Ok(())
    }

    /// Floor quantization, clamped to the code range. NaN reads as zero.
    pub fn quantize(&self, volts: f64) -> u16 {
        let full = f64::from(self.max_code());
        let raw = (volts / self.vref_volts * full).floor();
        if raw.is_nan() || raw <= 0.0 {
            0
        } else if raw >= full {
            self.max_code()
        } else {
            raw as u16
        }
    }
}

pub fn adc_sample(adc: &AdcModel, volts: f64, channel: usize) -> Result<u16, ChainError> {
    adc.check_channel(channel)?;
    Ok(adc.quantize(volts))
}

/// Engineering-unit recovery through a calibration table.
pub fn temperature_from_code(cal: &CalibrationTable, code: u16) -> Result<f64, ChainError> {
    cal.temperature_from_code(code)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OilState {
    Normal,
    Low,
}

impl OilState {
    pub fn is_low(self) -> bool {
        self == OilState::Low
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OilLevelSensor {
    pub level_mm: f64,
    pub low_threshold_mm: f64,
}

pub fn oil_level_state(sensor: &OilLevelSensor) -> OilState {
    if sensor.level_mm < sensor.low_threshold_mm {
        OilState::Low
    } else {
        OilState::Normal
    }
}

/// Every stage of the temperature path, as configured on one device.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalChain {
    #[serde(default)]
    pub rtd: RtdModel,
    #[serde(default)]
    pub bridge: BridgeCircuit,
    #[serde(default)]
    pub amplifier: AmplifierStage,
    #[serde(default)]
    pub adc: AdcModel,
}

/// Intermediate values of one pass through the chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainReading {
    pub resistance_ohms: f64,
    pub bridge_volts: f64,
    pub amp_volts: f64,
    pub code: u16,
}

impl SignalChain {
    pub fn validate(&self) -> Result<(), ChainError> {
        self.rtd.validate()?;
        self.bridge.validate()?;
        self.amplifier.validate()?;
        self.adc.validate()
    }

    pub fn forward(&self, temp_c: f64, channel: usize) -> Result<ChainReading, ChainError> {
        let resistance_ohms = rtd_resistance(&self.rtd, temp_c)?;
        let bridge_volts = bridge_output(&self.bridge, resistance_ohms);
        let amp_volts = amplify(&self.amplifier, bridge_volts);
        let code = adc_sample(&self.adc, amp_volts, channel)?;
        Ok(ChainReading {
            resistance_ohms,
            bridge_volts,
            amp_volts,
            code,
        })
    }

    /// True when the amplifier output at `temp_c` sits on a rail.
    pub fn is_clamped_at(&self, temp_c: f64) -> Result<bool, ChainError> {
        let r = rtd_resistance(&self.rtd, temp_c)?;
        Ok(self.amplifier.is_clamped(bridge_output(&self.bridge, r)))
    }
}

fn invalid(field: &'static str, reason: &str) -> ChainError {
    ChainError::InvalidParameter {
        field,
        reason: reason.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Independent oracles: the textbook forms, evaluated separately from the
    // implementation's rearranged expressions.
    fn poly(r0: f64, a: f64, b: f64, t: f64) -> f64 {
        r0 + r0 * a * t + r0 * b * t.powi(2)
    }

    fn divider_bridge(vex: f64, r_ref: f64, r: f64) -> f64 {
        vex * (r / (r + r_ref)) - vex * 0.5
    }

    #[test]
    fn rtd_zero_point_is_r0() {
        assert_eq!(rtd_resistance(&RtdModel::pt100(), 0.0).unwrap(), 100.0);
    }

    #[test]
    fn rtd_pt100_reference_points() {
        let m = RtdModel::pt100();
        let at100 = poly(100.0, 3.9083e-3, -5.775e-7, 100.0);
        let at50 = poly(100.0, 3.9083e-3, -5.775e-7, 50.0);
        assert!((at100 - 138.5055).abs() < 5e-5);
        assert!((at50 - 119.3971).abs() < 5e-5, "{at50}");
        assert!((rtd_resistance(&m, 100.0).unwrap() - at100).abs() < 1e-9);
        assert!((rtd_resistance(&m, 50.0).unwrap() - at50).abs() < 1e-9);
    }

    #[test]
    fn rtd_rejects_out_of_range() {
        let m = RtdModel::pt100();
        assert!(matches!(
            rtd_resistance(&m, 120.01),
            Err(ChainError::OutOfRange { .. })
        ));
        assert!(rtd_resistance(&m, -40.0).is_ok());
    }

    #[test]
    fn rtd_validate_catches_decreasing_law() {
        let m = RtdModel {
            coeff_b: -1e-2,
            ..RtdModel::pt100()
        };
        assert!(m.validate().is_err());
        assert!(RtdModel::pt100().validate().is_ok());
    }

    #[test]
    fn bridge_balanced_and_reference_value() {
        let b = BridgeCircuit::default();
        assert_eq!(bridge_output(&b, 100.0), 0.0);
        let oracle = divider_bridge(5.0, 100.0, 138.5055);
        assert!((oracle - 0.403613).abs() < 1e-6);
        assert!((bridge_output(&b, 138.5055) - oracle).abs() < 1e-12);
        assert!((bridge_output(&b, 1e12) - 2.5).abs() < 1e-9);
    }

    #[test]
    fn amplifier_offset_affine_and_clamp() {
        let a = AmplifierStage::default();
        assert_eq!(amplify(&a, 0.0), 1.8);
        let oracle: f64 = 6.0 * 0.403613 + 1.8;
        assert!((oracle - 4.22168).abs() < 1e-5);
        assert!((amplify(&a, 0.403613) - oracle).abs() < 1e-12);
        assert_eq!(amplify(&a, 1.0), 5.0);
        assert_eq!(amplify(&a, -1.0), 0.0);
    }

    #[test]
    fn adc_examples() {
        let adc = AdcModel::default();
        assert_eq!(adc_sample(&adc, 0.0, 0).unwrap(), 0);
        assert_eq!(adc_sample(&adc, 5.0, 0).unwrap(), 1023);
        // floor(4.22168 / 5 * 1023) = floor(863.795...)
        assert_eq!((4.22168_f64 / 5.0 * 1023.0).floor(), 863.0);
        assert_eq!(adc_sample(&adc, 4.22168, 7).unwrap(), 863);
        assert_eq!(
            adc_sample(&adc, 1.0, 8),
            Err(ChainError::BadChannel {
                channel: 8,
                count: 8
            })
        );
        assert_eq!(adc.quantize(-3.0), 0);
        assert_eq!(adc.quantize(1e9), 1023);
        assert_eq!(adc.quantize(f64::NAN), 0);
    }

    #[test]
    fn full_chain_at_100c_gives_863() {
        let chain = SignalChain::default();
        let r = chain.forward(100.0, 0).unwrap();
        assert_eq!(r.code, 863);
        assert!((r.amp_volts - 4.22168).abs() < 1e-5);
    }

    #[test]
    fn default_chain_window() {
        let chain = SignalChain::default();
        let lo = chain.forward(-40.0, 0).unwrap().amp_volts;
        let hi = chain.forward(120.0, 0).unwrap().amp_volts;
        assert!((lo - 0.52).abs() < 0.01, "{lo}");
        assert!((hi - 4.61).abs() < 0.01, "{hi}");
        assert!(!chain.is_clamped_at(-40.0).unwrap());
        assert!(!chain.is_clamped_at(120.0).unwrap());
    }

    #[test]
    fn oil_state_boundaries() {
        let s = |level| {
            oil_level_state(&OilLevelSensor {
                level_mm: level,
                low_threshold_mm: 100.0,
            })
        };
        assert_eq!(s(120.0), OilState::Normal);
        assert_eq!(s(80.0), OilState::Low);
        assert_eq!(s(100.0), OilState::Normal);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn adc_never_leaves_code_range(v in -1e6f64..1e6) {
                let adc = AdcModel::default();
                prop_assert!(adc.quantize(v) <= 1023);
            }

            #[test]
            fn adc_monotone(a in -10f64..10.0, b in -10f64..10.0) {
                let adc = AdcModel::default();
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                prop_assert!(adc.quantize(lo) <= adc.quantize(hi));
            }

            #[test]
            fn bridge_antisymmetric(r in 1e-3f64..1e4, r_ref in 1e-3f64..1e4, vex in 0.1f64..24.0) {
                let b1 = BridgeCircuit { excitation_volts: vex, r_ref_ohms: r_ref, half_ratio: 0.5 };
                let b2 = BridgeCircuit { r_ref_ohms: r, ..b1 };
                prop_assert_eq!(bridge_output(&b1, r), -bridge_output(&b2, r_ref));
            }

            #[test]
            fn chain_monotone(t1 in -40f64..=120.0, t2 in -40f64..=120.0) {
                let chain = SignalChain::default();
                let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
                prop_assert!(chain.forward(lo, 0).unwrap().code <= chain.forward(hi, 0).unwrap().code);
            }
        }
    }
}
