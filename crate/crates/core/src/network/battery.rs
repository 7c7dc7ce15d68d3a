use serde::{Deserialize, Serialize};

pub const BATTERY_FULL_MV: u16 = 3300;
pub const BATTERY_EMPTY_MV: u16 = 2100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatteryModel {
    pub capacity_mah: f64,
    pub active_current_ma: f64,
    pub sleep_current_ma: f64,
    pub duty_cycle: f64,
}

impl Default for BatteryModel {
    fn default() -> Self {
        Self {
            capacity_mah: 1000.0,
            active_current_ma: 40.0,
            sleep_current_ma: 0.01,
            duty_cycle: 0.01,
        }
    }
}

impl BatteryModel {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.capacity_mah > 0.0) {
            return Err("capacity_mah must be > 0".into());
        }
        if !(self.sleep_current_ma >= 0.0 && self.active_current_ma >= self.sleep_current_ma) {
            return Err("currents must satisfy active >= sleep >= 0".into());
        }
        if !(self.duty_cycle > 0.0 && self.duty_cycle <= 1.0) {
            return Err("duty_cycle must be in (0, 1]".into());
        }
        if self.average_current_ma() <= 0.0 {
            return Err("average current must be > 0".into());
        }
        Ok(())
    }

    pub fn average_current_ma(&self) -> f64 {
        self.duty_cycle * self.active_current_ma + (1.0 - self.duty_cycle) * self.sleep_current_ma
    }
}

/// Hours until the capacity is exhausted at the duty-cycled average current.
pub fn lifetime_hours(battery: &BatteryModel) -> f64 {
    battery.capacity_mah / battery.average_current_ma()
}

/// Terminal voltage after `elapsed_s`, discharging linearly from full to
/// empty over the estimated lifetime.
pub fn battery_mv(battery: &BatteryModel, elapsed_s: f64) -> u16 {
    let frac = (elapsed_s / 3600.0 / lifetime_hours(battery)).clamp(0.0, 1.0);
    let span = f64::from(BATTERY_FULL_MV - BATTERY_EMPTY_MV);
    (f64::from(BATTERY_FULL_MV) - span * frac).round() as u16
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(duty: f64) -> BatteryModel {
        BatteryModel {
            duty_cycle: duty,
            ..BatteryModel::default()
        }
    }

    #[test]
    fn always_on() {
        assert_eq!(lifetime_hours(&model(1.0)), 25.0);
    }

    #[test]
    fn one_percent_duty() {
        // 1000 / (0.01·40 + 0.99·0.01) = 1000 / 0.4099
        let oracle = 1000.0 / 0.4099;
        assert!((lifetime_hours(&model(0.01)) - oracle).abs() < 1e-9);
        assert!((oracle - 2439.6).abs() < 0.1);
    }

    #[test]
    fn monotone_in_duty_and_current() {
        let duties = [0.001, 0.01, 0.1, 1.0];
        for w in duties.windows(2) {
            assert!(lifetime_hours(&model(w[0])) > lifetime_hours(&model(w[1])));
        }
        let hungry = BatteryModel {
            active_current_ma: 80.0,
            ..model(0.01)
        };
        assert!(lifetime_hours(&hungry) < lifetime_hours(&model(0.01)));
    }

    #[test]
    fn voltage_discharge() {
        let b = model(1.0);
        assert_eq!(battery_mv(&b, 0.0), 3300);
        assert_eq!(battery_mv(&b, 12.5 * 3600.0), 2700);
        assert_eq!(battery_mv(&b, 1e9), 2100);
    }

    #[test]
    fn validation() {
        assert!(BatteryModel::default().validate().is_ok());
        assert!(model(0.0).validate().is_err());
        assert!(BatteryModel {
            sleep_current_ma: 50.0,
            ..model(0.5)
        }
        .validate()
        .is_err());
    }
}
