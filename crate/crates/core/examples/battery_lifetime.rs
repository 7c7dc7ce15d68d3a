// Battery lifetime against duty cycle, and the voltage a device reports.

use std::error::Error;

use dtms::network::{battery_mv, lifetime_hours, BatteryModel};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    for duty in [0.001, 0.01, 0.1, 1.0] {
        let b = BatteryModel {
            duty_cycle: duty,
            ..BatteryModel::default()
        };
        b.validate()?;
        let hours = lifetime_hours(&b);
        println!(
            "duty {duty:>6}: {:>9.1} h ({:>6.1} days), {} mV at half life",
            hours,
            hours / 24.0,
            battery_mv(&b, hours * 1800.0)
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
