// Drive a coordinator by hand: a temperature excursion with hysteresis, an
// oil-level drop and a silent device.

use std::error::Error;

use dtms::calibration::{default_sweep_temps, CalibrationTable};
use dtms::coordinator::{Coordinator, CoordinatorConfig, DeviceRegistration};
use dtms::end_device::{init_device, DeviceConfig, Environment};
use dtms::{NodeAddr, SimTime};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let config = DeviceConfig::new(NodeAddr(0xBEEF));
    let table = CalibrationTable::for_chain(&config.chain, 0, &default_sweep_temps())?;
    let mut device = init_device(config.clone(), table.clone())?;
    let mut coord = Coordinator::new(CoordinatorConfig::new(vec![DeviceRegistration {
        addr: config.addr,
        sample_period: SimTime::from_secs(60),
        temp_high_c: config.temp_high_c,
        table,
    }]));

    let script = [
        (85.0, 150.0),
        (95.0, 150.0),
        (96.0, 150.0),
        (85.0, 90.0),
        (85.0, 90.0),
    ];
    for (i, (temp_c, oil_level_mm)) in script.into_iter().enumerate() {
        let now = SimTime::from_secs(60 * i as u32);
        let (_, frame) = device.sample_cycle(
            Environment {
                temp_c,
                oil_level_mm,
            },
            now.whole_secs(),
        )?;
        let got = coord.ingest(&frame, now, 1)?;
        let rows = &coord.lcd().rows;
        println!("|{}|  |{}|", rows[0], rows[1]);
        for a in got.alarms {
            println!("  {:?} {:?} at {} s", a.kind, a.state, a.at_s);
        }
    }
    // No more frames: the device goes offline three periods after the last.
    for a in coord.advance_to(SimTime::from_secs(1000)) {
        println!("  {:?} {:?} at {} s", a.kind, a.state, a.at_s);
    }
    println!("{}", serde_json::to_string_pretty(coord.stats())?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
