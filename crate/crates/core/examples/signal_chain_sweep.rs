// Push temperatures through RTD, bridge, amplifier and ADC, then read them
// back through a calibration table.

use std::error::Error;

use dtms::calibration::{default_sweep_temps, CalibrationTable};
use dtms::signal_chain::SignalChain;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let chain = SignalChain::default();
    let table = CalibrationTable::for_chain(&chain, 0, &default_sweep_temps())?;
    println!(
        "{:>7} {:>9} {:>8} {:>7} {:>5} {:>8}",
        "°C", "ohm", "bridge", "amp", "code", "back °C"
    );
    for t in [-40.0, 0.0, 25.0, 60.0, 90.0, 100.0, 120.0] {
        let r = chain.forward(t, 0)?;
        let back = table.temperature_from_code(r.code)?;
        println!(
            "{t:>7.1} {:>9.4} {:>8.5} {:>7.4} {:>5} {back:>8.2}",
            r.resistance_ohms, r.bridge_volts, r.amp_volts, r.code
        );
    }
    assert_eq!(chain.forward(100.0, 0)?.code, 863);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
