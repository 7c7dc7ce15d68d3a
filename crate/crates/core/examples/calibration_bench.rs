// Bench calibration: sweep the chain through a lossy simulated link, fit
// the transmitted-volts to received-code line and check the constant ratio.

use std::error::Error;

use dtms::calibration::{
    default_sweep_temps, points_to_csv, ratio_spread, run_sweep, verify_constancy,
    CalibrationTable, DEFAULT_TOLERANCE_CODES,
};
use dtms::network::{build_topology, NodeSpec, RadioModel, Role, SimulatedTransport};
use dtms::signal_chain::{AmplifierStage, SignalChain};
use dtms::{NodeAddr, SimTime};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let topology = build_topology(
        &[
            NodeSpec::new(0xC0, Role::Coordinator, 0.0, 0.0),
            NodeSpec::new(0x01, Role::EndDevice, 400.0, 0.0),
        ],
        1000.0,
    )?;
    let mut link = SimulatedTransport {
        topology: &topology,
        src: NodeAddr(0x01),
        radio: RadioModel::lossy(0.3, 1),
        rng: ChaCha8Rng::seed_from_u64(5),
        clock: SimTime::ZERO,
    };
    let chain = SignalChain::default();
    let sweep = run_sweep(&default_sweep_temps(), &chain, 0, &mut link)?;
    for m in &sweep.missing {
        println!("lost {:>6.1} °C: {}", m.set_temp_c, m.reason);
    }
    print!("{}", points_to_csv(&sweep.points));
    let table = CalibrationTable::from_points(sweep.points)?;
    println!(
        "slope {:.2} codes/V, intercept {:.2}, max residual {:.3}",
        table.slope_codes_per_volt, table.intercept_codes, table.max_residual_codes
    );
    println!("{:?}", verify_constancy(&table, DEFAULT_TOLERANCE_CODES));

    // Without the amplifier offset the code/volt ratio itself is constant.
    let zero = SignalChain {
        amplifier: AmplifierStage {
            offset_volts: 0.0,
            ..chain.amplifier
        },
        ..chain
    };
    let points = run_sweep(
        &default_sweep_temps(),
        &zero,
        0,
        &mut dtms::calibration::IdealTransport,
    )?
    .points;
    if let Some(spread) = ratio_spread(&points, 0.5) {
        println!("zero-offset ratio spread {:.3}%", spread * 100.0);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
