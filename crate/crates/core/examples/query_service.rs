// Serve a coordinator on a local port, stream raw frames into it and query
// it over the length-prefixed JSON protocol.

use std::error::Error;
use std::io::Write;
use std::net::{Shutdown, TcpStream};
use std::sync::Arc;

use dtms::calibration::{default_sweep_temps, CalibrationTable};
use dtms::coordinator::service::{request, ManualClock, Server};
use dtms::coordinator::{Coordinator, CoordinatorConfig, DeviceRegistration};
use dtms::end_device::{init_device, DeviceConfig, Environment};
use dtms::{NodeAddr, SimTime};
use parking_lot::RwLock;
use serde_json::json;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let config = DeviceConfig::new(NodeAddr(0xBEEF));
    let table = CalibrationTable::for_chain(&config.chain, 0, &default_sweep_temps())?;
    let coord = Coordinator::new(CoordinatorConfig::new(vec![DeviceRegistration {
        addr: config.addr,
        sample_period: SimTime::from_secs(60),
        temp_high_c: 90.0,
        table: table.clone(),
    }]));
    let clock = Arc::new(ManualClock::default());
    let server = Server::bind("127.0.0.1:0", Arc::new(RwLock::new(coord)), clock.clone())?;
    let shared = server.coordinator();
    let (addr, handle) = server.spawn()?;

    let mut device = init_device(config, table)?;
    let mut feed = TcpStream::connect(addr)?;
    for i in 0..5u32 {
        let env = Environment {
            temp_c: 60.0 + 5.0 * i as f64,
            oil_level_mm: 150.0,
        };
        feed.write_all(&device.sample_cycle(env, i * 60)?.1)?;
    }
    feed.shutdown(Shutdown::Write)?;
    // Wait until the stream has been drained.
    while shared.read().stats().frames_ok < 5 {
        std::thread::yield_now();
    }
    clock.set(SimTime::from_secs(240));

    let mut conn = TcpStream::connect(addr)?;
    for q in [
        json!({"query": "devices"}),
        json!({"query": "readings", "device": "000000000000BEEF", "from_s": 0, "to_s": 0}),
        json!({"query": "lcd"}),
        json!({"query": "no_such_query"}),
    ] {
        println!("> {q}\n< {}", request(&mut conn, &q)?);
    }
    println!("< {}", request(&mut conn, &json!({"query": "shutdown"}))?);
    handle.join().map_err(|_| "server thread panicked")??;
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
