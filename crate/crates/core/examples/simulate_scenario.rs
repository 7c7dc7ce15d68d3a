// Load the bundled mesh scenario, run it, and replay its trace into a fresh
// coordinator.

use std::error::Error;
use std::path::Path;

use dtms::config;
use dtms::coordinator::Coordinator;
use dtms::network::sim::{replay_trace, run, EventKind};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/demo.json");
    let cfg = config::load(&path)?;
    let scenario = cfg.config.to_scenario(&cfg.base_dir)?;
    let out = run(&scenario)?;
    let s = &out.summary;
    println!(
        "sent {} delivered {} dropped {}",
        s.sent, s.delivered, s.dropped
    );
    for d in &s.devices {
        println!("  {} dropped {}", d.addr, d.dropped);
    }
    for e in &out.trace.events {
        if let EventKind::Alarm {
            device,
            kind,
            state,
        } = &e.kind
        {
            println!("{:>9.3} s  {device} {kind:?} {state:?}", e.t_s);
        }
    }
    println!("trace digest {:016x}", out.trace.digest());

    let mut fresh = Coordinator::new(scenario.coordinator_config());
    replay_trace(&out.trace, &mut fresh)?;
    assert_eq!(fresh.readings_jsonl(), out.coordinator.readings_jsonl());
    assert_eq!(fresh.alarms_jsonl(), out.coordinator.alarms_jsonl());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
