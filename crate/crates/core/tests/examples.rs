//! Every example in `examples/` runs to completion.

#[allow(dead_code)]
mod frame_roundtrip {
    include!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/frame_roundtrip.rs"
    ));
}

#[test]
fn frame_roundtrip_runs() {
    frame_roundtrip::run_example().expect("frame_roundtrip example should run");
}

#[allow(dead_code)]
mod signal_chain_sweep {
    include!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/signal_chain_sweep.rs"
    ));
}

#[test]
fn signal_chain_sweep_runs() {
    signal_chain_sweep::run_example().expect("signal_chain_sweep example should run");
}

#[allow(dead_code)]
mod calibration_bench {
    include!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/calibration_bench.rs"
    ));
}

#[test]
fn calibration_bench_runs() {
    calibration_bench::run_example().expect("calibration_bench example should run");
}

#[allow(dead_code)]
mod mesh_delivery {
    include!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/mesh_delivery.rs"
    ));
}

#[test]
fn mesh_delivery_runs() {
    mesh_delivery::run_example().expect("mesh_delivery example should run");
}

#[allow(dead_code)]
mod battery_lifetime {
    include!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/battery_lifetime.rs"
    ));
}

#[test]
fn battery_lifetime_runs() {
    battery_lifetime::run_example().expect("battery_lifetime example should run");
}

#[allow(dead_code)]
mod simulate_scenario {
    include!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/simulate_scenario.rs"
    ));
}

#[test]
fn simulate_scenario_runs() {
    simulate_scenario::run_example().expect("simulate_scenario example should run");
}

#[allow(dead_code)]
mod coordinator_alarms {
    include!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/coordinator_alarms.rs"
    ));
}

#[test]
fn coordinator_alarms_runs() {
    coordinator_alarms::run_example().expect("coordinator_alarms example should run");
}

#[allow(dead_code)]
mod query_service {
    include!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/query_service.rs"
    ));
}

#[test]
fn query_service_runs() {
    query_service::run_example().expect("query_service example should run");
}
