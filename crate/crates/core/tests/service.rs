//! The coordinator service over real sockets, including the `serve` binary.

use std::io::{BufRead, BufReader, Write};
use std::net::{Shutdown, TcpStream};
use std::path::Path;
use std::process::{Command, Stdio};
use std::sync::Arc;
use std::time::{Duration, Instant};

use dtms::calibration::{default_sweep_temps, CalibrationTable};
use dtms::coordinator::service::{request, write_message, ManualClock, Server};
use dtms::coordinator::{Coordinator, CoordinatorConfig, DeviceRegistration, Reading};
use dtms::end_device::{init_device, DeviceConfig, Environment};
use dtms::frame::decode;
use dtms::{NodeAddr, SimTime};
use parking_lot::RwLock;
use serde_json::{json, Value};

fn registration(addr: u64) -> DeviceRegistration {
    DeviceRegistration {
        addr: NodeAddr(addr),
        sample_period: SimTime::from_secs(60),
        temp_high_c: 90.0,
        table: CalibrationTable::for_chain(&Default::default(), 0, &default_sweep_temps()).unwrap(),
    }
}

fn frames(addr: u64, n: u32) -> Vec<u8> {
    let config = DeviceConfig::new(NodeAddr(addr));
    let table = registration(addr).table;
    let mut dev = init_device(config, table).unwrap();
    let mut out = Vec::new();
    for i in 0..n {
        let env = Environment {
            temp_c: 40.0 + f64::from(i % 60),
            oil_level_mm: if i % 7 == 6 { 50.0 } else { 150.0 },
        };
        out.extend(dev.sample_cycle(env, i * 60).unwrap().1);
    }
    out
}

fn start(
    devices: &[u64],
) -> (
    std::net::SocketAddr,
    Arc<RwLock<Coordinator>>,
    std::thread::JoinHandle<std::io::Result<()>>,
) {
    let coord = Coordinator::new(CoordinatorConfig::new(
        devices.iter().map(|a| registration(*a)).collect(),
    ));
    let server = Server::bind(
        "127.0.0.1:0",
        Arc::new(RwLock::new(coord)),
        Arc::new(ManualClock::default()),
    )
    .unwrap();
    let shared = server.coordinator();
    let (addr, handle) = server.spawn().unwrap();
    (addr, shared, handle)
}

fn wait_for(mut cond: impl FnMut() -> bool) {
    let deadline = Instant::now() + Duration::from_secs(10);
    while !cond() {
        assert!(Instant::now() < deadline, "timed out");
        std::thread::sleep(Duration::from_millis(5));
    }
}

#[test]
fn streamed_frames_equal_offline_decode() {
    let (addr, shared, handle) = start(&[0xBEEF]);
    let capture = frames(0xBEEF, 40);
    let mut feed = TcpStream::connect(addr).unwrap();
    // Deliver in awkward pieces to exercise reassembly.
    for piece in capture.chunks(7) {
        feed.write_all(piece).unwrap();
    }
    feed.shutdown(Shutdown::Write).unwrap();
    wait_for(|| shared.read().stats().frames_ok == 40);

    let mut conn = TcpStream::connect(addr).unwrap();
    let resp = request(
        &mut conn,
        &json!({"query": "readings", "device": "000000000000BEEF"}),
    )
    .unwrap();
    assert_eq!(resp["ok"], true);
    let readings: Vec<Reading> = serde_json::from_value(resp["result"].clone()).unwrap();
    let offline: Vec<_> = capture.chunks(23).map(|f| decode(f).unwrap()).collect();
    assert_eq!(readings.len(), offline.len());
    for (r, p) in readings.iter().zip(&offline) {
        assert_eq!(
            (r.sequence, r.temp_code, r.device_timestamp_s),
            (p.sequence, p.temp_code, p.timestamp_s)
        );
        assert_eq!(r.oil_state.is_low(), p.oil_low());
    }
    request(&mut conn, &json!({"query": "shutdown"})).unwrap();
    handle.join().unwrap().unwrap();
}

#[test]
fn devices_never_seen_and_malformed_queries() {
    let (addr, _, handle) = start(&[1, 2]);
    let mut conn = TcpStream::connect(addr).unwrap();
    let resp = request(&mut conn, &json!({"query": "devices"})).unwrap();
    let devices = resp["result"].as_array().unwrap();
    assert_eq!(devices.len(), 2);
    assert!(devices.iter().all(|d| d["liveness"] == "never_seen"));

    for bad in [
        json!({"query": "nope"}),
        json!({"query": "stats", "extra": 1}),
        json!([1]),
    ] {
        let resp = request(&mut conn, &bad).unwrap();
        assert_eq!(resp["ok"], false);
        assert_eq!(resp["error"]["kind"], "MalformedQuery");
    }
    write_message(&mut conn, b"not json").unwrap();
    let body = dtms::coordinator::service::read_message(&mut conn)
        .unwrap()
        .unwrap();
    assert_eq!(
        serde_json::from_slice::<Value>(&body).unwrap()["error"]["kind"],
        "MalformedQuery"
    );

    let resp = request(
        &mut conn,
        &json!({"query": "readings", "device": "0000000000000009"}),
    )
    .unwrap();
    assert_eq!(resp["error"]["kind"], "UnknownDevice");
    // Still serving after all of that.
    let resp = request(
        &mut TcpStream::connect(addr).unwrap(),
        &json!({"query": "stats"}),
    )
    .unwrap();
    assert_eq!(resp["result"]["frames_ok"], 0);
    request(&mut conn, &json!({"query": "shutdown"})).unwrap();
    handle.join().unwrap().unwrap();
}

#[test]
fn concurrent_readers_during_ingest() {
    let (addr, shared, handle) = start(&[0xBEEF]);
    let capture = frames(0xBEEF, 200);
    let writer = std::thread::spawn(move || {
        let mut feed = TcpStream::connect(addr).unwrap();
        for f in capture.chunks(23) {
            feed.write_all(f).unwrap();
        }
    });
    let readers: Vec<_> = (0..4)
        .map(|_| {
            std::thread::spawn(move || {
                let mut conn = TcpStream::connect(addr).unwrap();
                let mut last = 0;
                for _ in 0..50 {
                    let r = request(&mut conn, &json!({"query": "stats"})).unwrap();
                    let ok = r["result"]["frames_ok"].as_u64().unwrap();
                    assert!(ok >= last, "counter went backwards");
                    last = ok;
                }
            })
        })
        .collect();
    writer.join().unwrap();
    for r in readers {
        r.join().unwrap();
    }
    wait_for(|| shared.read().stats().frames_ok == 200);
    request(
        &mut TcpStream::connect(addr).unwrap(),
        &json!({"query": "shutdown"}),
    )
    .unwrap();
    handle.join().unwrap().unwrap();
}

#[test]
fn serve_binary_flushes_logs_on_shutdown() {
    let dir = tempfile::tempdir().unwrap();
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/p2p.json");
    let mut child = Command::new(env!("CARGO_BIN_EXE_dtms"))
        .args([
            "serve",
            "-c",
            config.to_str().unwrap(),
            "--listen",
            "127.0.0.1:0",
            "-o",
        ])
        .arg(dir.path())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap())
        .read_line(&mut line)
        .unwrap();
    let addr = line
        .trim()
        .strip_prefix("listening on ")
        .expect("banner")
        .to_string();

    let mut feed = TcpStream::connect(&addr).unwrap();
    feed.write_all(&frames(0x0013_A200_40B0_0001, 3)).unwrap();
    drop(feed);
    let mut conn = TcpStream::connect(&addr).unwrap();
    wait_for(|| {
        request(&mut conn, &json!({"query": "stats"})).unwrap()["result"]["frames_ok"] == 3
    });

    // A second instance cannot take the same port.
    let clash = Command::new(env!("CARGO_BIN_EXE_dtms"))
        .args([
            "serve",
            "-c",
            config.to_str().unwrap(),
            "--listen",
            &addr,
            "-o",
        ])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(clash.status.code(), Some(1));

    request(&mut conn, &json!({"query": "shutdown"})).unwrap();
    assert!(child.wait().unwrap().success());
    let log = std::fs::read_to_string(dir.path().join("readings.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 3);
}
