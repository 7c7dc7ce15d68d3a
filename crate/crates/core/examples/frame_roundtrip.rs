// Encode a telemetry payload, show the wire bytes, corrupt one and decode.

use std::error::Error;

use dtms::frame::{decode, encode, FrameError, TelemetryPayload, FLAG_TEMP_HIGH};
use dtms::NodeAddr;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let payload = TelemetryPayload {
        source_addr: NodeAddr(0x0013_A200_40B0_0001),
        sequence: 42,
        timestamp_s: 3600,
        temp_code: 863,
        status_flags: FLAG_TEMP_HIGH,
        battery_mv: 3275,
    };
    let frame = encode(&payload)?;
    println!("frame  {}", hex::encode_upper(frame));
    assert_eq!(decode(&frame)?, payload);

    let mut bad = frame;
    bad[12] ^= 0x01;
    match decode(&bad) {
        Err(e @ FrameError::ChecksumMismatch { .. }) => println!("corrupt {e}"),
        other => return Err(format!("corruption not caught: {other:?}").into()),
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
