//! Telemetry frame codec.
//!
//! Frames follow the XBee API-frame envelope without byte escaping:
//!
//! ```text
//! 0x7E | len_hi len_lo | api_data[len] | checksum
//! ```
//!
//! The checksum is `0xFF - (sum(api_data) mod 256)`. A telemetry frame always
//! carries 19 bytes of api_data, so every frame on the wire is 23 bytes. The
//! payload layout is specific to this project and is documented in
//! `docs/wire-format.md`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::NodeAddr;

pub const START_DELIMITER: u8 = 0x7E;
pub const TELEMETRY_FRAME_TYPE: u8 = 0x10;
pub const TELEMETRY_API_LEN: usize = 19;
pub const TELEMETRY_FRAME_LEN: usize = TELEMETRY_API_LEN + 4;

pub const FLAG_OIL_LOW: u8 = 0x01;
pub const FLAG_TEMP_HIGH: u8 = 0x02;
const FLAG_MASK: u8 = FLAG_OIL_LOW | FLAG_TEMP_HIGH;
const MAX_TEMP_CODE: u16 = 1023;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum FrameError {
    #[error("checksum over empty api data")]
    EmptyData,
    #[error("invalid payload: {0}")]
    InvalidPayload(&'static str),
    #[error("bad start delimiter 0x{0:02X}")]
    BadDelimiter(u8),
    #[error("truncated frame: need {needed} bytes, have {available}")]
    TruncatedFrame { needed: usize, available: usize },
    #[error("checksum mismatch: expected 0x{expected:02X}, found 0x{found:02X}")]
    ChecksumMismatch { expected: u8, found: u8 },
    #[error("unknown frame type 0x{0:02X}")]
    UnknownFrameType(u8),
    #[error("{0} trailing bytes after checksum")]
    TrailingGarbage(usize),
}

impl FrameError {
    /// Stable name used in logs and traces.
    pub fn kind(&self) -> &'static str {
        match self {
            FrameError::EmptyData => "EmptyData",
            FrameError::InvalidPayload(_) => "InvalidPayload",
            FrameError::BadDelimiter(_) => "BadDelimiter",
            FrameError::TruncatedFrame { .. } => "TruncatedFrame",
            FrameError::ChecksumMismatch { .. } => "ChecksumMismatch",
            FrameError::UnknownFrameType(_) => "UnknownFrameType",
            FrameError::TrailingGarbage(_) => "TrailingGarbage",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TelemetryPayload {
    pub source_addr: NodeAddr,
    pub sequence: u8,
    pub timestamp_s: u32,
    pub temp_code: u16,
    pub status_flags: u8,
    pub battery_mv: u16,
}

impl TelemetryPayload {
    pub fn validate(&self) -> Result<(), FrameError> {
        if self.temp_code > MAX_TEMP_CODE {
            return Err(FrameError::InvalidPayload("temp_code exceeds 10 bits"));
        }
        if self.status_flags & !FLAG_MASK != 0 {
            return Err(FrameError::InvalidPayload("reserved status flag bits set"));
        }
        Ok(())
    }

    pub fn oil_low(&self) -> bool {
        self.status_flags & FLAG_OIL_LOW != 0
    }

    pub fn temp_high(&self) -> bool {
        self.status_flags & FLAG_TEMP_HIGH != 0
    }

    fn api_data(&self) -> [u8; TELEMETRY_API_LEN] {
        let mut out = [0u8; TELEMETRY_API_LEN];
        out[0] = TELEMETRY_FRAME_TYPE;
        out[1..9].copy_from_slice(&self.source_addr.0.to_be_bytes());
        out[9] = self.sequence;
        out[10..14].copy_from_slice(&self.timestamp_s.to_be_bytes());
        out[14..16].copy_from_slice(&self.temp_code.to_be_bytes());
        out[16] = self.status_flags;
        out[17..19].copy_from_slice(&self.battery_mv.to_be_bytes());
        out
    }

    fn from_api_data(api: &[u8]) -> Result<Self, FrameError> {
        if api[0] != TELEMETRY_FRAME_TYPE {
            return Err(FrameError::UnknownFrameType(api[0]));
        }
        if api.len() != TELEMETRY_API_LEN {
            return Err(FrameError::InvalidPayload(
                "telemetry api data must be 19 bytes",
            ));
        }
        let payload = TelemetryPayload {
            source_addr: NodeAddr(u64::from_be_bytes(api[1..9].try_into().unwrap())),
            sequence: api[9],
            timestamp_s: u32::from_be_bytes(api[10..14].try_into().unwrap()),
            temp_code: u16::from_be_bytes([api[14], api[15]]),
            status_flags: api[16],
            battery_mv: u16::from_be_bytes([api[17], api[18]]),
        };
        payload.validate()?;
        Ok(payload)
    }
}

/// `0xFF - (sum mod 256)` over the api data.
pub fn checksum(api_data: &[u8]) -> Result<u8, FrameError> {
    if api_data.is_empty() {
        return Err(FrameError::EmptyData);
    }
    let sum = api_data.iter().fold(0u8, |acc, b| acc.wrapping_add(*b));
    Ok(0xFF - sum)
}

pub fn encode(payload: &TelemetryPayload) -> Result<[u8; TELEMETRY_FRAME_LEN], FrameError> {
    payload.validate()?;
    let api = payload.api_data();
    let mut out = [0u8; TELEMETRY_FRAME_LEN];
    out[0] = START_DELIMITER;
    out[1..3].copy_from_slice(&(TELEMETRY_API_LEN as u16).to_be_bytes());
    out[3..3 + TELEMETRY_API_LEN].copy_from_slice(&api);
    out[TELEMETRY_FRAME_LEN - 1] = checksum(&api)?;
    Ok(out)
}

/// Decodes exactly one frame; total over arbitrary input.
pub fn decode(bytes: &[u8]) -> Result<TelemetryPayload, FrameError> {
    let truncated = |needed| FrameError::TruncatedFrame {
        needed,
        available: bytes.len(),
    };
    let first = *bytes.first().ok_or(truncated(4))?;
    if first != START_DELIMITER {
        return Err(FrameError::BadDelimiter(first));
    }
    if bytes.len() < 3 {
        return Err(truncated(4));
    }
    let len = usize::from(u16::from_be_bytes([bytes[1], bytes[2]]));
    let total = len + 4;
    if bytes.len() < total {
        return Err(truncated(total));
    }
    if bytes.len() > total {
        return Err(FrameError::TrailingGarbage(bytes.len() - total));
    }
    if len == 0 {
        return Err(FrameError::EmptyData);
    }
    let api = &bytes[3..3 + len];
    let expected = checksum(api)?;
    let found = bytes[total - 1];
    if expected != found {
        return Err(FrameError::ChecksumMismatch { expected, found });
    }
    TelemetryPayload::from_api_data(api)
}

/// Largest api-data length the stream splitter accepts before treating a
/// delimiter as noise.
pub const MAX_STREAM_API_LEN: usize = 255;

/// Splits a byte stream into candidate frames.
///
/// Bytes before a start delimiter are reported as noise; a delimiter whose
/// length field exceeds [`MAX_STREAM_API_LEN`] is treated as noise too and
/// scanning resumes at the next byte. Candidates are not validated here.
#[derive(Debug, Default)]
pub struct FrameSplitter {
    buf: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Chunk {
    Frame(Vec<u8>),
    Noise(Vec<u8>),
}

impl FrameSplitter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, data: &[u8]) -> Vec<Chunk> {
        self.buf.extend_from_slice(data);
        let mut out = Vec::new();
        loop {
            let Some(start) = self.buf.iter().position(|b| *b == START_DELIMITER) else {
                if !self.buf.is_empty() {
                    out.push(Chunk::Noise(std::mem::take(&mut self.buf)));
                }
                break;
            };
            if start > 0 {
                out.push(Chunk::Noise(self.buf.drain(..start).collect()));
            }
            if self.buf.len() < 3 {
                break;
            }
            let len = usize::from(u16::from_be_bytes([self.buf[1], self.buf[2]]));
            if len == 0 || len > MAX_STREAM_API_LEN {
                out.push(Chunk::Noise(self.buf.drain(..1).collect()));
                continue;
            }
            if self.buf.len() < len + 4 {
                break;
            }
            out.push(Chunk::Frame(self.buf.drain(..len + 4).collect()));
        }
        out
    }

    /// Remaining buffered bytes, reported as noise at end of stream.
    pub fn finish(&mut self) -> Option<Chunk> {
        if self.buf.is_empty() {
            None
        } else {
            Some(Chunk::Noise(std::mem::take(&mut self.buf)))
        }
    }
}
