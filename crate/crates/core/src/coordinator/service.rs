//! Local TCP endpoint for the coordinator.
//!
//! The first byte of a connection selects its mode. `0x7E` starts a raw frame
//! stream: the connection carries concatenated telemetry frames and the server
//! never writes back. Anything else starts request/response mode, where every
//! message in both directions is a 4-byte big-endian length followed by that
//! many bytes of UTF-8 JSON. See `docs/query-protocol.md`.

use std::io::{self, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use parking_lot::RwLock;
use serde_json::{json, Value};

use super::{parse_query, Coordinator, QueryError};
use crate::frame::{Chunk, FrameSplitter, START_DELIMITER};
use crate::SimTime;

/// Largest accepted request or response body.
pub const MAX_MESSAGE_LEN: usize = 1 << 20;

const TICK: Duration = Duration::from_millis(100);

pub trait Clock: Send + Sync {
    fn now(&self) -> SimTime;
}

/// Milliseconds since construction, plus a fixed offset.
pub struct MonotonicClock {
    start: Instant,
    offset: SimTime,
}

impl MonotonicClock {
    pub fn starting_at(offset: SimTime) -> Self {
        Self {
            start: Instant::now(),
            offset,
        }
    }
}

impl Clock for MonotonicClock {
    fn now(&self) -> SimTime {
        self.offset.plus_ms(self.start.elapsed().as_millis() as u64)
    }
}

/// Clock that only moves when told to.
#[derive(Default)]
pub struct ManualClock(AtomicU64);

impl ManualClock {
    pub fn set(&self, t: SimTime) {
        self.0.store(t.0, Ordering::SeqCst);
    }
}

impl Clock for ManualClock {
    fn now(&self) -> SimTime {
        SimTime(self.0.load(Ordering::SeqCst))
    }
}

pub fn write_message(stream: &mut impl Write, body: &[u8]) -> io::Result<()> {
    if body.len() > MAX_MESSAGE_LEN {
        return Err(io::Error::new(
            io::ErrorKind::InvalidInput,
            "message too large",
        ));
    }
    // One write, so Nagle never holds the body back behind the header.
    let mut msg = Vec::with_capacity(4 + body.len());
    msg.extend_from_slice(&(body.len() as u32).to_be_bytes());
    msg.extend_from_slice(body);
    stream.write_all(&msg)?;
    stream.flush()
}

/// `Ok(None)` on a clean end of stream before a header.
pub fn read_message(stream: &mut impl Read) -> io::Result<Option<Vec<u8>>> {
    let mut header = [0u8; 4];
    match stream.read_exact(&mut header) {
        Ok(()) => {}
        Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e),
    }
    read_body(stream, header)
}

fn read_body(stream: &mut impl Read, header: [u8; 4]) -> io::Result<Option<Vec<u8>>> {
    let len = u32::from_be_bytes(header) as usize;
    if len > MAX_MESSAGE_LEN {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            format!("message of {len} bytes exceeds limit"),
        ));
    }
    let mut body = vec![0u8; len];
    stream.read_exact(&mut body)?;
    Ok(Some(body))
}

/// Sends one request and waits for its response.
pub fn request(stream: &mut TcpStream, req: &Value) -> io::Result<Value> {
    write_message(stream, req.to_string().as_bytes())?;
    let body = read_message(stream)?
        .ok_or_else(|| io::Error::new(io::ErrorKind::UnexpectedEof, "server closed connection"))?;
    serde_json::from_slice(&body).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
}

fn error_response(e: &QueryError) -> Value {
    json!({"ok": false, "error": {"kind": e.kind(), "message": e.to_string()}})
}

pub struct Server {
    listener: TcpListener,
    coordinator: Arc<RwLock<Coordinator>>,
    clock: Arc<dyn Clock>,
    shutdown: Arc<AtomicBool>,
}

impl Server {
    pub fn bind(
        addr: impl ToSocketAddrs,
        coordinator: Arc<RwLock<Coordinator>>,
        clock: Arc<dyn Clock>,
    ) -> io::Result<Self> {
        Ok(Self {
            listener: TcpListener::bind(addr)?,
            coordinator,
            clock,
            shutdown: Arc::new(AtomicBool::new(false)),
        })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    pub fn coordinator(&self) -> Arc<RwLock<Coordinator>> {
        Arc::clone(&self.coordinator)
    }

    /// Serves until a `shutdown` request arrives, then flushes the logs.
    pub fn run(self) -> io::Result<()> {
        let local = self.listener.local_addr()?;
        let ticker = {
            let (coord, clock, stop) = (
                self.coordinator(),
                Arc::clone(&self.clock),
                Arc::clone(&self.shutdown),
            );
            thread::spawn(move || {
                while !stop.load(Ordering::SeqCst) {
                    coord.write().advance_to(clock.now());
                    thread::sleep(TICK);
                }
            })
        };
        for stream in self.listener.incoming() {
            if self.shutdown.load(Ordering::SeqCst) {
                break;
            }
            let Ok(stream) = stream else { continue };
            let ctx = Connection {
                coordinator: self.coordinator(),
                clock: Arc::clone(&self.clock),
                shutdown: Arc::clone(&self.shutdown),
                local,
            };
            thread::spawn(move || {
                let _ = ctx.handle(stream);
            });
        }
        let _ = ticker.join();
        self.coordinator.write().flush()
    }

    pub fn spawn(self) -> io::Result<(SocketAddr, JoinHandle<io::Result<()>>)> {
        let addr = self.local_addr()?;
        Ok((addr, thread::spawn(move || self.run())))
    }
}

struct Connection {
    coordinator: Arc<RwLock<Coordinator>>,
    clock: Arc<dyn Clock>,
    shutdown: Arc<AtomicBool>,
    local: SocketAddr,
}

impl Connection {
    fn handle(&self, mut stream: TcpStream) -> io::Result<()> {
        let mut first = [0u8; 1];
        if stream.read(&mut first)? == 0 {
            return Ok(());
        }
        if first[0] == START_DELIMITER {
            self.frame_stream(stream, first[0])
        } else {
            self.request_loop(stream, first[0])
        }
    }

    fn frame_stream(&self, mut stream: TcpStream, first: u8) -> io::Result<()> {
        let mut splitter = FrameSplitter::new();
        let mut pending = splitter.push(&[first]);
        let mut buf = [0u8; 4096];
        loop {
            for chunk in pending.drain(..) {
                self.ingest_chunk(chunk);
            }
            let n = stream.read(&mut buf)?;
            if n == 0 {
                break;
            }
            pending = splitter.push(&buf[..n]);
        }
        if let Some(rest) = splitter.finish() {
            self.ingest_chunk(rest);
        }
        self.coordinator.write().flush()
    }

    fn ingest_chunk(&self, chunk: Chunk) {
        let bytes = match chunk {
            Chunk::Frame(b) | Chunk::Noise(b) => b,
        };
        // Rejections are counted in the coordinator's stats.
        let _ = self.coordinator.write().ingest(&bytes, self.clock.now(), 0);
    }

    fn request_loop(&self, mut stream: TcpStream, first: u8) -> io::Result<()> {
        let mut header = [first, 0, 0, 0];
        stream.read_exact(&mut header[1..])?;
        let mut next = read_body(&mut stream, header);
        loop {
            let body = match next {
                Ok(Some(b)) => b,
                Ok(None) => return Ok(()),
                Err(e) if e.kind() == io::ErrorKind::InvalidData => {
                    let err = QueryError::MalformedQuery(e.to_string());
                    write_message(&mut stream, error_response(&err).to_string().as_bytes())?;
                    return Ok(());
                }
                Err(e) => return Err(e),
            };
            let (response, stop) = self.answer(&body);
            write_message(&mut stream, response.to_string().as_bytes())?;
            if stop {
                self.shutdown.store(true, Ordering::SeqCst);
                // Wake the accept loop so it can observe the flag.
                let _ = TcpStream::connect(self.local);
                return Ok(());
            }
            next = read_message(&mut stream);
        }
    }

    fn answer(&self, body: &[u8]) -> (Value, bool) {
        let text = match std::str::from_utf8(body) {
            Ok(t) => t,
            Err(e) => {
                return (
                    error_response(&QueryError::MalformedQuery(e.to_string())),
                    false,
                )
            }
        };
        let is_shutdown = serde_json::from_str::<Value>(text)
            .ok()
            .is_some_and(|v| v == json!({"query": "shutdown"}));
        if is_shutdown {
            let _ = self.coordinator.write().flush();
            return (json!({"ok": true, "result": "shutting down"}), true);
        }
        let result = parse_query(text).and_then(|q| self.coordinator.read().query(&q));
        match result {
            Ok(v) => (json!({"ok": true, "result": v}), false),
            Err(e) => (error_response(&e), false),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn message_framing_roundtrip() {
        let mut wire = Vec::new();
        write_message(&mut wire, b"{\"query\":\"stats\"}").unwrap();
        assert_eq!(&wire[..4], &[0, 0, 0, 17]);
        let mut r = wire.as_slice();
        assert_eq!(
            read_message(&mut r).unwrap().unwrap(),
            b"{\"query\":\"stats\"}"
        );
        assert!(read_message(&mut r).unwrap().is_none());
    }

    #[test]
    fn oversize_header_rejected() {
        let mut r: &[u8] = &[0xFF, 0xFF, 0xFF, 0xFF];
        assert_eq!(
            read_message(&mut r).unwrap_err().kind(),
            io::ErrorKind::InvalidData
        );
    }

    #[test]
    fn manual_clock() {
        let c = ManualClock::default();
        c.set(SimTime(42));
        assert_eq!(c.now(), SimTime(42));
        let m = MonotonicClock::starting_at(SimTime(1000));
        assert!(m.now() >= SimTime(1000));
    }
}
