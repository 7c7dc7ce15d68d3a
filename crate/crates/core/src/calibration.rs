//! Bench calibration: sweep a controlled temperature, pair the transmitter's
//! amplifier voltage with the code seen at the receiver, fit `code = m·v + c`
//! and keep the points for piecewise-linear code→temperature inversion.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frame::{self, TelemetryPayload};
use crate::signal_chain::{ChainError, SignalChain};
use crate::NodeAddr;

/// Default residual tolerance, in codes.
pub const DEFAULT_TOLERANCE_CODES: f64 = 1.0;

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("a sweep needs at least 2 temperatures, got {0}")]
    TooFewPoints(usize),
    #[error("sweep temperatures must be strictly increasing (index {0})")]
    NotIncreasing(usize),
    #[error("received codes must be non-decreasing (index {0})")]
    CodesDecreasing(usize),
    #[error("all calibration voltages are equal")]
    DegenerateInput,
    #[error("point {index} out of bounds: {reason}")]
    PointOutOfBounds { index: usize, reason: &'static str },
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error("calibration table io: {0}")]
    Io(#[from] std::io::Error),
    #[error("calibration table json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPoint {
    pub set_temp_c: f64,
    pub tx_volts: f64,
    pub rx_code: u16,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineFit {
    pub slope: f64,
    pub intercept: f64,
    pub max_residual: f64,
}

impl AffineFit {
    pub fn predict(&self, volts: f64) -> f64 {
        self.slope * volts + self.intercept
    }
}

/// Ordinary least squares of `rx_code` against `tx_volts`.
pub fn fit_affine(points: &[CalibrationPoint]) -> Result<AffineFit, CalibrationError> {
    if points.len() < 2 {
        return Err(CalibrationError::TooFewPoints(points.len()));
    }
    let n = points.len() as f64;
    let mean_v = points.iter().map(|p| p.tx_volts).sum::<f64>() / n;
    let mean_c = points.iter().map(|p| f64::from(p.rx_code)).sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for p in points {
        let dv = p.tx_volts - mean_v;
        sxx += dv * dv;
        sxy += dv * (f64::from(p.rx_code) - mean_c);
    }
    if sxx <= f64::EPSILON * mean_v.abs().max(1.0) {
        return Err(CalibrationError::DegenerateInput);
    }
    let slope = sxy / sxx;
    let intercept = mean_c - slope * mean_v;
    let mut fit = AffineFit {
        slope,
        intercept,
        max_residual: 0.0,
    };
    fit.max_residual = points
        .iter()
        .map(|p| (f64::from(p.rx_code) - fit.predict(p.tx_volts)).abs())
        .fold(0.0, f64::max);
    Ok(fit)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationTable {
    pub points: Vec<CalibrationPoint>,
    pub slope_codes_per_volt: f64,
    pub intercept_codes: f64,
    pub max_residual_codes: f64,
}

impl CalibrationTable {
    /// Validates ordering and fits the affine map.
    pub fn from_points(points: Vec<CalibrationPoint>) -> Result<Self, CalibrationError> {
        check_points(&points)?;
        let fit = fit_affine(&points)?;
        Ok(Self {
            points,
            slope_codes_per_volt: fit.slope,
            intercept_codes: fit.intercept,
            max_residual_codes: fit.max_residual,
        })
    }

    /// Ideal-transport table for `chain` over `temps`.
    pub fn for_chain(
        chain: &SignalChain,
        channel: usize,
        temps: &[f64],
    ) -> Result<Self, CalibrationError> {
        let sweep = run_sweep(temps, chain, channel, &mut IdealTransport)?;
        Self::from_points(sweep.points)
    }

    pub fn load(path: &Path) -> Result<Self, CalibrationError> {
        let text = std::fs::read_to_string(path)?;
        let table: CalibrationTable = serde_json::from_str(&text)?;
        check_points(&table.points)?;
        Ok(table)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }

    pub fn fit(&self) -> AffineFit {
        AffineFit {
            slope: self.slope_codes_per_volt,
            intercept: self.intercept_codes,
            max_residual: self.max_residual_codes,
        }
    }

    pub fn code_span(&self) -> Option<(u16, u16)> {
        Some((self.points.first()?.rx_code, self.points.last()?.rx_code))
    }

    /// Piecewise-linear inversion over the (code, temperature) pairs.
    pub fn temperature_from_code(&self, code: u16) -> Result<f64, ChainError> {
        let (min, max) = self.code_span().ok_or(ChainError::Uncalibrated)?;
        if self.points.len() < 2 {
            return Err(ChainError::Uncalibrated);
        }
        if code < min || code > max {
            return Err(ChainError::CodeOutOfRange { code, min, max });
        }
        // Runs of equal codes map to the middle of their temperature span.
        let run = |c: u16| {
            let mut it = self.points.iter().filter(|p| p.rx_code == c);
            let first = it.next()?.set_temp_c;
            let last = it.next_back().map_or(first, |p| p.set_temp_c);
            Some(0.5 * (first + last))
        };
        if let Some(t) = run(code) {
            return Ok(t);
        }
        let upper = self
            .points
            .iter()
            .position(|p| p.rx_code > code)
            .expect("code below max has an upper neighbour");
        let (lo, hi) = (&self.points[upper - 1], &self.points[upper]);
        let frac = f64::from(code - lo.rx_code) / f64::from(hi.rx_code - lo.rx_code);
        Ok(lo.set_temp_c + frac * (hi.set_temp_c - lo.set_temp_c))
    }
}

fn check_points(points: &[CalibrationPoint]) -> Result<(), CalibrationError> {
    if points.len() < 2 {
        return Err(CalibrationError::TooFewPoints(points.len()));
    }
    for (i, p) in points.iter().enumerate() {
        if !(0.0..=5.0).contains(&p.tx_volts) {
            return Err(CalibrationError::PointOutOfBounds {
                index: i,
                reason: "tx_volts outside [0, 5]",
            });
        }
        if p.rx_code > 1023 {
            return Err(CalibrationError::PointOutOfBounds {
                index: i,
                reason: "rx_code above 1023",
            });
        }
    }
    for (i, w) in points.windows(2).enumerate() {
        if !(w[1].set_temp_c > w[0].set_temp_c) {
            return Err(CalibrationError::NotIncreasing(i + 1));
        }
        if w[1].rx_code < w[0].rx_code {
            return Err(CalibrationError::CodesDecreasing(i + 1));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Constancy {
    Pass {
        max_residual: f64,
    },
    Fail {
        index: usize,
        set_temp_c: f64,
        residual: f64,
    },
}

impl Constancy {
    pub fn passed(&self) -> bool {
        matches!(self, Constancy::Pass { .. })
    }
}

/// Pass iff every point lies within `tolerance_codes` of the fitted line.
pub fn verify_constancy(table: &CalibrationTable, tolerance_codes: f64) -> Constancy {
    let fit = table.fit();
    let (index, residual) = table
        .points
        .iter()
        .map(|p| (f64::from(p.rx_code) - fit.predict(p.tx_volts)).abs())
        .enumerate()
        .fold(
            (0, 0.0),
            |best, (i, r)| if r > best.1 { (i, r) } else { best },
        );
    if residual <= tolerance_codes {
        Constancy::Pass {
            max_residual: residual,
        }
    } else {
        Constancy::Fail {
            index,
            set_temp_c: table.points[index].set_temp_c,
            residual,
        }
    }
}

/// Relative spread `(max - min) / mean` of `rx_code / tx_volts` over points at
/// or above `min_volts`. Only meaningful for a zero-offset chain.
pub fn ratio_spread(points: &[CalibrationPoint], min_volts: f64) -> Option<f64> {
    let ratios: Vec<f64> = points
        .iter()
        .filter(|p| p.tx_volts >= min_volts && p.tx_volts > 0.0)
        .map(|p| f64::from(p.rx_code) / p.tx_volts)
        .collect();
    if ratios.len() < 2 {
        return None;
    }
    let max = ratios.iter().copied().fold(f64::MIN, f64::max);
    let min = ratios.iter().copied().fold(f64::MAX, f64::min);
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    Some((max - min) / mean)
}

/// Carries one calibration frame from the transmitter to the receiver.
pub trait CalibrationTransport {
    fn source(&self) -> NodeAddr {
        NodeAddr(0)
    }

    /// `None` when the frame was lost.
    fn carry(&mut self, frame: &[u8]) -> Option<Vec<u8>>;
}

/// Bit-exact, lossless link.
#[derive(Debug, Default, Clone, Copy)]
pub struct IdealTransport;

impl CalibrationTransport for IdealTransport {
    fn carry(&mut self, frame: &[u8]) -> Option<Vec<u8>> {
        Some(frame.to_vec())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MissingPoint {
    pub set_temp_c: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub points: Vec<CalibrationPoint>,
    pub missing: Vec<MissingPoint>,
}

/// Runs the forward chain at each temperature and records what the receiver
/// decodes. Lost or undecodable frames are listed in `missing`.
pub fn run_sweep(
    temps: &[f64],
    chain: &SignalChain,
    channel: usize,
    transport: &mut dyn CalibrationTransport,
) -> Result<Sweep, CalibrationError> {
    if temps.len() < 2 {
        return Err(CalibrationError::TooFewPoints(temps.len()));
    }
    if let Some(i) = temps.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(CalibrationError::NotIncreasing(i + 1));
    }
    let mut points = Vec::with_capacity(temps.len());
    let mut missing = Vec::new();
    for (i, &t) in temps.iter().enumerate() {
        let reading = chain.forward(t, channel)?;
        let payload = TelemetryPayload {
            source_addr: transport.source(),
            sequence: i as u8,
            timestamp_s: i as u32,
            temp_code: reading.code,
            status_flags: 0,
            battery_mv: 0,
        };
        let bytes = frame::encode(&payload).expect("chain codes fit in 10 bits");
        let received = transport
            .carry(&bytes)
            .ok_or_else(|| "frame dropped after retries".to_string())
            .and_then(|rx| frame::decode(&rx).map_err(|e| e.to_string()));
        match received {
            Ok(p) => points.push(CalibrationPoint {
                set_temp_c: t,
                tx_volts: reading.amp_volts,
                rx_code: p.temp_code,
            }),
            Err(reason) => missing.push(MissingPoint {
                set_temp_c: t,
                reason,
            }),
        }
    }
    Ok(Sweep { points, missing })
}

/// `-40, -30, ..., 120` °C.
pub fn default_sweep_temps() -> Vec<f64> {
    sweep_temps(-40.0, 120.0, 10.0)
}

/// Inclusive arithmetic sweep; empty when `step <= 0` or `to < from`.
pub fn sweep_temps(from: f64, to: f64, step: f64) -> Vec<f64> {
    if !(step > 0.0) || to < from {
        return Vec::new();
    }
    let n = ((to - from) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| from + step * i as f64).collect()
}

pub fn points_to_csv(points: &[CalibrationPoint]) -> String {
    let mut out = String::from("temp_c,tx_volts,rx_code\n");
    for p in points {
        let _ = writeln!(out, "{},{},{}", p.set_temp_c, p.tx_volts, p.rx_code);
    }
    out
}
