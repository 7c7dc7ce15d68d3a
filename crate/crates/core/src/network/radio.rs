use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::topology::{RouteError, Topology};
use crate::calibration::CalibrationTransport;
use crate::{NodeAddr, SimTime};

/// Stop-and-wait link layer parameters shared by every link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadioModel {
    #[serde(default)]
    pub loss_prob: f64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_ack_timeout")]
    pub ack_timeout_ms: u64,
    #[serde(default = "default_tx_duration")]
    pub tx_duration_ms: u64,
}

fn default_retries() -> u32 {
    3
}

fn default_ack_timeout() -> u64 {
    5
}

fn default_tx_duration() -> u64 {
    2
}

impl Default for RadioModel {
    fn default() -> Self {
        Self {
            loss_prob: 0.0,
            max_retries: default_retries(),
            ack_timeout_ms: default_ack_timeout(),
            tx_duration_ms: default_tx_duration(),
        }
    }
}

impl RadioModel {
    pub fn lossy(loss_prob: f64, max_retries: u32) -> Self {
        Self {
            loss_prob,
            max_retries,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.loss_prob) {
            return Err(format!("loss_prob {} outside [0, 1]", self.loss_prob));
        }
        Ok(())
    }

    /// Probability one hop succeeds within `1 + max_retries` attempts.
    pub fn hop_success_prob(&self) -> f64 {
        1.0 - self.loss_prob.powi(self.max_retries as i32 + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HopResult {
    pub attempts: u32,
    pub delivered: bool,
    pub elapsed_ms: u64,
}

/// One hop of stop-and-wait: send, wait for the ack, retry on timeout.
///
/// Each attempt consumes exactly one draw from `rng`. A failed attempt costs
/// the frame time plus the ack timeout.
pub fn attempt_hop(radio: &RadioModel, rng: &mut ChaCha8Rng) -> HopResult {
    let mut elapsed_ms = 0;
    for attempt in 1..=radio.max_retries + 1 {
        elapsed_ms += radio.tx_duration_ms;
        let lost = rng.gen::<f64>() < radio.loss_prob;
        if !lost {
            return HopResult {
                attempts: attempt,
                delivered: true,
                elapsed_ms,
            };
        }
        elapsed_ms += radio.ack_timeout_ms;
    }
    HopResult {
        attempts: radio.max_retries + 1,
        delivered: false,
        elapsed_ms,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeliveryOutcome {
    Delivered {
        at: SimTime,
        hops: usize,
    },
    /// `at_hop` counts from 1 at the source.
    Dropped {
        after_retries: u32,
        at_hop: usize,
        at: SimTime,
    },
}

impl DeliveryOutcome {
    pub fn is_delivered(&self) -> bool {
        matches!(self, DeliveryOutcome::Delivered { .. })
    }
}

/// Carries a frame hop by hop along the min-hop route from `src`.
///
/// The frame is passed through unchanged; only timing and loss are modelled.
pub fn transmit(
    topology: &Topology,
    _frame: &[u8],
    src: NodeAddr,
    radio: &RadioModel,
    rng: &mut ChaCha8Rng,
    start: SimTime,
) -> Result<DeliveryOutcome, RouteError> {
    let path = topology.route(src)?;
    let hops = path.len() - 1;
    let mut now = start;
    for hop in 1..=hops {
        let r = attempt_hop(radio, rng);
        now = now.plus_ms(r.elapsed_ms);
        if !r.delivered {
            return Ok(DeliveryOutcome::Dropped {
                after_retries: radio.max_retries,
                at_hop: hop,
                at: now,
            });
        }
    }
    Ok(DeliveryOutcome::Delivered { at: now, hops })
}

/// Calibration frames carried over the simulated network.
pub struct SimulatedTransport<'a> {
    pub topology: &'a Topology,
    pub src: NodeAddr,
    pub radio: RadioModel,
    pub rng: ChaCha8Rng,
    pub clock: SimTime,
}

impl CalibrationTransport for SimulatedTransport<'_> {
    fn source(&self) -> NodeAddr {
        self.src
    }

    fn carry(&mut self, frame: &[u8]) -> Option<Vec<u8>> {
        let outcome = transmit(
            self.topology,
            frame,
            self.src,
            &self.radio,
            &mut self.rng,
            self.clock,
        )
        .ok()?;
        match outcome {
            DeliveryOutcome::Delivered { at, .. } => {
                self.clock = at;
                Some(frame.to_vec())
            }
            DeliveryOutcome::Dropped { at, .. } => {
                self.clock = at;
                None
            }
        }
    }
}
