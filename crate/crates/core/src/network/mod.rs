//! Simulated radio network: topology and routing, lossy stop-and-wait links,
//! battery budget and the event loop that ties devices to the coordinator.

pub mod battery;
pub mod event;
pub mod radio;
pub mod sim;
pub mod topology;

pub use battery::{battery_mv, lifetime_hours, BatteryModel};
pub use event::EventQueue;
pub use radio::{
    attempt_hop, transmit, DeliveryOutcome, HopResult, RadioModel, SimulatedTransport,
};
pub use sim::{
    replay_capture, replay_trace, run, EnvPoint, EnvProfile, EventKind, EventTrace, Outage,
    Scenario, SimDevice, SimError, SimOutcome, Summary, TraceEvent,
};
pub use topology::{build_topology, NodeSpec, Role, RouteError, Topology, TopologyError};
