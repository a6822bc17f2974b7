//! Discrete-event simulation of single-gateway LoRaWAN networks under an
//! Earth or Mars propagation channel.
//!
//! The pipeline for one run is: place nodes ([`topology`]), compute each
//! link's loss ([`channel`]) and spreading factor ([`phy`]), simulate the
//! slotted-ALOHA uplink ([`mac`]), and derive throughput figures
//! ([`metrics`]). [`experiments`] wraps this in configuration files, named
//! figure presets and parallel parameter sweeps that write CSV.

pub mod channel;
pub mod config;
pub mod error;
pub mod experiments;
pub mod mac;
pub mod metrics;
pub mod phy;
pub mod scenario;
pub mod seed;
pub mod topology;

pub use channel::{ChannelConfig, DustIntensity, DustStorm, Environment};
pub use error::{Error, Result};
pub use mac::{run_simulation, NodeState, SimOutcome};
pub use metrics::{MinThroughputCriterion, SfHistogram, ThroughputReport};
pub use phy::{PhyParams, RadioConfig, SfAssignment, SpreadingFactor};
pub use scenario::{ArrivalProcess, Scenario, TrafficModel};
pub use topology::{Deployment, Position, ScenarioGeometry};
