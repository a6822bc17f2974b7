//! Full input to one simulation run.

use std::fmt;
use std::str::FromStr;

use crate::channel::ChannelConfig;
use crate::error::{Error, Result};
use crate::phy::{PhyParams, RadioConfig, MAX_PAYLOAD_BYTES};
use crate::topology::ScenarioGeometry;

/// Simulated time per run unless configured otherwise, in seconds.
pub const DEFAULT_DURATION_S: f64 = 500.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ArrivalProcess {
    #[default]
    Poisson,
    /// Fixed period with a uniformly random phase per node.
    Periodic,
}

impl fmt::Display for ArrivalProcess {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ArrivalProcess::Poisson => "poisson",
            ArrivalProcess::Periodic => "periodic",
        })
    }
}

impl FromStr for ArrivalProcess {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "poisson" => Ok(ArrivalProcess::Poisson),
            "periodic" => Ok(ArrivalProcess::Periodic),
            other => Err(format!(
                "unknown arrival process `{other}` (expected poisson or periodic)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrafficModel {
    pub payload_bytes: u32,
    /// Mean time between packet generations at one node, in seconds.
    pub mean_interarrival: f64,
    pub arrival_process: ArrivalProcess,
}

impl TrafficModel {
    pub fn poisson(payload_bytes: u32, mean_interarrival: f64) -> Self {
        TrafficModel {
            payload_bytes,
            mean_interarrival,
            arrival_process: ArrivalProcess::Poisson,
        }
    }

    /// Traffic whose network-wide offered load is `offered_bps` when all
    /// `node_count` nodes generate packets.
    pub fn from_offered_bps(
        payload_bytes: u32,
        node_count: usize,
        offered_bps: f64,
    ) -> Result<Self> {
        if !(offered_bps > 0.0 && offered_bps.is_finite()) {
            return Err(Error::invalid(
                "offered_bps",
                format!("must be > 0, got {offered_bps}"),
            ));
        }
        let bits = 8.0 * payload_bytes as f64;
        Ok(Self::poisson(
            payload_bytes,
            node_count as f64 * bits / offered_bps,
        ))
    }

    pub fn payload_bits(&self) -> f64 {
        8.0 * self.payload_bytes as f64
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_PAYLOAD_BYTES).contains(&self.payload_bytes) {
            return Err(Error::invalid(
                "payload_bytes",
                format!(
                    "must be in 1..={MAX_PAYLOAD_BYTES}, got {}",
                    self.payload_bytes
                ),
            ));
        }
        if !(self.mean_interarrival > 0.0 && self.mean_interarrival.is_finite()) {
            return Err(Error::invalid(
                "mean_interarrival",
                format!("must be > 0, got {}", self.mean_interarrival),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub channel: ChannelConfig,
    pub geometry: ScenarioGeometry,
    pub traffic: TrafficModel,
    pub radio: RadioConfig,
    pub phy: PhyParams,
    /// Simulated seconds.
    pub duration: f64,
    pub seed: u64,
}

impl Scenario {
    pub fn new(channel: ChannelConfig, geometry: ScenarioGeometry, traffic: TrafficModel) -> Self {
        Scenario {
            channel,
            geometry,
            traffic,
            radio: RadioConfig::default(),
            phy: PhyParams::default(),
            duration: DEFAULT_DURATION_S,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        self.geometry.validate()?;
        self.traffic.validate()?;
        self.phy.validate()?;
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::invalid(
                "duration",
                format!("must be > 0, got {}", self.duration),
            ));
        }
        for (name, v) in [
            ("tx_power", self.radio.tx_power),
            ("tx_antenna_gain", self.radio.tx_antenna_gain),
            ("rx_antenna_gain", self.radio.rx_antenna_gain),
        ] {
            if !v.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
        }
        Ok(())
    }

    /// Network-wide offered load in bit/s if every node were in range.
    pub fn nominal_offered_bps(&self) -> f64 {
        self.geometry.node_count as f64 * self.traffic.payload_bits()
            / self.traffic.mean_interarrival
    }
}
