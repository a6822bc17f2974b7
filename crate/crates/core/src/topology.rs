//! Node placement: a fixed number of nodes drawn uniformly over a disk,
//! with the gateway on the positive x axis.

use std::f64::consts::PI;
use std::io::Write;

use rand::Rng;

use crate::error::{Error, Result};
use crate::seed::{self, Stream};

pub const DEFAULT_NODE_COUNT: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Self {
        Position { x, y }
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance_to(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioGeometry {
    /// Deployment disk radius (m), centered at the origin.
    pub disk_radius: f64,
    /// Distance of the gateway from the disk center (m).
    pub gateway_distance: f64,
    pub node_count: usize,
}

impl ScenarioGeometry {
    pub fn new(disk_radius: f64, gateway_distance: f64) -> Self {
        ScenarioGeometry {
            disk_radius,
            gateway_distance,
            node_count: DEFAULT_NODE_COUNT,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.disk_radius > 0.0 && self.disk_radius.is_finite()) {
            return Err(Error::invalid(
                "disk_radius",
                format!("must be > 0, got {}", self.disk_radius),
            ));
        }
        if !(self.gateway_distance >= 0.0 && self.gateway_distance.is_finite()) {
            return Err(Error::invalid(
                "gateway_distance",
                format!("must be >= 0, got {}", self.gateway_distance),
            ));
        }
        if self.node_count == 0 {
            return Err(Error::invalid("node_count", "must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Deployment {
    pub gateway: Position,
    pub nodes: Vec<Position>,
}

impl Deployment {
    /// Writes `node,x,y` rows, one per node.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["node", "x_m", "y_m"])?;
        for (i, p) in self.nodes.iter().enumerate() {
            w.write_record([i.to_string(), p.x.to_string(), p.y.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Places `node_count` nodes i.i.d. uniformly in the disk, i.e. a Poisson
/// point process conditioned on its count.
pub fn deploy_uniform_disk(geometry: &ScenarioGeometry, seed: u64) -> Result<Deployment> {
    geometry.validate()?;
    Ok(sample_disk(geometry, geometry.node_count, seed))
}

pub(crate) fn sample_disk(geometry: &ScenarioGeometry, count: usize, seed: u64) -> Deployment {
    let mut rng = seed::rng(seed, Stream::Deployment, 0);
    let nodes = (0..count)
        .map(|_| {
            let r = geometry.disk_radius * rng.random::<f64>().sqrt();
            let theta = 2.0 * PI * rng.random::<f64>();
            // Clamp guards against r*cos/sin rounding past the boundary.
            let p = Position::new(r * theta.cos(), r * theta.sin());
            let n = p.norm();
            if n > geometry.disk_radius {
                Position::new(
                    p.x * geometry.disk_radius / n,
                    p.y * geometry.disk_radius / n,
                )
            } else {
                p
            }
        })
        .collect();
    Deployment {
        gateway: Position::new(geometry.gateway_distance, 0.0),
        nodes,
    }
}
