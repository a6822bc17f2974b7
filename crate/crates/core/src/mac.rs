//! Event-driven simulation of slotted-ALOHA uplinks to a single gateway.
//!
//! Each spreading factor is its own slotted channel: slots are aligned to
//! t = 0 and last exactly one frame airtime at that SF. A packet generated
//! mid-slot waits for the next boundary. Two or more frames in the same
//! slot of the same SF destroy each other; different SFs never interact.
//! Each node buffers at most one packet and drops arrivals while busy.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::channel::{total_path_loss_db, MIN_DISTANCE_M};
use crate::error::{Error, Result};
use crate::phy::{self, assign_sf, received_power_dbm, PhyParams, SfAssignment, SpreadingFactor};
use crate::scenario::{ArrivalProcess, Scenario, TrafficModel};
use crate::seed::{self, Stream};
use crate::topology::{deploy_uniform_disk, Deployment, Position};

pub const SF_COUNT: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeState {
    pub position: Position,
    pub path_loss: f64,
    pub received_power: f64,
    pub sf: SfAssignment,
    /// Time of the next packet generation, seconds.
    pub next_arrival: f64,
    /// A packet is waiting for, or occupying, a slot.
    pub buffer_occupied: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NodeCounters {
    pub generated: u64,
    /// Transmissions whose slot completed within the run.
    pub attempted: u64,
    pub delivered: u64,
    pub dropped: u64,
    /// Packet still buffered or on air when the run ended (0 or 1).
    pub pending: u64,
    pub delivered_bits: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SfCounters {
    pub generated: u64,
    pub attempted: u64,
    pub delivered: u64,
    pub collided: u64,
    /// Nodes assigned to this SF.
    pub nodes: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutcome {
    pub nodes: Vec<NodeCounters>,
    pub assignments: Vec<SfAssignment>,
    pub per_sf: [SfCounters; SF_COUNT],
    /// Slot length of each SF channel, seconds.
    pub slot_durations: [f64; SF_COUNT],
    pub elapsed: f64,
    pub payload_bytes: u32,
    /// Set when no node could reach the gateway.
    pub no_nodes_in_range: bool,
}

impl SimOutcome {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn in_range_count(&self) -> usize {
        self.assignments.iter().filter(|a| a.sf().is_some()).count()
    }

    pub fn total_delivered_bits(&self) -> u64 {
        self.nodes.iter().map(|n| n.delivered_bits).sum()
    }

    pub fn totals(&self) -> NodeCounters {
        self.nodes
            .iter()
            .fold(NodeCounters::default(), |mut acc, n| {
                acc.generated += n.generated;
                acc.attempted += n.attempted;
                acc.delivered += n.delivered;
                acc.dropped += n.dropped;
                acc.pending += n.pending;
                acc.delivered_bits += n.delivered_bits;
                acc
            })
    }
}

/// Computes the static link state of every node: path loss, receive power
/// and SF. Nodes closer than 1 m to the gateway are evaluated at 1 m.
pub fn link_nodes(scenario: &Scenario, deployment: &Deployment) -> Result<Vec<NodeState>> {
    deployment
        .nodes
        .iter()
        .map(|&position| {
            let d = position
                .distance_to(&deployment.gateway)
                .max(MIN_DISTANCE_M);
            let path_loss = total_path_loss_db(d, &scenario.channel)?;
            let received_power = received_power_dbm(&scenario.radio, path_loss);
            Ok(NodeState {
                position,
                path_loss,
                received_power,
                sf: assign_sf(received_power),
                next_arrival: f64::INFINITY,
                buffer_occupied: false,
            })
        })
        .collect()
}

/// Deploys, links and simulates one scenario.
pub fn run_simulation(scenario: &Scenario, seed: u64) -> Result<SimOutcome> {
    scenario.validate()?;
    let deployment = deploy_uniform_disk(&scenario.geometry, seed)?;
    let nodes = link_nodes(scenario, &deployment)?;
    Simulation::new(
        nodes,
        scenario.traffic,
        scenario.phy,
        scenario.duration,
        seed,
    )?
    .run()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum EventKind {
    // Slot ends sort first so a buffer freed at t accepts an arrival at t.
    SlotEnd { sf: usize, slot: u64 },
    Arrival { node: usize },
}

#[derive(Debug, Clone, Copy)]
struct Scheduled {
    at: f64,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Scheduled {}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scheduled {
    // Reversed: BinaryHeap is a max-heap and we want the earliest event.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .at
            .total_cmp(&self.at)
            .then_with(|| other.kind.cmp(&self.kind))
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// One run's mutable state.
pub struct Simulation {
    nodes: Vec<NodeState>,
    traffic: TrafficModel,
    duration: f64,
    slot_durations: [f64; SF_COUNT],
    rngs: Vec<ChaCha8Rng>,
    gap: Exp<f64>,
    queue: BinaryHeap<Scheduled>,
    next_seq: u64,
    slots: [BTreeMap<u64, Vec<usize>>; SF_COUNT],
    counters: Vec<NodeCounters>,
    per_sf: [SfCounters; SF_COUNT],
}

impl Simulation {
    pub fn new(
        nodes: Vec<NodeState>,
        traffic: TrafficModel,
        phy: PhyParams,
        duration: f64,
        seed: u64,
    ) -> Result<Self> {
        traffic.validate()?;
        phy.validate()?;
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(Error::invalid(
                "duration",
                format!("must be > 0, got {duration}"),
            ));
        }
        let mut slot_durations = [0.0; SF_COUNT];
        for sf in SpreadingFactor::all() {
            slot_durations[sf.index()] = phy::time_on_air_s(traffic.payload_bytes, sf, &phy)?;
        }
        let rngs = (0..nodes.len())
            .map(|i| seed::rng(seed, Stream::Traffic, i as u64))
            .collect();
        let gap = Exp::new(1.0 / traffic.mean_interarrival)
            .map_err(|e| Error::invalid("mean_interarrival", e.to_string()))?;
        let mut per_sf = [SfCounters::default(); SF_COUNT];
        for n in &nodes {
            if let Some(sf) = n.sf.sf() {
                per_sf[sf.index()].nodes += 1;
            }
        }
        let mut sim = Simulation {
            counters: vec![NodeCounters::default(); nodes.len()],
            nodes,
            traffic,
            duration,
            slot_durations,
            rngs,
            gap,
            queue: BinaryHeap::new(),
            next_seq: 0,
            slots: Default::default(),
            per_sf,
        };
        for i in 0..sim.nodes.len() {
            if sim.nodes[i].sf.sf().is_some() {
                let first = sim.first_arrival(i);
                sim.set_arrival(i, first);
            }
        }
        Ok(sim)
    }

    /// Replaces each in-range node's first arrival time; used to force
    /// deterministic slot alignment. `times` is indexed by node.
    pub fn with_first_arrivals(mut self, times: &[f64]) -> Self {
        self.queue
            .retain(|e| !matches!(e.kind, EventKind::Arrival { .. }));
        for (i, &t) in times.iter().enumerate().take(self.nodes.len()) {
            if self.nodes[i].sf.sf().is_some() {
                self.set_arrival(i, t);
            }
        }
        self
    }

    pub fn nodes(&self) -> &[NodeState] {
        &self.nodes
    }

    fn first_arrival(&mut self, node: usize) -> f64 {
        match self.traffic.arrival_process {
            ArrivalProcess::Poisson => self.gap.sample(&mut self.rngs[node]),
            ArrivalProcess::Periodic => {
                self.rngs[node].random::<f64>() * self.traffic.mean_interarrival
            }
        }
    }

    fn next_gap(&mut self, node: usize) -> f64 {
        match self.traffic.arrival_process {
            ArrivalProcess::Poisson => self.gap.sample(&mut self.rngs[node]),
            ArrivalProcess::Periodic => self.traffic.mean_interarrival,
        }
    }

    fn set_arrival(&mut self, node: usize, at: f64) {
        self.nodes[node].next_arrival = at;
        self.schedule(at, EventKind::Arrival { node });
    }

    fn schedule(&mut self, at: f64, kind: EventKind) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.queue.push(Scheduled { at, seq, kind });
    }

    pub fn run(mut self) -> Result<SimOutcome> {
        while let Some(ev) = self.queue.pop() {
            if ev.at > self.duration {
                break;
            }
            match ev.kind {
                EventKind::Arrival { node } => self.on_arrival(node, ev.at),
                EventKind::SlotEnd { sf, slot } => self.on_slot_end(sf, slot),
            }
        }
        for (state, counters) in self.nodes.iter().zip(self.counters.iter_mut()) {
            counters.pending = state.buffer_occupied as u64;
        }
        let assignments: Vec<SfAssignment> = self.nodes.iter().map(|n| n.sf).collect();
        let no_nodes_in_range = assignments.iter().all(|a| a.sf().is_none());
        Ok(SimOutcome {
            nodes: self.counters,
            assignments,
            per_sf: self.per_sf,
            slot_durations: self.slot_durations,
            elapsed: self.duration,
            payload_bytes: self.traffic.payload_bytes,
            no_nodes_in_range,
        })
    }

    fn on_arrival(&mut self, node: usize, now: f64) {
        let sf = match self.nodes[node].sf.sf() {
            Some(sf) => sf.index(),
            None => return,
        };
        self.counters[node].generated += 1;
        self.per_sf[sf].generated += 1;
        let next = now + self.next_gap(node);
        self.set_arrival(node, next);

        if self.nodes[node].buffer_occupied {
            self.counters[node].dropped += 1;
            return;
        }
        self.nodes[node].buffer_occupied = true;
        let slot_len = self.slot_durations[sf];
        let slot = (now / slot_len).ceil() as u64;
        let occupants = self.slots[sf].entry(slot).or_default();
        occupants.push(node);
        if occupants.len() == 1 {
            self.schedule(
                (slot + 1) as f64 * slot_len,
                EventKind::SlotEnd { sf, slot },
            );
        }
    }

    fn on_slot_end(&mut self, sf: usize, slot: u64) {
        let occupants = self.slots[sf].remove(&slot).unwrap_or_default();
        let success = occupants.len() == 1;
        let bits = 8 * self.traffic.payload_bytes as u64;
        for &node in &occupants {
            self.nodes[node].buffer_occupied = false;
            let c = &mut self.counters[node];
            c.attempted += 1;
            if success {
                c.delivered += 1;
                c.delivered_bits += bits;
            }
        }
        let s = &mut self.per_sf[sf];
        s.attempted += occupants.len() as u64;
        if success {
            s.delivered += 1;
        } else {
            s.collided += occupants.len() as u64;
        }
    }
}
