//! Throughput figures derived from a finished run.
//!
//! Normalized quantities are channel-time fractions: for every active SF
//! channel (one with at least one assigned node), packets times slot length
//! over elapsed time, averaged across the active channels. With a single
//! channel this is the textbook slotted-ALOHA `G` and `S`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mac::{run_simulation, NodeState, SimOutcome, SF_COUNT};
use crate::phy::SfAssignment;
use crate::scenario::Scenario;
use crate::seed;

/// Minimum network throughput a deployment must sustain, in bit/s.
pub const DEFAULT_MIN_THROUGHPUT_BPS: f64 = 300.0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SfHistogram {
    /// Index 0 is SF7.
    pub counts: [u64; SF_COUNT],
    pub out_of_range: u64,
}

impl SfHistogram {
    pub fn from_assignments<'a>(assignments: impl IntoIterator<Item = &'a SfAssignment>) -> Self {
        let mut h = SfHistogram::default();
        for a in assignments {
            match a.sf() {
                Some(sf) => h.counts[sf.index()] += 1,
                None => h.out_of_range += 1,
            }
        }
        h
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.out_of_range
    }

    pub fn fraction(&self, sf_index: usize) -> f64 {
        let total = self.total();
        if total == 0 {
            0.0
        } else {
            self.counts[sf_index] as f64 / total as f64
        }
    }
}

pub fn sf_histogram(states: &[NodeState]) -> SfHistogram {
    SfHistogram::from_assignments(states.iter().map(|s| &s.sf))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThroughputReport {
    /// S.
    pub normalized_throughput: f64,
    /// G.
    pub normalized_offered: f64,
    /// Delivered payload bits per second, network-wide.
    pub absolute_throughput: f64,
    /// Offered payload bits per second from in-range nodes.
    pub offered_bits_rate: f64,
    /// Network throughput divided by node count, in-range or not.
    pub mean_node_throughput: f64,
    pub sf_histogram: SfHistogram,
}

impl ThroughputReport {
    pub fn new(outcome: &SimOutcome, scenario: &Scenario) -> Self {
        let absolute_throughput = absolute_throughput_bps(outcome);
        let n = outcome.node_count();
        ThroughputReport {
            normalized_throughput: normalized_throughput(outcome, scenario),
            normalized_offered: normalized_offered(outcome, scenario),
            absolute_throughput,
            offered_bits_rate: outcome.in_range_count() as f64 * scenario.traffic.payload_bits()
                / scenario.traffic.mean_interarrival,
            mean_node_throughput: if n == 0 {
                0.0
            } else {
                absolute_throughput / n as f64
            },
            sf_histogram: SfHistogram::from_assignments(&outcome.assignments),
        }
    }
}

fn channel_time_fraction(outcome: &SimOutcome, packets: impl Fn(usize) -> u64) -> f64 {
    let active: Vec<usize> = (0..SF_COUNT)
        .filter(|&i| outcome.per_sf[i].nodes > 0)
        .collect();
    if active.is_empty() || outcome.elapsed <= 0.0 {
        return 0.0;
    }
    let busy: f64 = active
        .iter()
        .map(|&i| packets(i) as f64 * outcome.slot_durations[i])
        .sum();
    busy / (outcome.elapsed * active.len() as f64)
}

/// Normalized offered traffic `G`, counting every generated packet.
pub fn normalized_offered(outcome: &SimOutcome, _scenario: &Scenario) -> f64 {
    channel_time_fraction(outcome, |i| outcome.per_sf[i].generated)
}

/// Normalized throughput `S`.
pub fn normalized_throughput(outcome: &SimOutcome, _scenario: &Scenario) -> f64 {
    channel_time_fraction(outcome, |i| outcome.per_sf[i].delivered)
}

pub fn absolute_throughput_bps(outcome: &SimOutcome) -> f64 {
    if outcome.elapsed <= 0.0 {
        return 0.0;
    }
    outcome.total_delivered_bits() as f64 / outcome.elapsed
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinThroughputCriterion {
    /// bit/s.
    pub threshold: f64,
}

impl Default for MinThroughputCriterion {
    fn default() -> Self {
        MinThroughputCriterion {
            threshold: DEFAULT_MIN_THROUGHPUT_BPS,
        }
    }
}

impl MinThroughputCriterion {
    pub fn new(threshold: f64) -> Result<Self> {
        if !(threshold > 0.0 && threshold.is_finite()) {
            return Err(Error::invalid(
                "threshold",
                format!("must be > 0, got {threshold}"),
            ));
        }
        Ok(MinThroughputCriterion { threshold })
    }

    /// Whether a deployment delivering `network_throughput` bit/s qualifies.
    pub fn is_met(&self, network_throughput: f64) -> bool {
        network_throughput >= self.threshold
    }
}

/// Seed of repetition `rep` at grid point `index` under `master`.
pub fn repetition_seed(master: u64, index: usize, rep: usize) -> u64 {
    seed::derive(master, &[index as u64, rep as u64])
}

/// Largest grid distance whose averaged network throughput meets the
/// criterion; `None` when no grid point does.
pub fn max_viable_from_curve(
    grid: &[f64],
    mean_throughput: &[f64],
    criterion: &MinThroughputCriterion,
) -> Option<f64> {
    grid.iter()
        .zip(mean_throughput)
        .rev()
        .find(|(_, &s)| criterion.is_met(s))
        .map(|(&d, _)| d)
}

/// Sweeps the gateway distance over `d_grid`, averaging network throughput
/// over `repetitions` seeds per point, and returns the maximum viable
/// distance. Repetition seeds derive from `template.seed`.
pub fn max_viable_distance(
    template: &Scenario,
    criterion: &MinThroughputCriterion,
    d_grid: &[f64],
    repetitions: usize,
) -> Result<Option<f64>> {
    if d_grid.is_empty() {
        return Err(Error::invalid("d_grid", "must not be empty"));
    }
    if d_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("d_grid", "must be strictly increasing"));
    }
    if repetitions == 0 {
        return Err(Error::invalid("repetitions", "must be >= 1"));
    }
    let means = d_grid
        .par_iter()
        .enumerate()
        .map(|(i, &d)| {
            let mut scenario = *template;
            scenario.geometry.gateway_distance = d;
            let mut total = 0.0;
            for rep in 0..repetitions {
                let out = run_simulation(&scenario, repetition_seed(template.seed, i, rep))?;
                total += absolute_throughput_bps(&out);
            }
            Ok(total / repetitions as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(max_viable_from_curve(d_grid, &means, criterion))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{ChannelConfig, DustIntensity, DustStorm};
    use crate::mac::{link_nodes, SfCounters};
    use crate::phy::SpreadingFactor;
    use crate::scenario::TrafficModel;
    use crate::topology::{Deployment, Position, ScenarioGeometry};

    fn scenario() -> Scenario {
        Scenario::new(
            ChannelConfig::earth(868e6),
            ScenarioGeometry::new(1000.0, 1000.0),
            TrafficModel::poisson(50, 100.0),
        )
    }

    fn outcome(per_sf: [SfCounters; SF_COUNT], slot: f64, elapsed: f64) -> SimOutcome {
        SimOutcome {
            nodes: vec![],
            assignments: vec![],
            per_sf,
            slot_durations: [slot; SF_COUNT],
            elapsed,
            payload_bytes: 50,
            no_nodes_in_range: false,
        }
    }

    #[test]
    fn offered_examples() {
        let s = scenario();
        let idle = outcome(
            [SfCounters {
                nodes: 1,
                ..Default::default()
            }; SF_COUNT],
            1.0,
            100.0,
        );
        assert_eq!(normalized_offered(&idle, &s), 0.0);

        let mut per_sf = [SfCounters::default(); SF_COUNT];
        per_sf[0] = SfCounters {
            nodes: 10,
            generated: 10_000,
            ..Default::default()
        };
        let one = outcome(per_sf, 0.1, 1000.0);
        assert!((normalized_offered(&one, &s) - 1.0).abs() < 1e-12);

        per_sf[3] = SfCounters {
            nodes: 2,
            ..Default::default()
        };
        let two = outcome(per_sf, 0.1, 1000.0);
        assert!((normalized_offered(&two, &s) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn throughput_examples() {
        let s = scenario();
        let mut per_sf = [SfCounters::default(); SF_COUNT];
        per_sf[0] = SfCounters {
            nodes: 3,
            generated: 50,
            attempted: 40,
            ..Default::default()
        };
        assert_eq!(normalized_throughput(&outcome(per_sf, 0.1, 10.0), &s), 0.0);

        per_sf[0] = SfCounters {
            nodes: 3,
            generated: 100,
            attempted: 100,
            delivered: 100,
            collided: 0,
        };
        assert!((normalized_throughput(&outcome(per_sf, 0.1, 10.0), &s) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn absolute_examples() {
        let mut o = outcome([SfCounters::default(); SF_COUNT], 0.1, 500.0);
        assert_eq!(absolute_throughput_bps(&o), 0.0);
        o.nodes = vec![crate::mac::NodeCounters {
            delivered_bits: 1000 * 400,
            ..Default::default()
        }];
        assert!((absolute_throughput_bps(&o) - 800.0).abs() < 1e-12);
        o.nodes = vec![crate::mac::NodeCounters {
            delivered_bits: 2048,
            ..Default::default()
        }];
        o.elapsed = 1.0;
        assert!((absolute_throughput_bps(&o) - 2048.0).abs() < 1e-12);
    }

    #[test]
    fn histogram_earth_all_sf7() {
        let s = Scenario {
            geometry: ScenarioGeometry::new(1000.0, 1000.0),
            ..scenario()
        };
        let dep = crate::topology::deploy_uniform_disk(&s.geometry, 5).unwrap();
        let h = sf_histogram(&link_nodes(&s, &dep).unwrap());
        assert_eq!(h.counts[0], 1000);
        assert_eq!(h.total(), 1000);
    }

    #[test]
    fn histogram_out_of_range_bucket() {
        let s = Scenario {
            channel: ChannelConfig::mars(868e6, None),
            ..scenario()
        };
        let dep = Deployment {
            gateway: Position::new(0.0, 0.0),
            nodes: vec![Position::new(50_000.0, 0.0); 7],
        };
        let h = sf_histogram(&link_nodes(&s, &dep).unwrap());
        assert_eq!(h.out_of_range, 7);
        assert_eq!(h.counts, [0; SF_COUNT]);
    }

    #[test]
    fn histogram_rotation_invariant() {
        let s = Scenario {
            channel: ChannelConfig::mars(868e6, Some(DustStorm::preset(DustIntensity::Severe))),
            ..scenario()
        };
        let dep =
            crate::topology::deploy_uniform_disk(&ScenarioGeometry::new(3000.0, 0.0), 8).unwrap();
        let gw = Position::new(1200.0, 0.0);
        let angle: f64 = 1.1;
        let rot = |p: &Position| {
            Position::new(
                p.x * angle.cos() - p.y * angle.sin(),
                p.x * angle.sin() + p.y * angle.cos(),
            )
        };
        let a = Deployment {
            gateway: gw,
            nodes: dep.nodes.clone(),
        };
        let b = Deployment {
            gateway: rot(&gw),
            nodes: dep.nodes.iter().map(rot).collect(),
        };
        assert_eq!(
            sf_histogram(&link_nodes(&s, &a).unwrap()),
            sf_histogram(&link_nodes(&s, &b).unwrap())
        );
    }

    #[test]
    fn report_invariants() {
        let s = Scenario {
            channel: ChannelConfig::mars(868e6, None),
            geometry: ScenarioGeometry::new(1000.0, 500.0),
            traffic: TrafficModel::from_offered_bps(50, 1000, 4000.0).unwrap(),
            ..scenario()
        };
        let out = run_simulation(&s, 3).unwrap();
        let r = ThroughputReport::new(&out, &s);
        assert!(r.normalized_throughput <= r.normalized_offered);
        assert!(r.normalized_throughput <= 1.0);
        assert!(r.absolute_throughput <= r.offered_bits_rate * 1.1);
        assert_eq!(r.sf_histogram.total(), 1000);
        assert_eq!(r.sf_histogram.out_of_range, 0);
        assert!((r.mean_node_throughput * 1000.0 - r.absolute_throughput).abs() < 1e-9);
    }

    #[test]
    fn max_distance_from_curve() {
        let c = MinThroughputCriterion::default();
        let grid = [100.0, 200.0, 300.0, 400.0];
        assert_eq!(
            max_viable_from_curve(&grid, &[500.0, 320.0, 290.0, 310.0], &c),
            Some(400.0)
        );
        assert_eq!(
            max_viable_from_curve(&grid, &[500.0, 320.0, 290.0, 10.0], &c),
            Some(200.0)
        );
        assert_eq!(max_viable_from_curve(&grid, &[0.0; 4], &c), None);
    }

    #[test]
    fn max_distance_errors_and_unsatisfiable() {
        let s = Scenario {
            duration: 50.0,
            ..scenario()
        };
        let c = MinThroughputCriterion::default();
        assert!(max_viable_distance(&s, &c, &[], 1).is_err());
        assert!(max_viable_distance(&s, &c, &[200.0, 100.0], 1).is_err());
        assert!(max_viable_distance(&s, &c, &[100.0], 0).is_err());
        // No single link can exceed the SF7 raw bit rate.
        let ceiling = crate::phy::bit_rate_bps(SpreadingFactor::SF7, &s.phy) * 1000.0;
        let c = MinThroughputCriterion::new(ceiling).unwrap();
        assert_eq!(
            max_viable_distance(&s, &c, &[100.0, 200.0], 2).unwrap(),
            None
        );
        assert!(MinThroughputCriterion::new(0.0).is_err());
    }
}
