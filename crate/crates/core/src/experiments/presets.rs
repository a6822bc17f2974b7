//! Named sweeps, one per figure.

use std::fmt::Write as _;

use crate::channel::{ChannelConfig, DustIntensity, DustStorm, Environment, DEFAULT_FREQUENCY_HZ};
use crate::error::{Error, Result};
use crate::metrics::MinThroughputCriterion;
use crate::scenario::{Scenario, TrafficModel};
use crate::topology::{ScenarioGeometry, DEFAULT_NODE_COUNT};

use super::{
    execute, max_distance_table, max_distances, run_table, CsvTable, MaxDistanceRow, RunRow,
    SeriesPoint, DEFAULT_REPETITIONS,
};

/// Network-wide packet rate of the distance experiments: 2 packets/s,
/// i.e. 0.8 kbit/s at 50 B and 4.096 kbit/s at 256 B.
const DISTANCE_PACKET_RATE: f64 = 2.0;

/// One CSV worth of sweep points.
#[derive(Debug, Clone)]
pub struct SubFigure {
    pub file_name: String,
    pub points: Vec<SeriesPoint>,
    pub repetitions: usize,
    /// Also emit a maximum-viable-distance table under this name.
    pub max_distance_file: Option<String>,
}

#[derive(Debug, Clone, Copy)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    build: fn() -> Vec<SubFigure>,
}

impl Preset {
    pub fn subfigures(&self) -> Vec<SubFigure> {
        (self.build)()
    }

    /// Runs every subfigure.
    pub fn execute(&self, master_seed: u64, jobs: usize) -> Result<PresetOutput> {
        let subfigures = self.subfigures();
        let mut results = Vec::with_capacity(subfigures.len());
        for sub in &subfigures {
            let rows = execute(&sub.points, sub.repetitions, master_seed, jobs)?;
            let max_distance = sub.max_distance_file.as_ref().map(|name| {
                (
                    name.clone(),
                    max_distances(&rows, &MinThroughputCriterion::default()),
                )
            });
            results.push(SubFigureResult {
                file_name: sub.file_name.clone(),
                rows,
                max_distance,
            });
        }
        Ok(PresetOutput {
            subfigures: results,
            manifest: self.manifest(master_seed, &subfigures),
        })
    }

    /// Runs every subfigure and returns its tables plus the manifest text.
    pub fn run(&self, master_seed: u64, jobs: usize) -> Result<(Vec<CsvTable>, String)> {
        let out = self.execute(master_seed, jobs)?;
        Ok((out.tables()?, out.manifest))
    }

    fn manifest(&self, master_seed: u64, subfigures: &[SubFigure]) -> String {
        let mut m = String::new();
        let _ = writeln!(m, "tool = lorasim {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(m, "preset = {}", self.name);
        let _ = writeln!(m, "master_seed = {master_seed}");
        for sub in subfigures {
            let _ = writeln!(m, "[{}]", sub.file_name);
            let _ = writeln!(m, "repetitions = {}", sub.repetitions);
            let mut series: Vec<&str> = Vec::new();
            for p in &sub.points {
                if series.last() != Some(&p.series.as_str()) {
                    series.push(&p.series);
                }
            }
            for s in series {
                let values: Vec<&str> = sub
                    .points
                    .iter()
                    .filter(|p| p.series == s)
                    .map(|p| p.value.as_str())
                    .collect();
                let axis = sub
                    .points
                    .iter()
                    .find(|p| p.series == s)
                    .map_or("", |p| p.axis);
                let _ = writeln!(m, "series {s}: {axis} = [{}]", values.join(", "));
            }
            if let Some(name) = &sub.max_distance_file {
                let _ = writeln!(m, "max_distance_table = {name}");
            }
        }
        m
    }
}

#[derive(Debug, Clone)]
pub struct SubFigureResult {
    pub file_name: String,
    pub rows: Vec<RunRow>,
    pub max_distance: Option<(String, Vec<MaxDistanceRow>)>,
}

#[derive(Debug, Clone)]
pub struct PresetOutput {
    pub subfigures: Vec<SubFigureResult>,
    pub manifest: String,
}

impl PresetOutput {
    pub fn subfigure(&self, file_name: &str) -> Option<&SubFigureResult> {
        self.subfigures.iter().find(|s| s.file_name == file_name)
    }

    pub fn tables(&self) -> Result<Vec<CsvTable>> {
        let mut tables = Vec::new();
        for sub in &self.subfigures {
            tables.push(run_table(&sub.file_name, &sub.rows)?);
            if let Some((name, rows)) = &sub.max_distance {
                tables.push(max_distance_table(name, rows)?);
            }
        }
        Ok(tables)
    }
}

pub const PRESETS: [Preset; 7] = [
    Preset {
        name: "fig2",
        description: "normalized throughput vs normalized offered traffic, per deployment radius",
        build: fig2,
    },
    Preset {
        name: "fig3",
        description: "spreading-factor distribution, Earth vs Mars, per deployment radius",
        build: fig3,
    },
    Preset {
        name: "fig4",
        description: "throughput vs gateway distance for 50 B and 256 B packets, Earth vs Mars",
        build: fig4,
    },
    Preset {
        name: "fig5",
        description: "Mars throughput vs gateway distance for several offered loads, 256 B",
        build: fig5,
    },
    Preset {
        name: "fig6",
        description: "Mars maximum viable distance vs offered load, 50 B",
        build: fig6,
    },
    Preset {
        name: "fig7",
        description: "Mars throughput vs deployment radius for several dust particle radii",
        build: fig7,
    },
    Preset {
        name: "fig8",
        description: "Mars throughput vs gateway distance per carrier frequency, severe storm",
        build: fig8,
    },
];

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|p| p.name).collect()
}

pub fn find_preset(name: &str) -> Result<&'static Preset> {
    PRESETS
        .iter()
        .find(|p| p.name == name)
        .ok_or_else(|| Error::UnknownPreset {
            name: name.to_string(),
            available: preset_names().join(", "),
        })
}

pub const EARTH_RADII_M: [f64; 5] = [500.0, 1000.0, 2500.0, 5000.0, 7500.0];
pub const MARS_RADII_M: [f64; 4] = [500.0, 1000.0, 2000.0, 4000.0];
pub const SF_RADII_M: [f64; 4] = [1000.0, 2000.0, 3000.0, 4000.0];
pub const FIG5_OFFERED_BPS: [f64; 4] = [2048.0, 4096.0, 6827.0, 20480.0];
pub const FIG8_FREQUENCIES_HZ: [f64; 4] = [433e6, 868e6, 1.5e9, 2.3e9];
/// Mean dust radii; `None` is a clear sky. The first three are the storm
/// presets, the rest extend far past anything observed on Mars.
pub const FIG7_RADII_M: [Option<f64>; 8] = [
    None,
    Some(1.5e-6),
    Some(4.5e-6),
    Some(20e-6),
    Some(1e-4),
    Some(2e-4),
    Some(5e-4),
    Some(1e-3),
];

/// 100 m to 7 km in 100 m steps.
pub fn distance_grid() -> Vec<f64> {
    (1..=70).map(|i| i as f64 * 100.0).collect()
}

/// Offered loads of the S-vs-G sweep: 400 bit/s times powers of sqrt(2).
pub fn fig2_offered_grid() -> Vec<f64> {
    (0..=14)
        .map(|k| (400.0 * 2f64.powf(k as f64 / 2.0)).round())
        .collect()
}

/// Offered loads of the d-bar sweep: the headline loads plus
/// half-octave fill-in between 400 bit/s and 25.6 kbit/s.
pub fn fig6_offered_grid() -> Vec<f64> {
    let mut grid: Vec<f64> = (0..=12)
        .map(|k| (400.0 * 2f64.powf(k as f64 / 2.0)).round())
        .collect();
    grid.extend([4096.0, 6827.0, 20480.0]);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

fn base(environment: Environment, payload_bytes: u32, offered_bps: f64) -> Scenario {
    let channel = match environment {
        Environment::Earth => ChannelConfig::earth(DEFAULT_FREQUENCY_HZ),
        Environment::Mars => ChannelConfig::mars(DEFAULT_FREQUENCY_HZ, None),
    };
    Scenario::new(
        channel,
        ScenarioGeometry::new(1000.0, 1000.0),
        TrafficModel::from_offered_bps(payload_bytes, DEFAULT_NODE_COUNT, offered_bps)
            .expect("preset loads are positive"),
    )
}

fn distance_rate_bps(payload_bytes: u32) -> f64 {
    DISTANCE_PACKET_RATE * 8.0 * payload_bytes as f64
}

fn point(
    series: String,
    axis: &'static str,
    value: f64,
    position: usize,
    scenario: Scenario,
) -> SeriesPoint {
    SeriesPoint {
        series,
        axis,
        value: value.to_string(),
        position,
        scenario,
    }
}

fn distance_series(series: String, template: Scenario) -> impl Iterator<Item = SeriesPoint> {
    distance_grid().into_iter().enumerate().map(move |(i, d)| {
        let mut s = template;
        s.geometry.gateway_distance = d;
        point(series.clone(), "gateway_distance_m", d, i, s)
    })
}

fn fig2() -> Vec<SubFigure> {
    let panel = |env: Environment, radii: &[f64]| {
        let mut points = Vec::new();
        for &r in radii {
            for (i, g) in fig2_offered_grid().into_iter().enumerate() {
                let mut s = base(env, 50, g);
                s.geometry.disk_radius = r;
                points.push(point(format!("R={r}"), "offered_bps", g, i, s));
            }
        }
        SubFigure {
            file_name: format!("fig2_{env}.csv"),
            points,
            repetitions: DEFAULT_REPETITIONS,
            max_distance_file: None,
        }
    };
    vec![
        panel(Environment::Earth, &EARTH_RADII_M),
        panel(Environment::Mars, &MARS_RADII_M),
    ]
}

fn fig3() -> Vec<SubFigure> {
    let mut points = Vec::new();
    for env in [Environment::Earth, Environment::Mars] {
        for (i, &r) in SF_RADII_M.iter().enumerate() {
            let mut s = base(env, 50, distance_rate_bps(50));
            s.geometry.disk_radius = r;
            points.push(point(env.to_string(), "disk_radius_m", r, i, s));
        }
    }
    vec![SubFigure {
        file_name: "fig3_sf_distribution.csv".into(),
        points,
        repetitions: DEFAULT_REPETITIONS,
        max_distance_file: None,
    }]
}

fn fig4() -> Vec<SubFigure> {
    let mut points = Vec::new();
    for env in [Environment::Earth, Environment::Mars] {
        for payload in [50, 256] {
            let template = base(env, payload, distance_rate_bps(payload));
            points.extend(distance_series(format!("{env}-{payload}B"), template));
        }
    }
    vec![SubFigure {
        file_name: "fig4_throughput.csv".into(),
        points,
        repetitions: DEFAULT_REPETITIONS,
        max_distance_file: Some("fig4_max_distance.csv".into()),
    }]
}

fn fig5() -> Vec<SubFigure> {
    let points = FIG5_OFFERED_BPS
        .iter()
        .flat_map(|&g| distance_series(format!("G={g}"), base(Environment::Mars, 256, g)))
        .collect();
    vec![SubFigure {
        file_name: "fig5_throughput.csv".into(),
        points,
        repetitions: DEFAULT_REPETITIONS,
        max_distance_file: Some("fig5_max_distance.csv".into()),
    }]
}

fn fig6() -> Vec<SubFigure> {
    let points = fig6_offered_grid()
        .into_iter()
        .flat_map(|g| distance_series(format!("G={g}"), base(Environment::Mars, 50, g)))
        .collect();
    vec![SubFigure {
        file_name: "fig6_throughput.csv".into(),
        points,
        repetitions: DEFAULT_REPETITIONS,
        max_distance_file: Some("fig6_max_distance.csv".into()),
    }]
}

fn fig7() -> Vec<SubFigure> {
    let severe = DustStorm::preset(DustIntensity::Severe);
    let radii: Vec<f64> = (1..=8).map(|i| i as f64 * 500.0).collect();
    let mut points = Vec::new();
    for radius in FIG7_RADII_M {
        let series = match radius {
            Some(r) => format!("r={r}"),
            None => "none".to_string(),
        };
        for (i, &disk) in radii.iter().enumerate() {
            let mut s = base(Environment::Mars, 256, distance_rate_bps(256));
            s.channel.dust = radius.map(|r| severe.with_mean_radius(r));
            s.geometry.disk_radius = disk;
            points.push(point(series.clone(), "disk_radius_m", disk, i, s));
        }
    }
    vec![SubFigure {
        file_name: "fig7_throughput.csv".into(),
        points,
        repetitions: DEFAULT_REPETITIONS,
        max_distance_file: None,
    }]
}

/// 250 m to 3 km, where the 868 MHz network is still reachable.
pub fn fig8_distance_grid() -> Vec<f64> {
    (1..=12).map(|i| i as f64 * 250.0).collect()
}

fn fig8() -> Vec<SubFigure> {
    let severe = DustStorm::preset(DustIntensity::Severe);
    let mut points = Vec::new();
    for f in FIG8_FREQUENCIES_HZ {
        for (i, d) in fig8_distance_grid().into_iter().enumerate() {
            let mut s = base(Environment::Mars, 256, distance_rate_bps(256));
            s.channel = ChannelConfig::mars(f, Some(severe));
            s.geometry.gateway_distance = d;
            points.push(point(format!("f={f}"), "gateway_distance_m", d, i, s));
        }
    }
    vec![SubFigure {
        file_name: "fig8_throughput.csv".into(),
        points,
        repetitions: DEFAULT_REPETITIONS,
        max_distance_file: None,
    }]
}
