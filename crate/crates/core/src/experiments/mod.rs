//! Parameter sweeps, figure presets and CSV output.
//!
//! A sweep is a list of [`SeriesPoint`]s, each a fully specified
//! [`Scenario`] tagged with the series and axis value it belongs to. Every
//! point runs `repetitions` times; repetition `r` of the point at axis
//! position `i` uses `repetition_seed(master, i, r)`. Series do not enter
//! the seed, so points at the same axis position in different series see
//! the same deployments and arrival streams.

mod presets;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::channel::DustIntensity;
use crate::error::{Error, Result};
use crate::mac::run_simulation;
use crate::metrics::{
    max_viable_from_curve, repetition_seed, MinThroughputCriterion, ThroughputReport,
};
use crate::scenario::Scenario;

pub use presets::{
    distance_grid, fig2_offered_grid, fig6_offered_grid, fig8_distance_grid, find_preset,
    preset_names, Preset, PresetOutput, SubFigure, SubFigureResult, EARTH_RADII_M,
    FIG5_OFFERED_BPS, FIG7_RADII_M, FIG8_FREQUENCIES_HZ, MARS_RADII_M, PRESETS, SF_RADII_M,
};

pub const DEFAULT_REPETITIONS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepAxis {
    GatewayDistance,
    DiskRadius,
    Frequency,
    PayloadBytes,
    MeanInterarrival,
    DustPreset,
    MeanRadius,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::GatewayDistance => "gateway_distance_m",
            SweepAxis::DiskRadius => "disk_radius_m",
            SweepAxis::Frequency => "frequency_hz",
            SweepAxis::PayloadBytes => "payload_bytes",
            SweepAxis::MeanInterarrival => "mean_interarrival_s",
            SweepAxis::DustPreset => "dust_preset",
            SweepAxis::MeanRadius => "dust_radius_m",
        }
    }

    /// Sets this axis of `scenario` to `value`.
    pub fn apply(self, value: &SweepValue, scenario: &mut Scenario) -> Result<()> {
        let number = |v: &SweepValue| match v {
            SweepValue::Number(x) => Ok(*x),
            SweepValue::Dust(_) => Err(Error::invalid("sweep value", "expected a number")),
        };
        match self {
            SweepAxis::GatewayDistance => scenario.geometry.gateway_distance = number(value)?,
            SweepAxis::DiskRadius => scenario.geometry.disk_radius = number(value)?,
            SweepAxis::Frequency => scenario.channel.frequency = number(value)?,
            SweepAxis::PayloadBytes => {
                let x = number(value)?;
                if x.fract() != 0.0 || !(1.0..=u32::MAX as f64).contains(&x) {
                    return Err(Error::invalid(
                        "payload_bytes",
                        format!("must be a positive integer, got {x}"),
                    ));
                }
                scenario.traffic.payload_bytes = x as u32;
            }
            SweepAxis::MeanInterarrival => scenario.traffic.mean_interarrival = number(value)?,
            SweepAxis::DustPreset => match value {
                SweepValue::Dust(preset) => {
                    scenario.channel.dust = preset.map(crate::channel::DustStorm::preset)
                }
                SweepValue::Number(_) => {
                    return Err(Error::invalid("dust_preset", "expected a preset name"))
                }
            },
            SweepAxis::MeanRadius => {
                let r = number(value)?;
                match scenario.channel.dust.as_mut() {
                    Some(storm) => storm.mean_radius = r,
                    None => {
                        return Err(Error::invalid(
                            "dust_radius_m",
                            "sweeping the particle radius requires a configured dust storm",
                        ))
                    }
                }
            }
        }
        Ok(())
    }
}

impl FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s {
            "d" | "gateway_distance" | "gateway_distance_m" => SweepAxis::GatewayDistance,
            "R" | "disk_radius" | "disk_radius_m" => SweepAxis::DiskRadius,
            "frequency" | "frequency_hz" => SweepAxis::Frequency,
            "payload_bytes" => SweepAxis::PayloadBytes,
            "mean_interarrival" | "mean_interarrival_s" => SweepAxis::MeanInterarrival,
            "dust_preset" => SweepAxis::DustPreset,
            "mean_radius" | "dust_radius_m" => SweepAxis::MeanRadius,
            other => {
                return Err(format!(
                    "unknown sweep axis `{other}` (expected d, R, frequency, payload_bytes, \
                     mean_interarrival, dust_preset or mean_radius)"
                ))
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepValue {
    Number(f64),
    /// `None` is a clear sky.
    Dust(Option<DustIntensity>),
}

impl fmt::Display for SweepValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepValue::Number(x) => write!(f, "{x}"),
            SweepValue::Dust(None) => f.write_str("none"),
            SweepValue::Dust(Some(d)) => f.write_str(d.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: Scenario,
    pub axis: SweepAxis,
    pub values: Vec<SweepValue>,
    pub repetitions: usize,
    pub output_path: PathBuf,
}

impl SweepSpec {
    pub fn points(&self) -> Result<Vec<SeriesPoint>> {
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let mut scenario = self.base;
                self.axis.apply(v, &mut scenario)?;
                scenario.validate()?;
                Ok(SeriesPoint {
                    series: "sweep".to_string(),
                    axis: self.axis.name(),
                    value: v.to_string(),
                    position: i,
                    scenario,
                })
            })
            .collect()
    }
}

/// One x-axis position of one plotted series.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPoint {
    pub series: String,
    pub axis: &'static str,
    pub value: String,
    /// Index along the axis; keys the repetition seeds.
    pub position: usize,
    pub scenario: Scenario,
}

pub const RUN_HEADER: [&str; 31] = [
    "series",
    "axis",
    "value",
    "repetition",
    "seed",
    "environment",
    "frequency_hz",
    "disk_radius_m",
    "gateway_distance_m",
    "node_count",
    "payload_bytes",
    "mean_interarrival_s",
    "offered_bps",
    "dust_density_m3",
    "dust_radius_m",
    "duration_s",
    "normalized_offered",
    "normalized_throughput",
    "throughput_bps",
    "mean_node_throughput_bps",
    "generated",
    "attempted",
    "delivered",
    "dropped",
    "sf7",
    "sf8",
    "sf9",
    "sf10",
    "sf11",
    "sf12",
    "out_of_range",
];

pub const MAX_DISTANCE_HEADER: [&str; 9] = [
    "series",
    "environment",
    "payload_bytes",
    "offered_bps",
    "disk_radius_m",
    "repetitions",
    "threshold_bps",
    "grid_points",
    "max_distance_m",
];

/// Result of one repetition of one point.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub series: String,
    pub axis: &'static str,
    pub value: String,
    pub repetition: usize,
    pub seed: u64,
    pub scenario: Scenario,
    pub report: ThroughputReport,
    pub generated: u64,
    pub attempted: u64,
    pub delivered: u64,
    pub dropped: u64,
}

impl RunRow {
    pub fn record(&self) -> Vec<String> {
        let s = &self.scenario;
        let r = &self.report;
        let (density, radius) = match s.channel.effective_dust() {
            Some(d) => (d.particle_density.to_string(), d.mean_radius.to_string()),
            None => ("0".to_string(), "0".to_string()),
        };
        let mut rec = vec![
            self.series.clone(),
            self.axis.to_string(),
            self.value.clone(),
            self.repetition.to_string(),
            self.seed.to_string(),
            s.channel.environment.to_string(),
            s.channel.frequency.to_string(),
            s.geometry.disk_radius.to_string(),
            s.geometry.gateway_distance.to_string(),
            s.geometry.node_count.to_string(),
            s.traffic.payload_bytes.to_string(),
            s.traffic.mean_interarrival.to_string(),
            s.nominal_offered_bps().to_string(),
            density,
            radius,
            s.duration.to_string(),
            r.normalized_offered.to_string(),
            r.normalized_throughput.to_string(),
            r.absolute_throughput.to_string(),
            r.mean_node_throughput.to_string(),
            self.generated.to_string(),
            self.attempted.to_string(),
            self.delivered.to_string(),
            self.dropped.to_string(),
        ];
        rec.extend(r.sf_histogram.counts.iter().map(u64::to_string));
        rec.push(r.sf_histogram.out_of_range.to_string());
        rec
    }
}

/// Maximum viable distance of one series.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxDistanceRow {
    pub series: String,
    pub template: Scenario,
    pub repetitions: usize,
    pub threshold: f64,
    pub grid_points: usize,
    pub max_distance: Option<f64>,
}

impl MaxDistanceRow {
    pub fn record(&self) -> Vec<String> {
        let s = &self.template;
        vec![
            self.series.clone(),
            s.channel.environment.to_string(),
            s.traffic.payload_bytes.to_string(),
            s.nominal_offered_bps().to_string(),
            s.geometry.disk_radius.to_string(),
            self.repetitions.to_string(),
            self.threshold.to_string(),
            self.grid_points.to_string(),
            self.max_distance.map(|d| d.to_string()).unwrap_or_default(),
        ]
    }
}

/// Runs every `(point, repetition)` pair on up to `jobs` threads. Output
/// order is point order, then repetition.
pub fn execute(
    points: &[SeriesPoint],
    repetitions: usize,
    master_seed: u64,
    jobs: usize,
) -> Result<Vec<RunRow>> {
    if repetitions == 0 {
        return Err(Error::invalid("repetitions", "must be >= 1"));
    }
    let tasks: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..repetitions).map(move |r| (p, r)))
        .collect();
    let run_one = |&(p, rep): &(usize, usize)| -> Result<RunRow> {
        let point = &points[p];
        let seed = repetition_seed(master_seed, point.position, rep);
        let outcome = run_simulation(&point.scenario, seed)?;
        let totals = outcome.totals();
        Ok(RunRow {
            series: point.series.clone(),
            axis: point.axis,
            value: point.value.clone(),
            repetition: rep,
            seed,
            scenario: point.scenario,
            report: ThroughputReport::new(&outcome, &point.scenario),
            generated: totals.generated,
            attempted: totals.attempted,
            delivered: totals.delivered,
            dropped: totals.dropped,
        })
    };
    if jobs <= 1 {
        return tasks.iter().map(run_one).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Io(e.to_string()))?;
    pool.install(|| tasks.par_iter().map(run_one).collect())
}

/// Groups distance-sweep rows by series and extracts each series' maximum
/// viable distance from the repetition-averaged network throughput.
pub fn max_distances(rows: &[RunRow], criterion: &MinThroughputCriterion) -> Vec<MaxDistanceRow> {
    let mut out: Vec<MaxDistanceRow> = Vec::new();
    let mut start = 0;
    while start < rows.len() {
        let series = &rows[start].series;
        let end = start
            + rows[start..]
                .iter()
                .take_while(|r| &r.series == series)
                .count();
        let group = &rows[start..end];

        let mut grid: Vec<f64> = Vec::new();
        let mut sums: Vec<(f64, usize)> = Vec::new();
        for row in group {
            let d = row.scenario.geometry.gateway_distance;
            if grid.last() != Some(&d) {
                grid.push(d);
                sums.push((0.0, 0));
            }
            let last = sums.last_mut().expect("pushed above");
            last.0 += row.report.absolute_throughput;
            last.1 += 1;
        }
        let means: Vec<f64> = sums.iter().map(|(s, n)| s / *n as f64).collect();
        let mut template = group[0].scenario;
        template.geometry.gateway_distance = grid[0];
        out.push(MaxDistanceRow {
            series: series.clone(),
            template,
            repetitions: sums.iter().map(|s| s.1).max().unwrap_or(0),
            threshold: criterion.threshold,
            grid_points: grid.len(),
            max_distance: max_viable_from_curve(&grid, &means, criterion),
        });
        start = end;
    }
    out
}

/// A named CSV body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvTable {
    pub file_name: String,
    pub body: String,
}

pub fn csv_string<I>(header: &[&str], records: I) -> Result<String>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for rec in records {
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

pub fn run_table(file_name: &str, rows: &[RunRow]) -> Result<CsvTable> {
    Ok(CsvTable {
        file_name: file_name.to_string(),
        body: csv_string(&RUN_HEADER, rows.iter().map(RunRow::record))?,
    })
}

pub fn max_distance_table(file_name: &str, rows: &[MaxDistanceRow]) -> Result<CsvTable> {
    Ok(CsvTable {
        file_name: file_name.to_string(),
        body: csv_string(
            &MAX_DISTANCE_HEADER,
            rows.iter().map(MaxDistanceRow::record),
        )?,
    })
}

/// Runs a sweep and returns its single CSV table.
pub fn run_sweep(spec: &SweepSpec, master_seed: u64, jobs: usize) -> Result<CsvTable> {
    let rows = execute(&spec.points()?, spec.repetitions, master_seed, jobs)?;
    let name = spec
        .output_path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "sweep.csv".to_string());
    run_table(&name, &rows)
}

/// Writes tables plus a manifest named `manifest_name` into `out_dir`,
/// returning the written paths.
pub fn write_tables(
    out_dir: &Path,
    tables: &[CsvTable],
    manifest_name: &str,
    manifest: &str,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::with_capacity(tables.len() + 1);
    for t in tables {
        let path = out_dir.join(&t.file_name);
        fs::write(&path, &t.body)?;
        written.push(path);
    }
    let path = out_dir.join(manifest_name);
    fs::write(&path, manifest)?;
    written.push(path);
    Ok(written)
}
