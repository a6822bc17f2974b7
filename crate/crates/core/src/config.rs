//! Scenario and sweep configuration files.
//!
//! Files are TOML. `[channel]`, `[geometry]` and `[traffic]` are required;
//! everything else falls back to the defaults of the reference setup
//! (868 MHz, 125 kHz, 14 dBm, 1000 nodes, 500 s). A `[sweep]` section turns
//! the document into a sweep specification.
//!
//! ```toml
//! [channel]
//! environment = "mars"
//! dust_preset = "severe"
//!
//! [geometry]
//! disk_radius_m = 1000
//! gateway_distance_m = 1500
//!
//! [traffic]
//! payload_bytes = 50
//! offered_bps = 800
//! ```

use std::path::PathBuf;

use serde::Deserialize;

use crate::channel::{ChannelConfig, DustIntensity, DustStorm, Environment, DEFAULT_FREQUENCY_HZ};
use crate::error::{Error, Result};
use crate::experiments::{SweepAxis, SweepSpec, SweepValue, DEFAULT_REPETITIONS};
use crate::phy::{CodingRate, PhyParams, RadioConfig};
use crate::scenario::{ArrivalProcess, Scenario, TrafficModel, DEFAULT_DURATION_S};
use crate::topology::{ScenarioGeometry, DEFAULT_NODE_COUNT};

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigDocument {
    Scenario(Scenario),
    Sweep(SweepSpec),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    channel: Option<RawChannel>,
    dust: Option<RawDust>,
    geometry: Option<RawGeometry>,
    traffic: Option<RawTraffic>,
    radio: Option<RawRadio>,
    phy: Option<RawPhy>,
    run: Option<RawRun>,
    sweep: Option<RawSweep>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChannel {
    environment: Option<String>,
    frequency_hz: Option<f64>,
    dust_preset: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDust {
    eps_real: Option<f64>,
    eps_imag: Option<f64>,
    particle_density: Option<f64>,
    mean_radius_m: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGeometry {
    disk_radius_m: Option<f64>,
    gateway_distance_m: Option<f64>,
    node_count: Option<i64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTraffic {
    payload_bytes: Option<i64>,
    mean_interarrival_s: Option<f64>,
    offered_bps: Option<f64>,
    arrival_process: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRadio {
    tx_power_dbm: Option<f64>,
    tx_antenna_gain_dbi: Option<f64>,
    rx_antenna_gain_dbi: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPhy {
    bandwidth_hz: Option<f64>,
    coding_rate_denominator: Option<i64>,
    preamble_symbols: Option<i64>,
    explicit_header: Option<bool>,
    crc: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    duration_s: Option<f64>,
    seed: Option<i64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    axis: Option<String>,
    values: Option<Vec<toml::Value>>,
    repetitions: Option<i64>,
    output: Option<String>,
}

/// Line-aware error construction over the source text.
struct Source<'a> {
    text: &'a str,
}

impl Source<'_> {
    /// 1-based line of `key` inside `[section]`, or of the header itself
    /// when `key` is `None`.
    fn line_of(&self, section: &str, key: Option<&str>) -> Option<usize> {
        let header = format!("[{section}]");
        let mut in_section = false;
        for (i, raw) in self.text.lines().enumerate() {
            let line = raw.trim();
            if line.starts_with('[') {
                in_section = line == header;
                if in_section && key.is_none() {
                    return Some(i + 1);
                }
                continue;
            }
            if let (true, Some(k)) = (in_section, key) {
                if let Some((lhs, _)) = line.split_once('=') {
                    if lhs.trim() == k {
                        return Some(i + 1);
                    }
                }
            }
        }
        None
    }

    fn line_at_offset(&self, offset: usize) -> usize {
        self.text[..offset.min(self.text.len())]
            .matches('\n')
            .count()
            + 1
    }

    fn err(&self, section: &str, key: &str, message: impl Into<String>) -> Error {
        let line = self
            .line_of(section, Some(key))
            .or_else(|| self.line_of(section, None));
        Error::Config {
            key: format!("{section}.{key}"),
            line,
            message: message.into(),
        }
    }

    fn missing_section(&self, section: &str, required: &[&str]) -> Error {
        Error::Config {
            key: section.to_string(),
            line: None,
            message: format!(
                "missing required section [{section}] (keys: {})",
                required.join(", ")
            ),
        }
    }

    fn missing_keys(&self, section: &str, keys: &[&str]) -> Error {
        Error::Config {
            key: format!("{section}.{}", keys[0]),
            line: self.line_of(section, None),
            message: format!("missing required key(s): {}", keys.join(", ")),
        }
    }
}

fn require_positive(src: &Source, section: &str, key: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(src.err(section, key, format!("must be a positive number, got {v}")))
    }
}

fn require_non_negative(src: &Source, section: &str, key: &str, v: f64) -> Result<f64> {
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(src.err(
            section,
            key,
            format!("must be a non-negative number, got {v}"),
        ))
    }
}

fn require_finite(src: &Source, section: &str, key: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(src.err(section, key, "must be finite"))
    }
}

fn int_in(src: &Source, section: &str, key: &str, v: i64, lo: i64, hi: i64) -> Result<i64> {
    if (lo..=hi).contains(&v) {
        Ok(v)
    } else {
        Err(src.err(section, key, format!("must be in {lo}..={hi}, got {v}")))
    }
}

fn toml_error(src: &Source, e: toml::de::Error) -> Error {
    let message = e.message().to_string();
    let key = message
        .split('`')
        .nth(1)
        .map(str::to_string)
        .unwrap_or_else(|| "<document>".to_string());
    Error::Config {
        key,
        line: e.span().map(|s| src.line_at_offset(s.start)),
        message,
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<ConfigDocument> {
    let src = Source { text };
    let raw: RawDocument = toml::from_str(text).map_err(|e| toml_error(&src, e))?;

    let channel = parse_channel(&src, raw.channel, raw.dust)?;
    let geometry = parse_geometry(&src, raw.geometry)?;
    let traffic = parse_traffic(&src, raw.traffic, geometry.node_count)?;

    let mut scenario = Scenario::new(channel, geometry, traffic);
    if let Some(r) = raw.radio {
        let d = RadioConfig::default();
        scenario.radio = RadioConfig {
            tx_power: require_finite(
                &src,
                "radio",
                "tx_power_dbm",
                r.tx_power_dbm.unwrap_or(d.tx_power),
            )?,
            tx_antenna_gain: require_finite(
                &src,
                "radio",
                "tx_antenna_gain_dbi",
                r.tx_antenna_gain_dbi.unwrap_or(d.tx_antenna_gain),
            )?,
            rx_antenna_gain: require_finite(
                &src,
                "radio",
                "rx_antenna_gain_dbi",
                r.rx_antenna_gain_dbi.unwrap_or(d.rx_antenna_gain),
            )?,
        };
    }
    if let Some(p) = raw.phy {
        let d = PhyParams::default();
        let cr = match p.coding_rate_denominator {
            Some(v) => {
                CodingRate::new(int_in(&src, "phy", "coding_rate_denominator", v, 5, 8)? as u8)?
            }
            None => d.coding_rate,
        };
        scenario.phy = PhyParams {
            bandwidth: require_positive(
                &src,
                "phy",
                "bandwidth_hz",
                p.bandwidth_hz.unwrap_or(d.bandwidth),
            )?,
            coding_rate: cr,
            preamble_symbols: match p.preamble_symbols {
                Some(v) => int_in(&src, "phy", "preamble_symbols", v, 6, 65535)? as u32,
                None => d.preamble_symbols,
            },
            explicit_header: p.explicit_header.unwrap_or(d.explicit_header),
            crc_enabled: p.crc.unwrap_or(d.crc_enabled),
        };
    }
    if let Some(r) = raw.run {
        scenario.duration = require_positive(
            &src,
            "run",
            "duration_s",
            r.duration_s.unwrap_or(DEFAULT_DURATION_S),
        )?;
        if let Some(seed) = r.seed {
            scenario.seed = int_in(&src, "run", "seed", seed, 0, i64::MAX)? as u64;
        }
    }
    scenario.validate()?;

    match raw.sweep {
        None => Ok(ConfigDocument::Scenario(scenario)),
        Some(s) => parse_sweep(&src, s, scenario).map(ConfigDocument::Sweep),
    }
}

fn parse_channel(
    src: &Source,
    raw: Option<RawChannel>,
    dust: Option<RawDust>,
) -> Result<ChannelConfig> {
    let c = raw.ok_or_else(|| src.missing_section("channel", &["environment"]))?;
    let env_text = c
        .environment
        .ok_or_else(|| src.missing_keys("channel", &["environment"]))?;
    let environment: Environment = env_text
        .parse()
        .map_err(|m| src.err("channel", "environment", m))?;
    let frequency = require_positive(
        src,
        "channel",
        "frequency_hz",
        c.frequency_hz.unwrap_or(DEFAULT_FREQUENCY_HZ),
    )?;

    let mut storm = match c.dust_preset.as_deref() {
        None | Some("none") => None,
        Some(name) => Some(DustStorm::preset(
            name.parse::<DustIntensity>()
                .map_err(|m| src.err("channel", "dust_preset", m))?,
        )),
    };
    if let Some(d) = dust {
        let base = storm;
        let density = d.particle_density.or(base.map(|b| b.particle_density));
        let radius = d.mean_radius_m.or(base.map(|b| b.mean_radius));
        let (density, radius) = match (density, radius) {
            (Some(n), Some(r)) => (n, r),
            _ => return Err(src.missing_keys("dust", &["particle_density", "mean_radius_m"])),
        };
        let eps_real = d.eps_real.unwrap_or(crate::channel::DUST_EPS_REAL);
        storm = Some(DustStorm {
            eps_real: require_positive(src, "dust", "eps_real", eps_real)?,
            eps_imag: require_non_negative(
                src,
                "dust",
                "eps_imag",
                d.eps_imag.unwrap_or(crate::channel::DUST_EPS_IMAG),
            )?,
            particle_density: require_non_negative(src, "dust", "particle_density", density)?,
            mean_radius: require_non_negative(src, "dust", "mean_radius_m", radius)?,
        });
    }
    Ok(ChannelConfig {
        environment,
        frequency,
        dust: storm,
    })
}

fn parse_geometry(src: &Source, raw: Option<RawGeometry>) -> Result<ScenarioGeometry> {
    const REQUIRED: [&str; 2] = ["disk_radius_m", "gateway_distance_m"];
    let g = raw.ok_or_else(|| src.missing_section("geometry", &REQUIRED))?;
    let (radius, distance) = match (g.disk_radius_m, g.gateway_distance_m) {
        (Some(r), Some(d)) => (r, d),
        (r, d) => {
            let missing: Vec<&str> = [(r.is_none(), REQUIRED[0]), (d.is_none(), REQUIRED[1])]
                .iter()
                .filter(|(m, _)| *m)
                .map(|(_, k)| *k)
                .collect();
            return Err(src.missing_keys("geometry", &missing));
        }
    };
    Ok(ScenarioGeometry {
        disk_radius: require_positive(src, "geometry", "disk_radius_m", radius)?,
        gateway_distance: require_non_negative(src, "geometry", "gateway_distance_m", distance)?,
        node_count: match g.node_count {
            Some(n) => int_in(src, "geometry", "node_count", n, 1, 10_000_000)? as usize,
            None => DEFAULT_NODE_COUNT,
        },
    })
}

fn parse_traffic(src: &Source, raw: Option<RawTraffic>, node_count: usize) -> Result<TrafficModel> {
    const REQUIRED: [&str; 2] = ["payload_bytes", "mean_interarrival_s | offered_bps"];
    let t = raw.ok_or_else(|| src.missing_section("traffic", &REQUIRED))?;
    let payload = match t.payload_bytes {
        Some(p) => int_in(
            src,
            "traffic",
            "payload_bytes",
            p,
            1,
            crate::phy::MAX_PAYLOAD_BYTES as i64,
        )? as u32,
        None => return Err(src.missing_keys("traffic", &REQUIRED)),
    };
    let arrival_process = match t.arrival_process {
        Some(s) => s
            .parse::<ArrivalProcess>()
            .map_err(|m| src.err("traffic", "arrival_process", m))?,
        None => ArrivalProcess::Poisson,
    };
    let mean_interarrival = match (t.mean_interarrival_s, t.offered_bps) {
        (Some(_), Some(_)) => {
            return Err(src.err(
                "traffic",
                "offered_bps",
                "set either mean_interarrival_s or offered_bps, not both",
            ))
        }
        (Some(m), None) => require_positive(src, "traffic", "mean_interarrival_s", m)?,
        (None, Some(g)) => {
            let g = require_positive(src, "traffic", "offered_bps", g)?;
            node_count as f64 * 8.0 * payload as f64 / g
        }
        (None, None) => {
            return Err(src.missing_keys("traffic", &["mean_interarrival_s | offered_bps"]))
        }
    };
    Ok(TrafficModel {
        payload_bytes: payload,
        mean_interarrival,
        arrival_process,
    })
}

fn parse_sweep(src: &Source, s: RawSweep, base: Scenario) -> Result<SweepSpec> {
    let axis_text = s
        .axis
        .ok_or_else(|| src.missing_keys("sweep", &["axis", "values"]))?;
    let axis: SweepAxis = axis_text.parse().map_err(|m| src.err("sweep", "axis", m))?;
    let raw_values = s
        .values
        .ok_or_else(|| src.missing_keys("sweep", &["values"]))?;
    if raw_values.is_empty() {
        return Err(src.err("sweep", "values", "must contain at least one value"));
    }
    let values = raw_values
        .iter()
        .map(|v| {
            let value = match (axis, v) {
                (SweepAxis::DustPreset, toml::Value::String(name)) if name == "none" => {
                    SweepValue::Dust(None)
                }
                (SweepAxis::DustPreset, toml::Value::String(name)) => SweepValue::Dust(Some(
                    name.parse().map_err(|m| src.err("sweep", "values", m))?,
                )),
                (SweepAxis::DustPreset, other) => {
                    return Err(src.err(
                        "sweep",
                        "values",
                        format!("expected a dust preset name, got {other}"),
                    ))
                }
                (_, toml::Value::Integer(i)) => SweepValue::Number(*i as f64),
                (_, toml::Value::Float(f)) => SweepValue::Number(*f),
                (_, other) => {
                    return Err(src.err(
                        "sweep",
                        "values",
                        format!("expected a number, got {other}"),
                    ))
                }
            };
            // Reject values the axis cannot take before any run starts.
            let mut probe = base;
            axis.apply(&value, &mut probe)
                .and_then(|_| probe.validate())
                .map_err(|e| src.err("sweep", "values", e.to_string()))?;
            Ok(value)
        })
        .collect::<Result<Vec<_>>>()?;
    let repetitions = match s.repetitions {
        Some(r) => int_in(src, "sweep", "repetitions", r, 1, 10_000)? as usize,
        None => DEFAULT_REPETITIONS,
    };
    Ok(SweepSpec {
        base,
        axis,
        values,
        repetitions,
        output_path: PathBuf::from(s.output.unwrap_or_else(|| "sweep.csv".to_string())),
    })
}
