//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::process::ExitCode;

use lorasim::channel::{dust_attenuation_db_per_km, fspl_db, total_path_loss_db, wavelength};
use lorasim::experiments::{execute, find_preset, PresetOutput, RunRow, SeriesPoint, PRESETS};
use lorasim::phy::{time_on_air_s, PhyParams, SpreadingFactor};
use lorasim::{
    ChannelConfig, DustIntensity, DustStorm, Environment, Scenario, ScenarioGeometry, TrafficModel,
};

const SEED: u64 = 1;

struct Verdict {
    name: &'static str,
    checks: Vec<(String, bool)>,
}

impl Verdict {
    fn new(name: &'static str) -> Self {
        Verdict {
            name,
            checks: Vec::new(),
        }
    }

    fn check(&mut self, what: String, ok: bool) {
        self.checks.push((what, ok));
    }

    fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.1)
    }

    fn print(&self) {
        let tag = if self.passed() { "PASS" } else { "FAIL" };
        println!("{tag} {}", self.name);
        for (what, ok) in &self.checks {
            println!("    [{}] {what}", if *ok { "ok" } else { "x" });
        }
    }
}

fn within(value: f64, target: f64, tol: f64) -> bool {
    (value - target).abs() <= tol
}

/// Mean of `f` over repetitions, grouped by series then sweep position.
fn means(rows: &[RunRow], f: impl Fn(&RunRow) -> f64) -> BTreeMap<String, Vec<(Scenario, f64)>> {
    let mut acc: BTreeMap<String, Vec<(Scenario, f64, usize)>> = BTreeMap::new();
    for r in rows {
        let series = acc.entry(r.series.clone()).or_default();
        match series.iter_mut().find(|(s, _, _)| *s == r.scenario) {
            Some(e) => {
                e.1 += f(r);
                e.2 += 1;
            }
            None => series.push((r.scenario, f(r), 1)),
        }
    }
    acc.into_iter()
        .map(|(k, v)| {
            (
                k,
                v.into_iter()
                    .map(|(s, sum, n)| (s, sum / n as f64))
                    .collect(),
            )
        })
        .collect()
}

fn peak(curve: &[(Scenario, f64)]) -> f64 {
    curve.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max)
}

fn formula_goldens() -> Verdict {
    let mut v = Verdict::new("formula goldens");
    let lambda = wavelength(868e6).unwrap();
    let mars = fspl_db(1000.0, lambda, 3.0).unwrap();
    let earth = fspl_db(1000.0, lambda, 2.0).unwrap();
    let dust =
        dust_attenuation_db_per_km(lambda, &DustStorm::preset(DustIntensity::Severe)).unwrap();
    v.check(
        format!("FSPL exponent 3 at 1 km = {mars:.4} dB (136.82 +/- 0.01)"),
        within(mars, 136.82, 0.01),
    );
    v.check(
        format!("FSPL exponent 2 at 1 km = {earth:.4} dB (91.22 +/- 0.01)"),
        within(earth, 91.22, 0.01),
    );
    v.check(
        format!("severe dust = {dust:.4e} dB/km (3.80e-3 +/- 1e-4)"),
        within(dust, 3.80e-3, 1e-4),
    );
    v
}

fn slotted_aloha_law() -> Verdict {
    let mut v = Verdict::new("slotted-ALOHA law");
    let payload = 50;
    let nodes = 1000;
    let slot = time_on_air_s(payload, SpreadingFactor::SF7, &PhyParams::default()).unwrap();
    let duration = 2500.0;
    let slots = duration / slot;
    v.check(format!("{slots:.0} slots per run (>= 1e4)"), slots >= 1e4);
    let loads = [0.25, 0.5, 1.0, 2.0];
    let points: Vec<SeriesPoint> = loads
        .iter()
        .enumerate()
        .map(|(i, &g)| {
            let mut geometry = ScenarioGeometry::new(500.0, 100.0);
            geometry.node_count = nodes;
            let traffic = TrafficModel::poisson(payload, nodes as f64 * slot / g);
            let mut s = Scenario::new(ChannelConfig::earth(868e6), geometry, traffic);
            s.duration = duration;
            SeriesPoint {
                series: "aloha".into(),
                axis: "G",
                value: g.to_string(),
                position: i,
                scenario: s,
            }
        })
        .collect();
    let rows = execute(&points, 1, SEED, 1).unwrap();
    let mut measured = Vec::new();
    for r in &rows {
        let h = &r.report.sf_histogram;
        assert_eq!(h.counts[0], nodes as u64, "every node should be on SF7");
        let g = r.report.normalized_offered;
        let s = r.report.normalized_throughput;
        let expected = g * (-g).exp();
        v.check(
            format!("G = {g:.4}: S = {s:.4}, G e^-G = {expected:.4} (+/- 0.02)"),
            within(s, expected, 0.02),
        );
        measured.push((g, s));
    }
    let (g_peak, s_peak) =
        measured.iter().copied().fold(
            (0.0, f64::NEG_INFINITY),
            |a, b| if b.1 > a.1 { b } else { a },
        );
    v.check(
        format!("peak S = {s_peak:.4} at G = {g_peak:.3} (in [0.35, 0.38], near G = 1)"),
        (0.35..=0.38).contains(&s_peak) && within(g_peak, 1.0, 0.25),
    );
    v
}

fn fig2_peaks(out: &PresetOutput) -> Verdict {
    let mut v = Verdict::new("S-vs-G peaks per deployment radius");
    let s_of = |r: &RunRow| r.report.normalized_throughput;
    let by_radius = |file: &str| -> Vec<(f64, f64)> {
        let rows = &out.subfigure(file).unwrap().rows;
        let mut peaks: Vec<(f64, f64)> = means(rows, s_of)
            .values()
            .map(|c| (c[0].0.geometry.disk_radius, peak(c)))
            .collect();
        peaks.sort_by(|a, b| a.0.total_cmp(&b.0));
        peaks
    };
    let earth = by_radius("fig2_earth.csv");
    let mars = by_radius("fig2_mars.csv");
    let earth_peak = earth.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let mars_peak = mars.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let fmt = |p: &[(f64, f64)]| {
        p.iter()
            .map(|(r, s)| format!("R={r}: {s:.4}"))
            .collect::<Vec<_>>()
            .join(", ")
    };
    v.check(
        format!(
            "earth peak S = {earth_peak:.4} (0.30 +/- 0.05); {}",
            fmt(&earth)
        ),
        within(earth_peak, 0.30, 0.05),
    );
    let winners: Vec<f64> = earth
        .iter()
        .filter(|p| p.1 == earth_peak)
        .map(|p| p.0)
        .collect();
    v.check(
        format!("best earth R is uniquely 7500 m (best: {winners:?})"),
        winners == [7500.0],
    );
    let mars_1000 = mars
        .iter()
        .find(|p| p.0 == 1000.0)
        .map_or(f64::NAN, |p| p.1);
    v.check(
        format!(
            "mars peak S at R = 1000 m = {mars_1000:.4} (0.26 +/- 0.05); {}",
            fmt(&mars)
        ),
        within(mars_1000, 0.26, 0.05),
    );
    v.check(
        format!("mars peak {mars_peak:.4} <= earth peak {earth_peak:.4}"),
        mars_peak <= earth_peak,
    );
    v
}

fn fig3_sf_shapes(out: &PresetOutput) -> Verdict {
    let mut v = Verdict::new("spreading-factor shapes");
    let rows = &out.subfigure("fig3_sf_distribution.csv").unwrap().rows;
    let mut totals: BTreeMap<(String, u64), ([u64; 6], u64)> = BTreeMap::new();
    for r in rows {
        let key = (
            r.scenario.channel.environment.to_string(),
            r.scenario.geometry.disk_radius as u64,
        );
        let e = totals.entry(key).or_default();
        let h = &r.report.sf_histogram;
        for i in 0..6 {
            e.0[i] += h.counts[i];
        }
        e.1 += h.total();
    }
    for ((env, radius), (counts, total)) in &totals {
        let share = |range: std::ops::Range<usize>| {
            counts[range].iter().sum::<u64>() as f64 / *total as f64
        };
        if env == "earth" && *radius <= 3000 {
            let sf7 = share(0..1);
            v.check(
                format!("earth R = {radius} m: SF7 share {sf7:.4} (>= 0.99)"),
                sf7 >= 0.99,
            );
        }
        if env == "mars" && *radius == 1000 {
            let high = share(3..6);
            v.check(format!("mars R = 1000 m, d = 1000 m: SF>=10 share {high:.4} (> 0.5); counts {counts:?}"), high > 0.5);
        }
    }
    v
}

fn max_distance(out: &PresetOutput, file: &str) -> Vec<(Scenario, Option<f64>)> {
    let (_, rows) = out
        .subfigures
        .iter()
        .filter_map(|s| s.max_distance.as_ref())
        .find(|(name, _)| name == file)
        .unwrap();
    rows.iter().map(|r| (r.template, r.max_distance)).collect()
}

fn fig4_ranges(out: &PresetOutput) -> Verdict {
    let mut v = Verdict::new("maximum viable distance ranges");
    let table = max_distance(out, "fig4_max_distance.csv");
    let d = |env: Environment, payload: u32| {
        table
            .iter()
            .find(|(s, _)| s.channel.environment == env && s.traffic.payload_bytes == payload)
            .and_then(|(_, d)| *d)
            .unwrap_or(0.0)
    };
    let cases = [
        (Environment::Mars, 50, 1500.0),
        (Environment::Earth, 50, 3500.0),
        (Environment::Mars, 256, 2500.0),
        (Environment::Earth, 256, 6000.0),
    ];
    for (env, payload, target) in cases {
        let got = d(env, payload);
        v.check(
            format!("{env} {payload} B: d = {got} m ({target} +/- 500)"),
            within(got, target, 500.0),
        );
    }
    for payload in [50, 256] {
        let (e, m) = (
            d(Environment::Earth, payload),
            d(Environment::Mars, payload),
        );
        v.check(format!("{payload} B: earth {e} m > mars {m} m"), e > m);
    }
    for env in [Environment::Earth, Environment::Mars] {
        let (big, small) = (d(env, 256), d(env, 50));
        v.check(
            format!("{env}: 256 B {big} m > 50 B {small} m"),
            big > small,
        );
    }
    v
}

fn fig6_shape(out: &PresetOutput) -> Verdict {
    let mut v = Verdict::new("maximum viable distance vs offered load");
    let mut curve: Vec<(f64, f64)> = max_distance(out, "fig6_max_distance.csv")
        .into_iter()
        .map(|(s, d)| (s.nominal_offered_bps(), d.unwrap_or(0.0)))
        .collect();
    curve.sort_by(|a, b| a.0.total_cmp(&b.0));
    let top = curve.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
    let at = curve.iter().position(|c| c.1 == top).unwrap();
    let unimodal = curve[..=at].windows(2).all(|w| w[0].1 <= w[1].1)
        && curve[at..].windows(2).all(|w| w[0].1 >= w[1].1);
    let listing = curve
        .iter()
        .map(|(g, d)| format!("{g}:{d}"))
        .collect::<Vec<_>>()
        .join(" ");
    v.check(format!("unimodal over G (bit/s:d m) {listing}"), unimodal);
    v.check(
        format!("peak d = {top} m (1450 +/- 300)"),
        within(top, 1450.0, 300.0),
    );
    let g = curve[at].0;
    v.check(
        format!("peak at G = {g} bit/s (500..=2000)"),
        (500.0..=2000.0).contains(&g),
    );
    v
}

fn fig7_dust(out: &PresetOutput) -> Verdict {
    let mut v = Verdict::new("dust negligibility");
    let rows = &out.subfigure("fig7_throughput.csv").unwrap().rows;
    let severe = DustStorm::preset(DustIntensity::Severe);
    let m = means(rows, |r| r.report.absolute_throughput);
    let clear = &m["none"];
    let storm = m
        .values()
        .find(|c| c[0].0.channel.dust == Some(severe))
        .expect("severe storm series");
    for ((s, a), (_, b)) in clear.iter().zip(storm) {
        let rel = (a - b).abs() / a;
        v.check(
            format!(
                "R = {} m: clear {a:.1} bit/s, severe {b:.1} bit/s, rel diff {rel:.2e} (< 1%)",
                s.geometry.disk_radius
            ),
            rel < 0.01,
        );
    }
    let lambda = wavelength(868e6).unwrap();
    for r in [1.5e-6, 20e-6, 1e-3] {
        let one = dust_attenuation_db_per_km(lambda, &severe.with_mean_radius(r)).unwrap();
        let two = dust_attenuation_db_per_km(lambda, &severe.with_mean_radius(2.0 * r)).unwrap();
        let ratio = two / one;
        v.check(
            format!("r = {r:e} m: A(2r)/A(r) = {ratio}"),
            within(ratio, 8.0, 1e-12),
        );
    }
    v
}

fn fig8_ordering(out: &PresetOutput) -> Verdict {
    let mut v = Verdict::new("carrier frequency ordering");
    let rows = &out.subfigure("fig8_throughput.csv").unwrap().rows;
    let m = means(rows, |r| r.report.absolute_throughput);
    let curve = |f: f64| {
        m.values()
            .find(|c| c[0].0.channel.frequency == f)
            .expect("frequency series")
    };
    let (low, high) = (curve(868e6), curve(2.3e9));
    for ((s, a), (_, b)) in low.iter().zip(high) {
        v.check(
            format!(
                "d = {} m: 2.3 GHz {b:.1} bit/s < 868 MHz {a:.1} bit/s",
                s.geometry.gateway_distance
            ),
            b < a,
        );
    }
    let severe = DustStorm::preset(DustIntensity::Severe);
    let (c_low, c_high) = (
        ChannelConfig::mars(868e6, Some(severe)),
        ChannelConfig::mars(2.3e9, Some(severe)),
    );
    let dust = |f: f64| dust_attenuation_db_per_km(wavelength(f).unwrap(), &severe).unwrap();
    let mut worst: f64 = 0.0;
    for (s, _) in low {
        let d = s.geometry.gateway_distance;
        let delta =
            total_path_loss_db(d, &c_high).unwrap() - total_path_loss_db(d, &c_low).unwrap();
        let fspl_part = delta - (dust(2.3e9) - dust(868e6)) * d / 1000.0;
        worst = worst.max((fspl_part - 12.70).abs());
    }
    v.check(
        format!("added FSPL at 2.3 GHz within {worst:.4} dB of 12.70 (+/- 0.01)"),
        worst <= 0.01,
    );
    v
}

fn determinism(serial: &[(&'static str, PresetOutput)]) -> Verdict {
    let mut v = Verdict::new("determinism");
    for (name, first) in serial {
        let preset = find_preset(name).unwrap();
        let a = first.tables().unwrap();
        let again = preset.execute(SEED, 1).unwrap().tables().unwrap();
        let parallel = preset.execute(SEED, 4).unwrap().tables().unwrap();
        let same = |x: &[lorasim::experiments::CsvTable]| {
            x.len() == a.len()
                && x.iter()
                    .zip(&a)
                    .all(|(p, q)| p.file_name == q.file_name && p.body == q.body)
        };
        v.check(format!("{name}: re-run byte-identical"), same(&again));
        v.check(
            format!("{name}: 1 vs 4 threads byte-identical"),
            same(&parallel),
        );
    }
    v
}

fn main() -> ExitCode {
    let outputs: Vec<(&'static str, PresetOutput)> = PRESETS
        .iter()
        .map(|p| (p.name, p.execute(SEED, 1).expect("preset runs")))
        .collect();
    let get = |name: &str| &outputs.iter().find(|o| o.0 == name).unwrap().1;

    let verdicts = [
        formula_goldens(),
        slotted_aloha_law(),
        fig2_peaks(get("fig2")),
        fig3_sf_shapes(get("fig3")),
        fig4_ranges(get("fig4")),
        fig6_shape(get("fig6")),
        fig7_dust(get("fig7")),
        fig8_ordering(get("fig8")),
        determinism(&outputs),
    ];
    for v in &verdicts {
        v.print();
    }
    let failed = verdicts.iter().filter(|v| !v.passed()).count();
    println!(
        "acceptance: {} passed, {failed} failed",
        verdicts.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
