use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use lorasim::config::{parse_config, ConfigDocument};
use lorasim::experiments::{execute, find_preset, run_sweep, run_table, write_tables, SeriesPoint};
use lorasim::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

const DEFAULT_MASTER_SEED: u64 = 1;

#[derive(Parser, Debug)]
#[command(
    name = "lorasim",
    version,
    about = "Single-gateway LoRaWAN simulator for Earth and Mars channels"
)]
struct Cli {
    /// Master seed. Overrides `[run] seed` in config files.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for independent runs.
    #[arg(long, global = true, default_value_t = default_jobs())]
    jobs: usize,

    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate one scenario and print its throughput report.
    Run { config: PathBuf },
    /// Run the `[sweep]` of a config file.
    Sweep { config: PathBuf },
    /// Run a named figure preset (fig2 ... fig8).
    Preset { name: String },
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

enum Failure {
    Usage(String),
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { .. } => Failure::Config(e.to_string()),
            Error::UnknownPreset { .. } => Failure::Usage(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn load(path: &Path) -> Result<ConfigDocument, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<(), Failure> {
    let Format::Csv = cli.format;
    let jobs = cli.jobs.max(1);
    match cli.command {
        Command::Run { config } => {
            let mut scenario = match load(&config)? {
                ConfigDocument::Scenario(s) => s,
                ConfigDocument::Sweep(_) => {
                    return Err(Failure::Usage(format!(
                        "{} contains a [sweep] section; use `lorasim sweep`",
                        config.display()
                    )))
                }
            };
            if let Some(seed) = cli.seed {
                scenario.seed = seed;
            }
            let point = SeriesPoint {
                series: "run".into(),
                axis: "none",
                value: String::new(),
                position: 0,
                scenario,
            };
            let rows = execute(std::slice::from_ref(&point), 1, scenario.seed, 1)?;
            let r = &rows[0].report;
            println!("normalized offered (G):    {:.4}", r.normalized_offered);
            println!("normalized throughput (S): {:.4}", r.normalized_throughput);
            println!(
                "throughput:                {:.1} bit/s",
                r.absolute_throughput
            );
            println!(
                "offered (in range):        {:.1} bit/s",
                r.offered_bits_rate
            );
            let h = &r.sf_histogram;
            println!(
                "SF7..SF12: {:?}, out of range: {}",
                h.counts, h.out_of_range
            );
            let table = run_table("run.csv", &rows)?;
            let manifest = format!(
                "tool = lorasim {}\nconfig = {}\nmaster_seed = {}\n",
                env!("CARGO_PKG_VERSION"),
                config.display(),
                scenario.seed
            );
            report(write_tables(
                &cli.out_dir,
                &[table],
                "manifest.txt",
                &manifest,
            )?);
        }
        Command::Sweep { config } => {
            let spec = match load(&config)? {
                ConfigDocument::Sweep(s) => s,
                ConfigDocument::Scenario(_) => {
                    return Err(Failure::Config(format!(
                        "{}: key `sweep`: missing required section [sweep]",
                        config.display()
                    )))
                }
            };
            let seed = cli.seed.unwrap_or(spec.base.seed);
            let table = run_sweep(&spec, seed, jobs)?;
            let dir = match spec.output_path.parent() {
                Some(p) if spec.output_path.is_absolute() => p.to_path_buf(),
                Some(p) => cli.out_dir.join(p),
                None => cli.out_dir.clone(),
            };
            let manifest = format!(
                "tool = lorasim {}\nconfig = {}\nmaster_seed = {seed}\naxis = {}\nvalues = [{}]\nrepetitions = {}\n",
                env!("CARGO_PKG_VERSION"),
                config.display(),
                spec.axis.name(),
                spec.values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", "),
                spec.repetitions,
            );
            report(write_tables(&dir, &[table], "manifest.txt", &manifest)?);
        }
        Command::Preset { name } => {
            let preset = find_preset(&name)?;
            let seed = cli.seed.unwrap_or(DEFAULT_MASTER_SEED);
            eprintln!(
                "running {} ({}) with seed {seed} on {jobs} threads",
                preset.name, preset.description
            );
            let (tables, manifest) = preset.run(seed, jobs)?;
            report(write_tables(
                &cli.out_dir,
                &tables,
                &format!("{}_manifest.txt", preset.name),
                &manifest,
            )?);
        }
    }
    Ok(())
}

fn report(paths: Vec<PathBuf>) {
    for p in paths {
        eprintln!("wrote {}", p.display());
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
