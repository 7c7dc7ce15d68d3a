//! The `dtms` command line.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or config error.

use std::ffi::OsString;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use parking_lot::RwLock;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::calibration::{
    points_to_csv, run_sweep, sweep_temps, verify_constancy, CalibrationTable,
    CalibrationTransport, Constancy, IdealTransport, DEFAULT_TOLERANCE_CODES,
};
use crate::config::{self, LoadedConfig, CONFIG_ENV};
use crate::coordinator::service::{MonotonicClock, Server};
use crate::coordinator::{read_jsonl, to_jsonl, AlarmEvent, Coordinator, LogSinks, Reading};
use crate::end_device::{DeviceConfig, TelemetryRecord};
use crate::network::sim::{self, EventTrace, Summary};
use crate::network::{build_topology, SimulatedTransport};
use crate::signal_chain::SignalChain;
use crate::{NodeAddr, SimTime};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

pub const TRACE_FILE: &str = "trace.jsonl";
pub const READINGS_FILE: &str = "readings.jsonl";
pub const ALARMS_FILE: &str = "alarms.jsonl";
pub const RINGS_FILE: &str = "rings.jsonl";
pub const STATS_FILE: &str = "stats.json";

#[derive(Debug, Parser)]
#[command(
    name = "dtms",
    version,
    about = "Distributed transformer monitoring simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario and write its trace, logs, ring buffers and stats.
    Simulate(SimulateArgs),
    /// Run the coordinator as a local TCP service.
    Serve(ServeArgs),
    /// Sweep the signal chain and fit a calibration table.
    Calibrate(CalibrateArgs),
    /// Re-ingest a trace or a raw frame capture into a fresh coordinator.
    Replay(ReplayArgs),
    /// Dump the ring buffers, logs and stats of an output directory as JSON.
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
pub struct ConfigArg {
    /// Scenario JSON.
    #[arg(long, short, env = CONFIG_ENV)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the scenario duration, in seconds.
    #[arg(long)]
    pub duration: Option<f64>,
    /// Output directory; defaults to the log paths named in the config, or
    /// the current directory.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    #[arg(long, default_value = "127.0.0.1:7878")]
    pub listen: String,
    /// Directory for the reading and alarm logs (see `simulate --out`).
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Service clock value at startup, in seconds.
    #[arg(long, default_value_t = 0)]
    pub start_s: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TransportKind {
    Ideal,
    Simulated,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Scenario JSON; required for `--transport simulated` and `--device`.
    #[arg(long, short, env = CONFIG_ENV)]
    pub config: Option<PathBuf>,
    /// Device whose chain is swept; default chain when omitted.
    #[arg(long)]
    pub device: Option<NodeAddr>,
    #[arg(long, value_enum, default_value = "ideal")]
    pub transport: TransportKind,
    #[arg(long, default_value_t = -40.0, allow_hyphen_values = true)]
    pub from: f64,
    #[arg(long, default_value_t = 120.0, allow_hyphen_values = true)]
    pub to: f64,
    #[arg(long, default_value_t = 10.0)]
    pub step: f64,
    #[arg(long, default_value = "calibration.csv")]
    pub csv: PathBuf,
    #[arg(long, default_value = "calibration.json")]
    pub json: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    Auto,
    Trace,
    Capture,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    /// Trace JSONL from `simulate`, or concatenated raw frames.
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    pub format: InputFormat,
    #[arg(long, short, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[arg(long, short, default_value = ".")]
    pub dir: PathBuf,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<config::ConfigError> for Failure {
    fn from(e: config::ConfigError) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> Failure + '_ {
    move |e| Failure::Runtime(format!("{}: {e}", path.display()))
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Serve(a) => serve(a),
        Command::Calibrate(a) => calibrate(a),
        Command::Replay(a) => replay(a),
        Command::Inspect(a) => inspect(a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(m)) => {
            eprintln!("dtms: {m}");
            EXIT_USAGE
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("dtms: {m}");
            EXIT_RUNTIME
        }
    }
}

fn load_config(arg: &Option<PathBuf>) -> Result<LoadedConfig, Failure> {
    let path = arg.as_ref().ok_or_else(|| {
        Failure::Usage(format!(
            "no config given (use --config or set {CONFIG_ENV})"
        ))
    })?;
    Ok(config::load(path)?)
}

/// Where a log goes: `<out>/<name>` when `--out` is given, else the config's
/// own path for it, else `./<name>`.
fn output_path(
    out: Option<&Path>,
    configured: Option<&PathBuf>,
    cfg: &LoadedConfig,
    name: &str,
) -> PathBuf {
    match (out, configured) {
        (Some(dir), _) => dir.join(name),
        (None, Some(p)) => cfg.resolve(p),
        (None, None) => PathBuf::from(name),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, contents).map_err(io_err(path))
}

#[derive(serde::Serialize)]
struct RingDump<'a> {
    addr: NodeAddr,
    sequence: u8,
    records: Vec<&'a TelemetryRecord>,
}

fn simulate(a: SimulateArgs) -> Result<(), Failure> {
    let mut cfg = load_config(&a.config.config)?;
    if let Some(seed) = a.seed {
        cfg.config.seed = seed;
    }
    if let Some(d) = a.duration {
        cfg.config.duration_s = d;
    }
    let scenario = cfg.config.to_scenario(&cfg.base_dir)?;
    let outcome = sim::run(&scenario).map_err(|e| Failure::Usage(e.to_string()))?;
    let section = &cfg.config.coordinator;
    let out = a.out.as_deref();
    write_file(
        &output_path(out, section.trace.as_ref(), &cfg, TRACE_FILE),
        &outcome.trace.to_jsonl(),
    )?;
    write_file(
        &output_path(out, section.reading_log.as_ref(), &cfg, READINGS_FILE),
        &outcome.coordinator.readings_jsonl(),
    )?;
    write_file(
        &output_path(out, section.alarm_log.as_ref(), &cfg, ALARMS_FILE),
        &outcome.coordinator.alarms_jsonl(),
    )?;
    let rings: Vec<_> = outcome
        .devices
        .iter()
        .map(|d| RingDump {
            addr: d.addr(),
            sequence: d.sequence(),
            records: d.ring().iter().collect(),
        })
        .collect();
    let dir = out.map(Path::to_path_buf).unwrap_or_default();
    write_file(&dir.join(RINGS_FILE), &to_jsonl(&rings))?;
    write_file(
        &dir.join(STATS_FILE),
        &(serde_json::to_string_pretty(&outcome.summary).expect("summary serializes") + "\n"),
    )?;
    print_summary(&outcome.summary, outcome.trace.digest());
    Ok(())
}

fn print_summary(s: &Summary, digest: u64) {
    let c = &s.coordinator;
    println!(
        "frames sent {} ok {} dropped {} | ingested {} rejected {} | gaps {} | alarms raised {} cleared {}",
        s.sent,
        s.delivered,
        s.dropped,
        c.frames_ok,
        c.frames_bad + c.unknown_device + c.conversion_errors,
        c.sequence_gaps,
        c.alarms_raised,
        c.alarms_cleared
    );
    for d in &s.devices {
        println!(
            "  {} sent {} ok {} dropped {}",
            d.addr, d.sent, d.delivered, d.dropped
        );
    }
    println!("trace digest {digest:016x}");
}

fn read_log<T: for<'de> serde::Deserialize<'de>>(path: &Path) -> Result<Vec<T>, Failure> {
    match File::open(path) {
        Ok(f) => read_jsonl(BufReader::new(f)).map_err(io_err(path)),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(Vec::new()),
        Err(e) => Err(io_err(path)(e)),
    }
}

fn append(path: &Path) -> Result<File, Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(io_err(path))
}

fn serve(a: ServeArgs) -> Result<(), Failure> {
    let cfg = load_config(&a.config.config)?;
    let scenario = cfg.config.to_scenario(&cfg.base_dir)?;
    let section = &cfg.config.coordinator;
    let readings_path = output_path(
        a.out.as_deref(),
        section.reading_log.as_ref(),
        &cfg,
        READINGS_FILE,
    );
    let alarms_path = output_path(
        a.out.as_deref(),
        section.alarm_log.as_ref(),
        &cfg,
        ALARMS_FILE,
    );
    // Logs are append-only: pick up where a previous run left off.
    let readings: Vec<Reading> = read_log(&readings_path)?;
    let alarms: Vec<AlarmEvent> = read_log(&alarms_path)?;
    let coordinator = Coordinator::restore(scenario.coordinator_config(), readings, alarms)
        .map_err(|e| Failure::Usage(format!("existing logs do not match config: {e}")))?
        .with_sinks(LogSinks {
            readings: Box::new(append(&readings_path)?),
            alarms: Box::new(append(&alarms_path)?),
        });
    let start = coordinator.now().max(SimTime::from_secs(a.start_s));
    let server = Server::bind(
        a.listen.as_str(),
        Arc::new(RwLock::new(coordinator)),
        Arc::new(MonotonicClock::starting_at(start)),
    )
    .map_err(|e| Failure::Runtime(format!("cannot listen on {}: {e}", a.listen)))?;
    let local = server
        .local_addr()
        .map_err(|e| Failure::Runtime(e.to_string()))?;
    println!("listening on {local}");
    let _ = io::stdout().flush();
    server.run().map_err(|e| Failure::Runtime(e.to_string()))
}

fn calibrate(a: CalibrateArgs) -> Result<(), Failure> {
    if !(a.step > 0.0 && a.from <= a.to) {
        return Err(Failure::Usage("need --from <= --to and --step > 0".into()));
    }
    let temps = sweep_temps(a.from, a.to, a.step);
    let cfg = match (&a.config, a.device, a.transport) {
        (None, None, TransportKind::Ideal) => None,
        _ => Some(load_config(&a.config)?),
    };
    let device: DeviceConfig = match (&cfg, a.device) {
        (Some(cfg), Some(addr)) => cfg
            .config
            .devices
            .iter()
            .find(|d| d.addr == addr)
            .cloned()
            .ok_or_else(|| Failure::Usage(format!("device {addr} is not in the config")))?,
        (Some(cfg), None) if a.transport == TransportKind::Simulated => cfg
            .config
            .devices
            .first()
            .cloned()
            .ok_or_else(|| Failure::Usage("config has no devices".into()))?,
        _ => DeviceConfig {
            chain: SignalChain::default(),
            ..DeviceConfig::new(NodeAddr(0))
        },
    };
    let sweep = match a.transport {
        TransportKind::Ideal => sweep_with(&temps, &device, &mut IdealTransport)?,
        TransportKind::Simulated => {
            let cfg = cfg.as_ref().expect("loaded above");
            let topology =
                build_topology(&cfg.config.topology.nodes, cfg.config.topology.max_range_m)
                    .map_err(|e| Failure::Usage(format!("topology: {e}")))?;
            let mut transport = SimulatedTransport {
                topology: &topology,
                src: device.addr,
                radio: cfg.config.radio,
                rng: ChaCha8Rng::seed_from_u64(cfg.config.seed),
                clock: SimTime::ZERO,
            };
            sweep_with(&temps, &device, &mut transport)?
        }
    };
    for m in &sweep.missing {
        eprintln!("missing point at {} °C: {}", m.set_temp_c, m.reason);
    }
    write_file(&a.csv, &points_to_csv(&sweep.points))?;
    let table =
        CalibrationTable::from_points(sweep.points).map_err(|e| Failure::Runtime(e.to_string()))?;
    write_file(&a.json, &table.to_json())?;
    println!(
        "{} points, slope {:.3} codes/V, intercept {:.3}, max residual {:.3} codes",
        table.points.len(),
        table.slope_codes_per_volt,
        table.intercept_codes,
        table.max_residual_codes
    );
    match verify_constancy(&table, DEFAULT_TOLERANCE_CODES) {
        Constancy::Pass { max_residual } => {
            println!(
                "constancy: pass (max residual {max_residual:.3} <= {DEFAULT_TOLERANCE_CODES})"
            );
            Ok(())
        }
        Constancy::Fail {
            set_temp_c,
            residual,
            ..
        } => Err(Failure::Runtime(format!(
            "constancy: fail at {set_temp_c} °C (residual {residual:.3} codes)"
        ))),
    }
}

fn sweep_with(
    temps: &[f64],
    device: &DeviceConfig,
    transport: &mut dyn CalibrationTransport,
) -> Result<crate::calibration::Sweep, Failure> {
    run_sweep(temps, &device.chain, device.adc_channel_temp, transport)
        .map_err(|e| Failure::Runtime(e.to_string()))
}

fn replay(a: ReplayArgs) -> Result<(), Failure> {
    let cfg = load_config(&a.config.config)?;
    let scenario = cfg.config.to_scenario(&cfg.base_dir)?;
    let bytes =
        fs::read(&a.input).map_err(|e| Failure::Usage(format!("{}: {e}", a.input.display())))?;
    let format = match a.format {
        InputFormat::Auto if bytes.first() == Some(&crate::frame::START_DELIMITER) => {
            InputFormat::Capture
        }
        InputFormat::Auto if bytes.is_empty() => InputFormat::Capture,
        InputFormat::Auto => InputFormat::Trace,
        f => f,
    };
    let mut coordinator = Coordinator::new(scenario.coordinator_config());
    match format {
        InputFormat::Trace => {
            let text = String::from_utf8(bytes).map_err(|_| {
                Failure::Usage(format!(
                    "{} is neither a trace nor a capture",
                    a.input.display()
                ))
            })?;
            let trace = EventTrace::from_jsonl(&text)
                .map_err(|e| Failure::Usage(format!("{}: {e}", a.input.display())))?;
            sim::replay_trace(&trace, &mut coordinator)
                .map_err(|e| Failure::Usage(e.to_string()))?;
        }
        _ => sim::replay_capture(&bytes, &mut coordinator),
    }
    write_file(&a.out.join(READINGS_FILE), &coordinator.readings_jsonl())?;
    write_file(&a.out.join(ALARMS_FILE), &coordinator.alarms_jsonl())?;
    let stats = json!({ "coordinator": coordinator.stats() });
    write_file(
        &a.out.join(STATS_FILE),
        &(serde_json::to_string_pretty(&stats).expect("stats") + "\n"),
    )?;
    let s = coordinator.stats();
    println!(
        "replayed {} readings, {} rejected, {} alarm events",
        s.frames_ok,
        s.frames_bad + s.unknown_device + s.conversion_errors,
        coordinator.alarms().len()
    );
    Ok(())
}

fn inspect(a: InspectArgs) -> Result<(), Failure> {
    if !a.dir.is_dir() {
        return Err(Failure::Usage(format!(
            "{} is not a directory",
            a.dir.display()
        )));
    }
    let readings: Vec<serde_json::Value> = read_log(&a.dir.join(READINGS_FILE))?;
    let alarms: Vec<serde_json::Value> = read_log(&a.dir.join(ALARMS_FILE))?;
    let rings: Vec<serde_json::Value> = read_log(&a.dir.join(RINGS_FILE))?;
    let stats_path = a.dir.join(STATS_FILE);
    let stats = match fs::read_to_string(&stats_path) {
        Ok(text) => serde_json::from_str(&text)
            .map_err(|e| Failure::Runtime(format!("{}: {e}", stats_path.display())))?,
        Err(e) if e.kind() == io::ErrorKind::NotFound => {
            serde_json::to_value(Summary::default()).expect("summary")
        }
        Err(e) => return Err(io_err(&stats_path)(e)),
    };
    let dump = json!({ "rings": rings, "readings": readings, "alarms": alarms, "stats": stats });
    // A closed pipe (`dtms inspect | head`) is not an error worth reporting.
    let _ = writeln!(
        io::stdout().lock(),
        "{}",
        serde_json::to_string_pretty(&dump).expect("dump serializes")
    );
    Ok(())
}
