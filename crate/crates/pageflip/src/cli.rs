//! `pageflip` command line.
//!
//! ```text
//! pageflip layout   --image <png> [--config <toml>] --out <json> [--overlay <png>]
//! pageflip run      --layout <json>... --trace <jsonl> --policy <halfway|tempo>
//!                   --device <mock|serial:PATH> --log <jsonl>
//! pageflip simulate --layout <json>... --spp <sec> --noise <px> --outliers <p>
//!                   --seed <n> --out <jsonl>
//! pageflip evaluate --log <jsonl> --oracle <json>
//! ```
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 device error.

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use clap::{Parser, Subcommand, ValueEnum};
use pageflip_core::device::{MockDevice, TurnDevice};
use pageflip_core::layout::{analyze_page, LayoutConfig, PageLayout};
use pageflip_core::policy::{PolicyConfig, PolicyKind};
use pageflip_core::session::{evaluate_turns, run_session, SessionConfig, SessionEvent, SourceItem};
use pageflip_core::sim::{oracle_turn_time, synth_trajectory, SyntheticConfig};

use crate::config::Overrides;
use crate::formats::{self, TraceRecord};
use crate::overlay;
use crate::serial::{self, SerialDevice};
use crate::Error;

#[derive(Debug, Parser)]
#[command(name = "pageflip", version, about = "Automatic page turning on sheet-music images")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Detect systems on a page image and write the layout JSON.
    Layout(LayoutArgs),
    /// Replay a tracker trace through the filter, policy and device.
    Run(RunArgs),
    /// Generate a seeded synthetic tracker trace over one or more layouts.
    Simulate(SimulateArgs),
    /// Compare the turns of a session log against oracle turn times.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, clap::Args)]
struct LayoutArgs {
    #[arg(long)]
    image: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    overlay: Option<PathBuf>,
    /// Page index recorded in the layout.
    #[arg(long, default_value_t = 0)]
    page: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PolicyArg {
    Halfway,
    Tempo,
}

impl From<PolicyArg> for PolicyKind {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Halfway => PolicyKind::Halfway,
            PolicyArg::Tempo => PolicyKind::Tempo,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum DeviceSpec {
    Mock,
    Serial(PathBuf),
}

fn parse_device(s: &str) -> Result<DeviceSpec, String> {
    match s.split_once(':') {
        None if s == "mock" => Ok(DeviceSpec::Mock),
        Some(("serial", path)) if !path.is_empty() => Ok(DeviceSpec::Serial(PathBuf::from(path))),
        _ => Err(format!("expected `mock` or `serial:PATH`, got `{s}`")),
    }
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    #[arg(long, required = true, num_args = 1..)]
    layout: Vec<PathBuf>,
    #[arg(long)]
    trace: PathBuf,
    #[arg(long, value_enum)]
    policy: PolicyArg,
    #[arg(long, value_parser = parse_device)]
    device: DeviceSpec,
    #[arg(long)]
    log: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Pace predictions to the wall clock; logged times are unchanged.
    #[arg(long)]
    realtime: bool,
    /// Simulated acknowledgement latency of the mock device.
    #[arg(long, default_value_t = 0.0)]
    mock_latency_ms: f64,
}

#[derive(Debug, clap::Args)]
struct SimulateArgs {
    #[arg(long, required = true, num_args = 1..)]
    layout: Vec<PathBuf>,
    /// Seconds spent reading each page.
    #[arg(long)]
    spp: f64,
    #[arg(long, default_value_t = 3.0)]
    noise: f64,
    #[arg(long, default_value_t = 0.05)]
    outliers: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20.0)]
    rate: f64,
    #[arg(long)]
    out: PathBuf,
    /// Also write oracle turn times (session clock) for every non-final page.
    #[arg(long)]
    oracle_out: Option<PathBuf>,
    /// Policy settings used for the oracle (turn_fraction, kind, lead_time_sec).
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
struct EvaluateArgs {
    #[arg(long)]
    log: PathBuf,
    #[arg(long)]
    oracle: PathBuf,
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn dispatch<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    let result = match cli.command {
        Command::Layout(a) => cmd_layout(a),
        Command::Run(a) => cmd_run(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Evaluate(a) => cmd_evaluate(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("pageflip: {e}");
            e.exit_code()
        }
    }
}

fn read_layouts(paths: &[PathBuf]) -> Result<Vec<PageLayout>, Error> {
    paths.iter().map(|p| formats::read_layout(p)).collect()
}

fn cmd_layout(a: LayoutArgs) -> Result<(), Error> {
    let overrides = Overrides::load_opt(a.config.as_deref())?;
    let cfg = overrides.layout(LayoutConfig::default());
    cfg.validate().map_err(|e| Error::Config(e.to_string()))?;
    let raster = formats::load_image(&a.image)?;
    let layout = analyze_page(raster.as_page_image(), a.page, &cfg)?;
    formats::write_layout(&a.out, &layout)?;
    if let Some(path) = &a.overlay {
        let policy = overrides.policy(PolicyConfig::default());
        overlay::write_overlay(path, &raster, &layout, policy.turn_fraction)?;
    }
    for w in &layout.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}

fn paced(items: Vec<SourceItem>) -> impl Iterator<Item = SourceItem> {
    let start = Instant::now();
    let t0 = items.first().map_or(0.0, |i| i.prediction.t);
    items.into_iter().inspect(move |item| {
        let due = Duration::from_secs_f64((item.prediction.t - t0).max(0.0));
        if let Some(wait) = due.checked_sub(start.elapsed()) {
            std::thread::sleep(wait);
        }
    })
}

fn open_device(spec: &DeviceSpec, cfg: &SessionConfig, mock_latency_ms: f64) -> Result<Box<dyn TurnDevice>, Error> {
    Ok(match spec {
        DeviceSpec::Mock => Box::new(MockDevice::new(mock_latency_ms)),
        DeviceSpec::Serial(path) => Box::new(SerialDevice::open(path, cfg.device_timeout_ms)?),
    })
}

fn cmd_run(a: RunArgs) -> Result<(), Error> {
    let overrides = Overrides::load_opt(a.config.as_deref())?;
    let mut cfg = overrides.session(SessionConfig::default());
    cfg.policy.kind = a.policy.into();
    cfg.device_timeout_ms = serial::timeout_from_env(cfg.device_timeout_ms)?;
    cfg.validate().map_err(Error::Config)?;

    let layouts = read_layouts(&a.layout)?;
    let items: Vec<SourceItem> = formats::load_trace(&a.trace)?.into_iter().map(SourceItem::from).collect();
    let mut device = open_device(&a.device, &cfg, a.mock_latency_ms)?;

    let log = if a.realtime {
        run_session(&layouts, paced(items), &cfg, &mut device)
    } else {
        run_session(&layouts, items, &cfg, &mut device)
    };
    formats::write_log(&a.log, &log)?;

    let timeouts = log.count(|e| matches!(e, SessionEvent::DeviceTimeout { .. }));
    eprintln!(
        "turns: {}, accepted: {}, rejected: {}, device timeouts: {}",
        log.turns().count(),
        log.count(|e| matches!(e, SessionEvent::Accept { .. })),
        log.count(|e| matches!(e, SessionEvent::Reject { .. })),
        timeouts
    );
    Ok(())
}

fn cmd_simulate(a: SimulateArgs) -> Result<(), Error> {
    let sim = SyntheticConfig {
        seconds_per_page: a.spp,
        rate_hz: a.rate,
        noise_px: a.noise,
        outlier_prob: a.outliers,
        seed: a.seed,
        ..SyntheticConfig::default()
    };
    sim.validate().map_err(|e| Error::Usage(e.into()))?;
    let policy = Overrides::load_opt(a.config.as_deref())?.policy(PolicyConfig::default());
    let layouts = read_layouts(&a.layout)?;
    let samples = synth_trajectory(&layouts, &sim);
    formats::write_trace(&a.out, samples.iter().map(TraceRecord::from))?;
    if let Some(path) = &a.oracle_out {
        let times = oracle_times(&layouts, &sim, &policy);
        formats::write_oracle(path, &times)?;
    }
    Ok(())
}

/// Oracle turn times on the session clock for every page except the last.
pub fn oracle_times(layouts: &[PageLayout], sim: &SyntheticConfig, policy: &PolicyConfig) -> Vec<f64> {
    layouts[..layouts.len().saturating_sub(1)]
        .iter()
        .enumerate()
        .map(|(page, l)| page as f64 * sim.seconds_per_page + oracle_turn_time(l, sim, policy))
        .collect()
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<(), Error> {
    let log = formats::read_log(&a.log)?;
    let oracle = formats::read_oracle(&a.oracle)?;
    let metrics = evaluate_turns(&log, &oracle)?;
    println!("{}", serde_json::to_string_pretty(&metrics).expect("metrics serialize"));
    Ok(())
}
