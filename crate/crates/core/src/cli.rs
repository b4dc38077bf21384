//! Command-line front end.
//!
//! Every run writes into `--out`:
//!
//! * `records.jsonl`: one JSON object per replica (or per member / site for
//!   single-instance commands),
//! * `summary.csv`: the summary table, with a header row,
//! * `manifest.json`: the command line, parsed parameters, version,
//!   timestamps and output paths.
//!
//! `arw replay <manifest>` re-runs a manifest into a fresh directory and
//! compares the outputs byte for byte. Exit codes: 0 success, 1 runtime
//! failure or replay mismatch, 2 invalid arguments, 3 more than half of the
//! replicas hit the toppling cap.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::configuration::{sample_bernoulli_config, Configuration, Interval};
use crate::experiments::{
    centered_block, concentration_experiment, density_grid, driven_dissipative_rho_c,
    fit_stretched_exponential, fixation_phase_scan, log_grid, mean_odometer, replica_streams,
    supercritical_experiment, tail_experiment, ConcentrationParams, DrivenParams, ExperimentError,
    InjectionSite, ReplicaRecord, ScanParams, SupercriticalParams, TailParams, DEFAULT_SCAN_ALPHA,
};
use crate::extended::{
    estimate_chat, replica_sleepers, to_infection_path, Beam, ChatMethod, ChatParams,
    ExtendedOdometer, Problem, DEFAULT_LOOKAHEAD,
};
use crate::instructions::{FixtureStacks, HashedStacks, Stacks};
use crate::stabilize::{
    sleep_indicator, stabilize_with, Policy, StabilizeOptions, DEFAULT_TOPPLE_CAP,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_OVERFLOW: i32 = 3;

const RECORDS: &str = "records.jsonl";
const SUMMARY: &str = "summary.csv";
const MANIFEST: &str = "manifest.json";

#[derive(Debug, Parser)]
#[command(name = "arw", version, about = "Activated random walk on the integers")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = "arw-out")]
    out: PathBuf,

    /// Worker threads; never changes any output.
    #[arg(long, global = true, env = "ARW_THREADS")]
    threads: Option<usize>,

    /// Explicit instruction prefixes, e.g. "0:R;1:SRS;2:S" (testing aid).
    #[arg(long, global = true, hide = true)]
    fixture_stacks: Option<String>,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
enum Command {
    /// Stabilize one configuration and print the odometer.
    Stabilize(StabilizeArgs),
    /// Empirical tail of the odometer at the origin.
    Tail(TailArgs),
    /// Stretched-exponential fit of a freshly simulated tail.
    Fit(FitArgs),
    /// Mean odometer at the origin with a tail-sum cross-check.
    Mean(MeanArgs),
    /// Odometer at the origin above the critical density.
    Supercritical(SupercriticalArgs),
    /// Critical density from driven-dissipative dynamics.
    #[command(name = "rho-c-dd")]
    RhoCDd(DrivenArgs),
    /// Critical density from a fixed-energy phase scan.
    #[command(name = "rho-c-scan")]
    RhoCScan(ScanArgs),
    /// Minimal extended odometer on [0, n].
    MinimalOdometer(ExtendedArgs),
    /// Stable extended odometers near the minimal one.
    Enumerate(EnumerateArgs),
    /// Sleep-seeking extended odometer.
    Greedy(GreedyArgs),
    /// Growth rate of the number of sleepers.
    Chat(ChatArgs),
    /// Right-count concentration of the minimal odometer.
    Concentration(ConcentrationArgs),
    /// Re-run a manifest and compare outputs byte for byte.
    Replay(ReplayArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Stabilize(_) => "stabilize",
            Command::Tail(_) => "tail",
            Command::Fit(_) => "fit",
            Command::Mean(_) => "mean",
            Command::Supercritical(_) => "supercritical",
            Command::RhoCDd(_) => "rho-c-dd",
            Command::RhoCScan(_) => "rho-c-scan",
            Command::MinimalOdometer(_) => "minimal-odometer",
            Command::Enumerate(_) => "enumerate",
            Command::Greedy(_) => "greedy",
            Command::Chat(_) => "chat",
            Command::Concentration(_) => "concentration",
            Command::Replay(_) => "replay",
        }
    }

    fn seed(&self) -> Option<u64> {
        Some(match self {
            Command::Stabilize(a) => a.seed,
            Command::Tail(a) => a.window.seed,
            Command::Fit(a) => a.tail.window.seed,
            Command::Mean(a) => a.window.seed,
            Command::Supercritical(a) => a.seed,
            Command::RhoCDd(a) => a.seed,
            Command::RhoCScan(a) => a.seed,
            Command::MinimalOdometer(a) => a.seed,
            Command::Enumerate(a) => a.ext.seed,
            Command::Greedy(a) => a.ext.seed,
            Command::Chat(a) => a.seed,
            Command::Concentration(a) => a.seed,
            Command::Replay(_) => return None,
        })
    }
}

#[derive(Debug, Clone, Args, Serialize)]
struct StabilizeArgs {
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Bernoulli density on [-N, N] (ignored with --config).
    #[arg(long, default_value_t = 0.5)]
    rho: f64,
    /// Half-window: sample on [-N, N], stabilize on [-N+1, N-1].
    #[arg(long = "N", default_value_t = 10)]
    half_window: i64,
    /// Explicit active particles as "site:count,...".
    #[arg(long)]
    config: Option<String>,
    /// Stable set "lo:hi" for --config (defaults to the configured sites).
    #[arg(long)]
    set: Option<String>,
    /// sweep, rightmost, random:SEED or queue.
    #[arg(long, default_value = "rightmost")]
    policy: String,
    #[arg(long, default_value_t = DEFAULT_TOPPLE_CAP)]
    cap: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
struct WindowArgs {
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long)]
    rho: f64,
    #[arg(long = "N")]
    half_window: i64,
    #[arg(long, default_value_t = 1000)]
    replicas: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_TOPPLE_CAP)]
    cap: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
struct TailArgs {
    #[command(flatten)]
    window: WindowArgs,
    /// Explicit thresholds "n1,n2,..." (overrides the log grid).
    #[arg(long)]
    grid: Option<String>,
    #[arg(long, default_value_t = 1)]
    grid_lo: u64,
    #[arg(long, default_value_t = 10_000)]
    grid_hi: u64,
    #[arg(long, default_value_t = 30)]
    grid_points: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
struct FitArgs {
    #[command(flatten)]
    tail: TailArgs,
    #[arg(long)]
    n_min: Option<u64>,
    #[arg(long)]
    n_max: Option<u64>,
}

#[derive(Debug, Clone, Args, Serialize)]
struct MeanArgs {
    #[command(flatten)]
    window: WindowArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
struct SupercriticalArgs {
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long)]
    n: u64,
    #[arg(long, default_value_t = 200)]
    replicas: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Growth rate to add epsilon to; estimated with `chat` defaults if absent.
    #[arg(long)]
    chat: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_TOPPLE_CAP)]
    cap: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
enum Injection {
    Uniform,
    Center,
}

#[derive(Debug, Clone, Args, Serialize)]
struct DrivenArgs {
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long)]
    n: u64,
    #[arg(long, default_value_t = 20_000)]
    injections: u64,
    #[arg(long, default_value_t = 4_000)]
    burn_in: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Injection::Uniform)]
    injection: Injection,
    #[arg(long, default_value_t = DEFAULT_TOPPLE_CAP)]
    cap: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
struct ScanArgs {
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = 0.0)]
    rho_lo: f64,
    #[arg(long, default_value_t = 1.0)]
    rho_hi: f64,
    #[arg(long, default_value_t = 0.02)]
    step: f64,
    #[arg(long = "N")]
    half_window: i64,
    #[arg(long, default_value_t = 20)]
    replicas: u64,
    #[arg(long, default_value_t = DEFAULT_TOPPLE_CAP)]
    cap: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Activity threshold as a multiple of N^2.
    #[arg(long, default_value_t = DEFAULT_SCAN_ALPHA)]
    alpha: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
struct ExtendedArgs {
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Bernoulli density of the initial particles on [1, n-1].
    #[arg(long, default_value_t = 0.0)]
    rho: f64,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    u0: i64,
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    f0: i64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
struct EnumerateArgs {
    #[command(flatten)]
    ext: ExtendedArgs,
    /// Largest excess over the minimal odometer at any site.
    #[arg(long, default_value_t = 8)]
    value_cap: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
struct GreedyArgs {
    #[command(flatten)]
    ext: ExtendedArgs,
    #[arg(long, default_value_t = DEFAULT_LOOKAHEAD)]
    lookahead: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
enum ChatKind {
    Beam,
    Greedy,
}

#[derive(Debug, Clone, Args, Serialize)]
struct ChatArgs {
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 20)]
    replicas: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    u0: i64,
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    f0: i64,
    #[arg(long, value_enum, default_value_t = ChatKind::Beam)]
    method: ChatKind,
    #[arg(long, default_value_t = Beam::default().depth)]
    depth: u64,
    #[arg(long, default_value_t = Beam::default().width)]
    width: usize,
    #[arg(long, default_value_t = DEFAULT_LOOKAHEAD)]
    lookahead: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
struct ConcentrationArgs {
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = 0.2)]
    rho: f64,
    #[arg(long, default_value_t = 200)]
    n: u64,
    #[arg(long, default_value_t = 200)]
    replicas: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
struct ReplayArgs {
    manifest: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub params: serde_json::Value,
    pub argv: Vec<String>,
    pub seed: Option<u64>,
    pub version: String,
    /// Seconds since the Unix epoch.
    pub started: f64,
    pub finished: f64,
    pub outputs: Vec<PathBuf>,
}

/// Failure of a run, mapped onto an exit code.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::InvalidParameter(_) | ExperimentError::Config(_) => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<crate::extended::ExtendedError> for Failure {
    fn from(e: crate::extended::ExtendedError) -> Self {
        Failure::Runtime(e.to_string())
    }
}

/// What a subcommand produced.
struct Output {
    records: String,
    summary: String,
    /// Human-readable lines for standard output.
    report: String,
    overflowed: u64,
    replicas: u64,
}

impl Output {
    fn new() -> Self {
        Self {
            records: String::new(),
            summary: String::new(),
            report: String::new(),
            overflowed: 0,
            replicas: 0,
        }
    }

    fn record<T: Serialize>(&mut self, value: &T) {
        self.records
            .push_str(&serde_json::to_string(value).expect("records serialize"));
        self.records.push('\n');
    }

    fn replica_records(&mut self, records: &[ReplicaRecord]) {
        for r in records {
            self.record(r);
        }
        self.replicas += records.len() as u64;
        self.overflowed += records.iter().filter(|r| r.overflow).count() as u64;
    }
}

/// Entry point of the `arw` binary.
pub fn main_with_env() -> i32 {
    run(std::env::args_os())
}

/// Parses `argv` (including the program name), runs, and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let argv: Vec<String> = argv
        .iter()
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    let result = match cli.threads {
        Some(0) => Err(Failure::Usage("--threads must be at least 1".into())),
        Some(k) => match rayon::ThreadPoolBuilder::new().num_threads(k).build() {
            Ok(pool) => pool.install(|| execute(&cli, &argv)),
            Err(e) => Err(Failure::Runtime(e.to_string())),
        },
        None => execute(&cli, &argv),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            EXIT_FAILURE
        }
    }
}

fn execute(cli: &Cli, argv: &[String]) -> Result<i32, Failure> {
    if let Command::Replay(a) = &cli.command {
        return replay(&a.manifest, &cli.out, cli.threads);
    }
    let started = now();
    let out = dispatch(cli)?;
    fs::create_dir_all(&cli.out)?;
    let dir = fs::canonicalize(&cli.out)?;
    let records = dir.join(RECORDS);
    let summary = dir.join(SUMMARY);
    fs::write(&records, &out.records)?;
    fs::write(&summary, &out.summary)?;
    let manifest = RunManifest {
        subcommand: cli.command.name().to_string(),
        params: serde_json::to_value(&cli.command).expect("parameters serialize"),
        argv: argv.to_vec(),
        seed: cli.command.seed(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        started,
        finished: now(),
        outputs: vec![records, summary],
    };
    fs::write(
        dir.join(MANIFEST),
        serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n",
    )?;
    print!("{}", out.report);
    print!("{}", out.summary);
    if out.replicas > 0 && 2 * out.overflowed > out.replicas {
        eprintln!(
            "warning: {} of {} replicas hit the toppling cap",
            out.overflowed, out.replicas
        );
        return Ok(EXIT_OVERFLOW);
    }
    Ok(EXIT_OK)
}

fn now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

/// Re-runs the manifest's command line into `out` and compares files.
fn replay(manifest: &Path, out: &Path, threads: Option<usize>) -> Result<i32, Failure> {
    let text = fs::read_to_string(manifest)?;
    let m: RunManifest =
        serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("bad manifest: {e}")))?;
    let mut argv = strip_run_flags(&m.argv);
    argv.push("--out".into());
    argv.push(out.to_string_lossy().into_owned());
    if let Some(k) = threads {
        argv.push("--threads".into());
        argv.push(k.to_string());
    }
    let code = run(&argv);
    if code != EXIT_OK && code != EXIT_OVERFLOW {
        return Ok(code);
    }
    let mut identical = true;
    for original in &m.outputs {
        let name = original.file_name().expect("outputs are files");
        let fresh = out.join(name);
        let same = match (fs::read(original), fs::read(&fresh)) {
            (Ok(a), Ok(b)) => a == b,
            _ => false,
        };
        println!(
            "{}: {}",
            name.to_string_lossy(),
            if same { "identical" } else { "differs" }
        );
        identical &= same;
    }
    Ok(if identical { code } else { EXIT_FAILURE })
}

/// Drops `--out` and `--threads` (and their values) from a command line.
fn strip_run_flags(argv: &[String]) -> Vec<String> {
    let mut kept = Vec::with_capacity(argv.len());
    let mut it = argv.iter();
    while let Some(a) = it.next() {
        if a == "--out" || a == "--threads" {
            it.next();
        } else if a.starts_with("--out=") || a.starts_with("--threads=") {
        } else {
            kept.push(a.clone());
        }
    }
    kept
}

fn check_lambda(lambda: f64) -> Result<(), Failure> {
    if lambda.is_finite() && lambda > 0.0 {
        Ok(())
    } else {
        Err(Failure::Usage(format!(
            "--lambda must be positive, got {lambda}"
        )))
    }
}

fn check_rho(rho: f64) -> Result<(), Failure> {
    if (0.0..=1.0).contains(&rho) {
        Ok(())
    } else {
        Err(Failure::Usage(format!(
            "--rho must lie in [0, 1], got {rho}"
        )))
    }
}

/// Stacks of replica 0 under `seed`, with optional explicit prefixes.
fn cli_stacks(
    seed: u64,
    lambda: f64,
    fixture: Option<&str>,
) -> Result<FixtureStacks<HashedStacks>, Failure> {
    let (_, stack_seed, _) = replica_streams(seed, 0);
    let base = HashedStacks::new(stack_seed, lambda);
    match fixture {
        Some(text) => FixtureStacks::parse(base, text).map_err(|e| Failure::Usage(e.to_string())),
        None => Ok(FixtureStacks::new(base)),
    }
}

fn parse_pair(s: &str, what: &str) -> Result<(i64, i64), Failure> {
    let bad = || Failure::Usage(format!("{what}: expected \"a:b\", got {s:?}"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    Ok((
        a.trim().parse().map_err(|_| bad())?,
        b.trim().parse().map_err(|_| bad())?,
    ))
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, Failure> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse()
                .map_err(|_| Failure::Usage(format!("{what}: cannot parse {x:?}")))
        })
        .collect()
}

fn dispatch(cli: &Cli) -> Result<Output, Failure> {
    let fixture = cli.fixture_stacks.as_deref();
    match &cli.command {
        Command::Stabilize(a) => cmd_stabilize(a, fixture),
        Command::Tail(a) => cmd_tail(a).map(|(o, _)| o),
        Command::Fit(a) => cmd_fit(a),
        Command::Mean(a) => cmd_mean(a),
        Command::Supercritical(a) => cmd_supercritical(a),
        Command::RhoCDd(a) => cmd_driven(a),
        Command::RhoCScan(a) => cmd_scan(a),
        Command::MinimalOdometer(a) => cmd_minimal(a, fixture),
        Command::Enumerate(a) => cmd_enumerate(a, fixture),
        Command::Greedy(a) => cmd_greedy(a, fixture),
        Command::Chat(a) => cmd_chat(a),
        Command::Concentration(a) => cmd_concentration(a),
        Command::Replay(_) => unreachable!("handled before dispatch"),
    }
}

fn cmd_stabilize(a: &StabilizeArgs, fixture: Option<&str>) -> Result<Output, Failure> {
    check_lambda(a.lambda)?;
    let policy: Policy = a.policy.parse().map_err(Failure::Usage)?;
    let stacks = cli_stacks(a.seed, a.lambda, fixture)?;
    let (config, set) = match &a.config {
        Some(text) => {
            let mut sites = Vec::new();
            for item in text.split(',').filter(|s| !s.trim().is_empty()) {
                let (site, count) = parse_pair(item, "--config")?;
                if count < 0 {
                    return Err(Failure::Usage(format!(
                        "--config: negative count at {site}"
                    )));
                }
                sites.extend(std::iter::repeat_n(site, count as usize));
            }
            let hull = match (sites.iter().min(), sites.iter().max()) {
                (Some(&lo), Some(&hi)) => Interval::new(lo, hi),
                _ => Interval::new(0, 0),
            };
            let set = match &a.set {
                Some(s) => {
                    let (lo, hi) = parse_pair(s, "--set")?;
                    Interval::new(lo, hi)
                }
                None => hull,
            };
            (
                Configuration::from_active_sites(hull.hull(&set), &sites),
                set,
            )
        }
        None => {
            check_rho(a.rho)?;
            if a.half_window < 1 {
                return Err(Failure::Usage("--N must be at least 1".into()));
            }
            let (_, _, config_seed) = replica_streams(a.seed, 0);
            let config = sample_bernoulli_config(
                a.rho,
                Interval::new(-a.half_window, a.half_window),
                config_seed,
            )
            .map_err(|e| Failure::Usage(e.to_string()))?;
            (config, Interval::centered(a.half_window))
        }
    };
    let opts = StabilizeOptions {
        policy,
        cap: a.cap,
        watch: None,
    };
    let (result, overflow) = match stabilize_with(&config, set, &stacks, &opts) {
        Ok(r) => (r, false),
        Err(e) => match e.partial() {
            Some(p) => (p.clone(), true),
            None => return Err(Failure::Usage(e.to_string())),
        },
    };
    let mut out = Output::new();
    out.replica_records(&[ReplicaRecord {
        replica: 0,
        seed: a.seed,
        m0: result.odometer.get(0),
        topples: result.topple_count,
        overflow,
    }]);
    out.summary.push_str("site,odometer,particles,asleep\n");
    for v in set.sites() {
        let _ = writeln!(
            out.summary,
            "{v},{},{},{}",
            result.odometer.get(v),
            result.final_config.count(v),
            u8::from(result.final_config.is_asleep(v))
        );
    }
    let _ = writeln!(
        out.report,
        "# {} topplings, {} exited left, {} exited right{}",
        result.topple_count,
        result.exited_left,
        result.exited_right,
        if overflow {
            ", toppling cap reached"
        } else {
            ""
        }
    );
    Ok(out)
}

fn tail_params(a: &TailArgs) -> Result<TailParams, Failure> {
    let w = &a.window;
    check_lambda(w.lambda)?;
    check_rho(w.rho)?;
    let grid = match &a.grid {
        Some(g) => parse_list(g, "--grid")?,
        None => log_grid(a.grid_lo, a.grid_hi, a.grid_points),
    };
    let mut p = TailParams::new(w.lambda, w.rho, w.half_window, grid, w.replicas, w.seed);
    p.cap = w.cap;
    Ok(p)
}

fn cmd_tail(a: &TailArgs) -> Result<(Output, crate::experiments::TailEstimate), Failure> {
    let run = tail_experiment(&tail_params(a)?)?;
    let mut out = Output::new();
    out.replica_records(&run.records);
    out.summary.push_str("n,survival,std_err\n");
    let se = run.estimate.std_errors();
    for ((n, s), e) in run
        .estimate
        .n_grid
        .iter()
        .zip(&run.estimate.survival)
        .zip(se)
    {
        let _ = writeln!(out.summary, "{n},{s},{e}");
    }
    let _ = writeln!(
        out.report,
        "# {} replicas, {} overflowed",
        run.estimate.replicas, run.estimate.overflowed
    );
    Ok((out, run.estimate))
}

fn cmd_fit(a: &FitArgs) -> Result<Output, Failure> {
    let (mut out, tail) = cmd_tail(&a.tail)?;
    let range = match (a.n_min, a.n_max) {
        (None, None) => None,
        (lo, hi) => Some((lo.unwrap_or(0), hi.unwrap_or(u64::MAX))),
    };
    let fit =
        fit_stretched_exponential(&tail, range).map_err(|e| Failure::Runtime(e.to_string()))?;
    out.summary = format!(
        "slope,c_hat,r2,points\n{},{},{},{}\n",
        fit.slope, fit.c_hat, fit.r2, fit.points
    );
    Ok(out)
}

fn cmd_mean(a: &MeanArgs) -> Result<Output, Failure> {
    let w = &a.window;
    check_lambda(w.lambda)?;
    check_rho(w.rho)?;
    let m = mean_odometer(w.lambda, w.rho, w.half_window, w.replicas, w.seed)?;
    let mut out = Output::new();
    out.replica_records(&m.records);
    let (lo, hi) = m.estimate.ci95();
    out.summary
        .push_str("N,mean,std_err,ci95_lo,ci95_hi,tail_sum,overflowed\n");
    let _ = writeln!(
        out.summary,
        "{},{},{},{lo},{hi},{},{}",
        w.half_window, m.estimate.mean, m.estimate.std_err, m.tail_sum, m.overflowed
    );
    Ok(out)
}

fn default_chat(lambda: f64, seed: u64) -> Result<f64, Failure> {
    let p = ChatParams::new(lambda, 200, 20, seed);
    Ok(estimate_chat(&p)?.mean)
}

fn cmd_supercritical(a: &SupercriticalArgs) -> Result<Output, Failure> {
    check_lambda(a.lambda)?;
    let chat = match a.chat {
        Some(c) => c,
        None => default_chat(a.lambda, a.seed)?,
    };
    let s = supercritical_experiment(&SupercriticalParams {
        lambda: a.lambda,
        epsilon: a.epsilon,
        n: a.n,
        replicas: a.replicas,
        seed: a.seed,
        chat,
        cap: a.cap,
    })?;
    let mut out = Output::new();
    out.replica_records(&s.records);
    out.summary
        .push_str("n,density,particles,bound,fraction_above,median_g0,overflowed\n");
    let _ = writeln!(
        out.summary,
        "{},{},{},{},{},{},{}",
        a.n,
        chat + a.epsilon,
        s.particles,
        s.bound,
        s.fraction_above,
        s.median_g0,
        s.overflowed
    );
    let _ = writeln!(out.report, "# block {}", centered_block(a.n));
    Ok(out)
}

fn cmd_driven(a: &DrivenArgs) -> Result<Output, Failure> {
    check_lambda(a.lambda)?;
    let mut p = DrivenParams::new(a.lambda, a.n, a.injections, a.burn_in, a.seed);
    p.injection = match a.injection {
        Injection::Uniform => InjectionSite::Uniform,
        Injection::Center => InjectionSite::Center,
    };
    p.cap = a.cap;
    let e = driven_dissipative_rho_c(&p)?;
    let mut out = Output::new();
    out.record(&e);
    out.summary
        .push_str("method,lambda,n,estimate,uncertainty\n");
    let _ = writeln!(
        out.summary,
        "driven_dissipative,{},{},{},{}",
        e.lambda, a.n, e.estimate, e.uncertainty
    );
    Ok(out)
}

#[derive(Serialize)]
struct ScanRecord<'a> {
    rho: f64,
    #[serde(flatten)]
    record: &'a ReplicaRecord,
}

fn cmd_scan(a: &ScanArgs) -> Result<Output, Failure> {
    check_lambda(a.lambda)?;
    check_rho(a.rho_lo)?;
    check_rho(a.rho_hi)?;
    if a.step.is_nan() || a.step <= 0.0 || a.rho_hi <= a.rho_lo {
        return Err(Failure::Usage(
            "need --step > 0 and --rho-hi > --rho-lo".into(),
        ));
    }
    let mut p = ScanParams::new(
        a.lambda,
        density_grid(a.rho_lo, a.rho_hi, a.step),
        a.half_window,
        a.replicas,
        a.seed,
    );
    p.cap = a.cap;
    p.alpha = a.alpha;
    let scan = fixation_phase_scan(&p)?;
    let mut out = Output::new();
    for (pt, records) in scan.points.iter().zip(&scan.records) {
        for r in records {
            out.record(&ScanRecord {
                rho: pt.rho,
                record: r,
            });
        }
    }
    out.summary.push_str("rho,fixed_fraction,replicas,capped\n");
    for pt in &scan.points {
        let _ = writeln!(
            out.summary,
            "{},{},{},{}",
            pt.rho, pt.fixed_fraction, pt.replicas, pt.capped
        );
    }
    let _ = writeln!(
        out.report,
        "# crossing {} +/- {}",
        scan.estimate.estimate, scan.estimate.uncertainty
    );
    Ok(out)
}

/// Initial particles on `[1, n - 1]` for the extended-odometer commands.
fn extended_sigma(a: &ExtendedArgs) -> Result<Configuration, Failure> {
    check_lambda(a.lambda)?;
    check_rho(a.rho)?;
    if a.n == 0 {
        return Err(Failure::Usage("--n must be at least 1".into()));
    }
    let (_, _, config_seed) = replica_streams(a.seed, 0);
    sample_bernoulli_config(a.rho, Interval::new(1, a.n as i64 - 1), config_seed)
        .map_err(|e| Failure::Usage(e.to_string()))
}

#[derive(Serialize)]
struct SiteRecord {
    member: usize,
    site: usize,
    value: i64,
    right: i64,
    sleepers: u64,
}

fn write_extended<S: Stacks>(
    out: &mut Output,
    member: usize,
    u: &ExtendedOdometer,
    minimal: &ExtendedOdometer,
    stacks: &S,
) -> Result<(), Failure> {
    let path = to_infection_path(u, minimal, stacks)?;
    for (site, &(r, s)) in path.steps.iter().enumerate() {
        let value = u.values()[site];
        out.record(&SiteRecord {
            member,
            site,
            value,
            right: r,
            sleepers: s,
        });
        let _ = writeln!(out.summary, "{member},{site},{value},{r},{s}");
    }
    Ok(())
}

const EXTENDED_HEADER: &str = "member,site,value,r,s\n";

fn cmd_minimal(a: &ExtendedArgs, fixture: Option<&str>) -> Result<Output, Failure> {
    let sigma = extended_sigma(a)?;
    let stacks = cli_stacks(a.seed, a.lambda, fixture)?;
    let m = Problem::new(&sigma, a.u0, a.f0, a.n, &stacks).minimal()?;
    let mut out = Output::new();
    out.summary.push_str(EXTENDED_HEADER);
    write_extended(&mut out, 0, &m, &m, &stacks)?;
    Ok(out)
}

fn cmd_enumerate(a: &EnumerateArgs, fixture: Option<&str>) -> Result<Output, Failure> {
    let sigma = extended_sigma(&a.ext)?;
    let stacks = cli_stacks(a.ext.seed, a.ext.lambda, fixture)?;
    let e = Problem::new(&sigma, a.ext.u0, a.ext.f0, a.ext.n, &stacks).enumerate(a.value_cap)?;
    let mut out = Output::new();
    out.summary.push_str(EXTENDED_HEADER);
    for (i, u) in e.members.iter().enumerate() {
        write_extended(&mut out, i, u, &e.minimal, &stacks)?;
    }
    let _ = writeln!(
        out.report,
        "# {} members{}",
        e.members.len(),
        if e.truncated {
            " (truncated by the value cap)"
        } else {
            ""
        }
    );
    Ok(out)
}

fn cmd_greedy(a: &GreedyArgs, fixture: Option<&str>) -> Result<Output, Failure> {
    let sigma = extended_sigma(&a.ext)?;
    let stacks = cli_stacks(a.ext.seed, a.ext.lambda, fixture)?;
    let problem = Problem::new(&sigma, a.ext.u0, a.ext.f0, a.ext.n, &stacks);
    let g = problem.greedy(a.lookahead)?;
    let m = problem.minimal()?;
    let mut out = Output::new();
    out.summary.push_str(EXTENDED_HEADER);
    write_extended(&mut out, 0, &g, &m, &stacks)?;
    let s: u64 = (1..=a.ext.n as i64)
        .map(|i| sleep_indicator(&stacks, i, g.get(i)) as u64)
        .sum();
    let _ = writeln!(out.report, "# {s} sleepers on [1, {}]", a.ext.n);
    Ok(out)
}

#[derive(Serialize)]
struct ChatRecord {
    replica: u64,
    sleepers: u64,
    rate: f64,
}

fn cmd_chat(a: &ChatArgs) -> Result<Output, Failure> {
    check_lambda(a.lambda)?;
    if a.n == 0 || a.replicas == 0 {
        return Err(Failure::Usage("need --n >= 1 and --replicas >= 1".into()));
    }
    let mut p = ChatParams::new(a.lambda, a.n, a.replicas, a.seed);
    p.u0 = a.u0;
    p.f0 = a.f0;
    p.method = match a.method {
        ChatKind::Beam => ChatMethod::Beam(Beam {
            depth: a.depth,
            width: a.width.max(1),
        }),
        ChatKind::Greedy => ChatMethod::Greedy {
            lookahead: a.lookahead,
        },
    };
    let sleepers = crate::experiments::run_replicas(a.replicas as u64, |r| replica_sleepers(&p, r))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = Output::new();
    let rates: Vec<f64> = sleepers.iter().map(|&s| s as f64 / a.n as f64).collect();
    for (r, (&s, &rate)) in sleepers.iter().zip(&rates).enumerate() {
        out.record(&ChatRecord {
            replica: r as u64,
            sleepers: s,
            rate,
        });
    }
    let e = crate::stats::MeanEstimate::from_samples(&rates);
    let (lo, hi) = e.ci95();
    out.summary
        .push_str("n,mean,std_err,ci95_lo,ci95_hi,replicas\n");
    let _ = writeln!(
        out.summary,
        "{},{},{},{lo},{hi},{}",
        a.n, e.mean, e.std_err, e.samples
    );
    Ok(out)
}

fn cmd_concentration(a: &ConcentrationArgs) -> Result<Output, Failure> {
    check_lambda(a.lambda)?;
    check_rho(a.rho)?;
    let s = concentration_experiment(&ConcentrationParams::new(
        a.lambda, a.rho, a.n, a.replicas, a.seed,
    ))?;
    let mut out = Output::new();
    for r in &s.records {
        out.record(r);
    }
    out.summary
        .push_str("n,replicas,near_fraction,far_fraction,central_fraction\n");
    let _ = writeln!(
        out.summary,
        "{},{},{},{},{}",
        a.n,
        s.records.len(),
        s.near_fraction,
        s.far_fraction,
        s.central_fraction
    );
    Ok(out)
}
