//! Command-line front end.
//!
//! Every option can also come from a flat `key = value` file given with
//! `--config`; flags on the command line win. Exit codes: 0 success,
//! 1 input/output failure, 2 usage error, 3 an experiment check failed.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::error::Error;
use crate::experiments::{run_experiment, Experiment, ExperimentConfig, Verdict};
use crate::forest::{read_forest, write_forest, Forest};
use crate::point_process::{palm_version, sample_poisson, Boundary, PointId, PointSample, Window};
use crate::pointfile::{read_points, write_points, SampleHeader};
use crate::succession::{enumerate_line, write_succession};
use crate::walks::{eta_slice, trajectory, write_slice, write_trajectory};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Failed(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Io(m) | CliError::Failed(m) => f.write_str(m),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Library errors met while reading inputs or writing outputs.
fn io_err(e: Error) -> CliError {
    CliError::Io(e.to_string())
}

/// Library errors caused by the parameters the user supplied.
fn usage_err(e: Error) -> CliError {
    match e {
        Error::Io(_) => CliError::Io(e.to_string()),
        other => CliError::Usage(other.to_string()),
    }
}

#[derive(Parser, Debug)]
#[command(name = "poisson-forest", version, about = "Poisson trees, succession lines and coalescing walks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a Poisson point configuration into a point file.
    Sample(SampleArgs),
    /// Build the forest of a point file.
    Forest(ForestArgs),
    /// Enumerate the succession line around an anchor.
    Succession(SuccessionArgs),
    /// Export one walk or a time slice of all walks.
    Walk(WalkArgs),
    /// Run a named Monte-Carlo experiment.
    Experiment(ExperimentArgs),
}

#[derive(Args, Debug, Default)]
struct Common {
    /// Flat `key = value` file with default option values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Print a summary to stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    d: Option<String>,
    #[arg(long)]
    rate: Option<String>,
    /// Space side length, or one length per axis separated by commas.
    #[arg(long)]
    space: Option<String>,
    /// Time range `lo:hi`.
    #[arg(long)]
    time: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// `periodic` or `open`.
    #[arg(long)]
    boundary: Option<String>,
    /// Add a point at the space-time origin.
    #[arg(long)]
    palm: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ForestArgs {
    #[command(flatten)]
    common: Common,
    #[arg(short, long)]
    input: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SuccessionArgs {
    #[command(flatten)]
    common: Common,
    /// Point file or forest file.
    #[arg(short, long)]
    input: Option<PathBuf>,
    /// Point file matching a forest input (otherwise regenerated from its seed).
    #[arg(long)]
    points: Option<PathBuf>,
    #[arg(long)]
    anchor: Option<String>,
    #[arg(long)]
    back: Option<String>,
    #[arg(long)]
    forward: Option<String>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct WalkArgs {
    #[command(flatten)]
    common: Common,
    /// Point file or forest file.
    #[arg(short, long)]
    input: Option<PathBuf>,
    #[arg(long)]
    points: Option<PathBuf>,
    /// Walk started at this point.
    #[arg(long)]
    id: Option<String>,
    #[arg(long = "t-max")]
    t_max: Option<String>,
    /// Export the slice `η_t` at this time instead of a single walk.
    #[arg(long)]
    slice: Option<String>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    #[command(flatten)]
    common: Common,
    /// One of: connectivity, branch-sizes, palm-invariance, ergodicity,
    /// meeting-bound, younger-coalescence, marginal-dynamics.
    name: String,
    #[arg(long)]
    d: Option<String>,
    #[arg(long)]
    rate: Option<String>,
    #[arg(long)]
    space: Option<String>,
    #[arg(long = "space-grid")]
    space_grid: Option<String>,
    #[arg(long)]
    times: Option<String>,
    #[arg(long)]
    replicas: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    separations: Option<String>,
    #[arg(long = "region-side")]
    region_side: Option<String>,
    #[arg(long = "grid-spacing")]
    grid_spacing: Option<String>,
    #[arg(long)]
    shifts: Option<String>,
    #[arg(long)]
    samples: Option<String>,
    #[arg(long)]
    events: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long = "fraction-min")]
    fraction_min: Option<String>,
    #[arg(long = "components-min")]
    components_min: Option<String>,
    #[arg(long = "r-squared-min")]
    r_squared_min: Option<String>,
    #[arg(long = "radius-bar")]
    radius_bar: Option<String>,
    #[arg(long = "exclusion-max")]
    exclusion_max: Option<String>,
    /// CSV report path (stdout when absent).
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Also write line-delimited JSON records here.
    #[arg(long)]
    jsonl: Option<PathBuf>,
}

/// Option values: config file first, command-line flags on top.
#[derive(Debug, Default)]
struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    fn load(common: &Common) -> CliResult<Self> {
        let mut values = BTreeMap::new();
        if let Some(path) = &common.config {
            let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            for (i, raw) in text.lines().enumerate() {
                let line = raw.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (k, v) = line
                    .split_once('=')
                    .ok_or_else(|| CliError::Usage(format!("{}:{}: expected key = value", path.display(), i + 1)))?;
                values.insert(normalize(k), v.trim().to_string());
            }
        }
        Ok(Settings { values })
    }

    fn flag(&mut self, key: &str, value: &Option<String>) {
        if let Some(v) = value {
            self.values.insert(normalize(key), v.clone());
        }
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn get<T: FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        self.raw(key)
            .map(|v| v.parse::<T>().map_err(|_| CliError::Usage(format!("invalid value '{v}' for --{key}"))))
            .transpose()
    }

    fn require<T: FromStr>(&self, key: &str) -> CliResult<T> {
        self.get(key)?.ok_or_else(|| CliError::Usage(format!("missing required option --{key}")))
    }

    fn list<T: FromStr>(&self, key: &str) -> CliResult<Option<Vec<T>>> {
        self.raw(key)
            .map(|v| {
                v.split(',')
                    .map(|s| s.trim().parse::<T>().map_err(|_| CliError::Usage(format!("invalid value '{v}' for --{key}"))))
                    .collect()
            })
            .transpose()
    }

    fn path(&self, key: &str, flag: &Option<PathBuf>) -> Option<PathBuf> {
        flag.clone().or_else(|| self.raw(key).map(PathBuf::from))
    }
}

fn normalize(key: &str) -> String {
    key.trim().trim_start_matches("--").replace('-', "_")
}

fn with_pool<T>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T>
where
    T: Send,
{
    match workers {
        None => Ok(f()),
        Some(0) => Err(CliError::Usage("--workers must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Io(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

fn open_output(path: &Option<PathBuf>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn finish(mut out: Box<dyn Write>) -> CliResult<()> {
    out.flush().map_err(|e| CliError::Io(e.to_string()))
}

fn open_input(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn cmd_sample(args: SampleArgs) -> CliResult<()> {
    let mut s = Settings::load(&args.common)?;
    for (k, v) in [
        ("d", &args.d),
        ("rate", &args.rate),
        ("space", &args.space),
        ("time", &args.time),
        ("seed", &args.seed),
        ("boundary", &args.boundary),
    ] {
        s.flag(k, v);
    }
    if args.palm {
        s.values.insert("palm".into(), "1".into());
    }
    let d: usize = s.require("d")?;
    let rate: f64 = s.require("rate")?;
    let mut space: Vec<f64> = s.list("space")?.ok_or_else(|| CliError::Usage("missing required option --space".into()))?;
    if space.len() == 1 && d > 2 {
        space = vec![space[0]; d - 1];
    }
    let time: String = s.require("time")?;
    let (lo, hi) = time
        .split_once(':')
        .and_then(|(a, b)| Some((a.trim().parse::<f64>().ok()?, b.trim().parse::<f64>().ok()?)))
        .ok_or_else(|| CliError::Usage(format!("--time expects lo:hi, got '{time}'")))?;
    let seed: u64 = s.get("seed")?.unwrap_or(0);
    let boundary: Boundary = s.get("boundary")?.unwrap_or(Boundary::Periodic);
    let palm = matches!(s.raw("palm"), Some("1" | "true" | "yes"));
    let output = s.path("output", &args.output);

    let window = Window::new(d, space, lo, hi, boundary).map_err(usage_err)?;
    let sample = sample_poisson(rate, &window, seed).map_err(usage_err)?;
    let sample = if palm { palm_version(&sample).map_err(usage_err)? } else { sample };
    let mut out = open_output(&output)?;
    write_points(&sample, &mut out).map_err(io_err)?;
    finish(out)?;
    if args.common.verbose > 0 {
        eprintln!("sampled {} points", sample.len());
    }
    Ok(())
}

/// Reads a point file, or a forest file whose sample is taken from
/// `points` or regenerated from the header seed and checked against it.
fn load_sample(input: &Path, points: Option<&Path>) -> CliResult<PointSample> {
    let mut first = String::new();
    open_input(input)?
        .read_line(&mut first)
        .map_err(|e| CliError::Io(e.to_string()))?;
    let (_, extra) = SampleHeader::parse(first.trim_end(), 1).map_err(io_err)?;
    if !extra.iter().any(|(k, _)| k == "roots") {
        return read_points(open_input(input)?).map_err(io_err);
    }
    let file = read_forest(open_input(input)?).map_err(io_err)?;
    let sample = match points {
        Some(p) => read_points(open_input(p)?).map_err(io_err)?,
        None => {
            let h = &file.header;
            let s = sample_poisson(h.rate, &h.window, h.seed).map_err(io_err)?;
            if h.palm {
                palm_version(&s).map_err(io_err)?
            } else {
                s
            }
        }
    };
    let forest = Forest::build(sample.clone()).map_err(io_err)?;
    let consistent = file.records.len() == forest.len()
        && file.records.iter().all(|rec| {
            forest
                .mother(rec.id)
                .map(|m| m == rec.mother)
                .unwrap_or(false)
        });
    if !consistent {
        return Err(CliError::Io(format!(
            "{}: forest does not match its point sample; pass the point file with --points",
            input.display()
        )));
    }
    Ok(sample)
}

fn required_input(s: &Settings, flag: &Option<PathBuf>) -> CliResult<PathBuf> {
    s.path("input", flag).ok_or_else(|| CliError::Usage("missing required option --input".into()))
}

fn cmd_forest(args: ForestArgs) -> CliResult<()> {
    let s = Settings::load(&args.common)?;
    let input = required_input(&s, &args.input)?;
    let output = s.path("output", &args.output);
    let sample = read_points(open_input(&input)?).map_err(io_err)?;
    let forest = with_pool(args.common.workers, || Forest::build(sample))?.map_err(io_err)?;
    let mut out = open_output(&output)?;
    write_forest(&forest, &mut out).map_err(io_err)?;
    finish(out)?;
    if args.common.verbose > 0 {
        eprintln!("{} points, {} roots", forest.len(), forest.root_slots().len());
    }
    Ok(())
}

fn cmd_succession(args: SuccessionArgs) -> CliResult<()> {
    let mut s = Settings::load(&args.common)?;
    s.flag("anchor", &args.anchor);
    s.flag("back", &args.back);
    s.flag("forward", &args.forward);
    let input = required_input(&s, &args.input)?;
    let points = s.path("points", &args.points);
    let anchor = PointId(s.require("anchor")?);
    let back: usize = s.get("back")?.unwrap_or(0);
    let forward: usize = s.get("forward")?.unwrap_or(0);
    let output = s.path("output", &args.output);

    let sample = load_sample(&input, points.as_deref())?;
    let forest = with_pool(args.common.workers, || Forest::build(sample))?.map_err(io_err)?;
    let labels = enumerate_line(&forest, anchor, back, forward).map_err(usage_err)?;
    let mut out = open_output(&output)?;
    write_succession(&forest, &labels, back, forward, &mut out).map_err(io_err)?;
    finish(out)?;
    if args.common.verbose > 0 {
        eprintln!("labels {}..={} complete={}", labels.lowest(), labels.highest(), labels.complete);
    }
    Ok(())
}

fn cmd_walk(args: WalkArgs) -> CliResult<()> {
    let mut s = Settings::load(&args.common)?;
    s.flag("id", &args.id);
    s.flag("t_max", &args.t_max);
    s.flag("slice", &args.slice);
    let input = required_input(&s, &args.input)?;
    let points = s.path("points", &args.points);
    let output = s.path("output", &args.output);
    let slice: Option<f64> = s.get("slice")?;
    let id: Option<u64> = s.get("id")?;
    let t_max: Option<f64> = s.get("t_max")?;
    if slice.is_none() && id.is_none() {
        return Err(CliError::Usage("walk needs --id (with --t-max) or --slice".into()));
    }

    let sample = load_sample(&input, points.as_deref())?;
    let forest = with_pool(args.common.workers, || Forest::build(sample))?.map_err(io_err)?;
    let header = SampleHeader::of(forest.sample()).render();
    let mut out = open_output(&output)?;
    let write = |e: io::Error| CliError::Io(e.to_string());
    match (slice, id) {
        (Some(t), _) => {
            let eta = eta_slice(&forest, t).map_err(usage_err)?;
            writeln!(out, "{header} slice={t}").map_err(write)?;
            write_slice(&eta, &mut out).map_err(io_err)?;
        }
        (None, Some(id)) => {
            let t_max = t_max.unwrap_or(forest.window().time_hi);
            let traj = trajectory(&forest, PointId(id), t_max).map_err(usage_err)?;
            writeln!(out, "{header} walk={id} t_max={t_max}").map_err(write)?;
            write_trajectory(&traj, &mut out).map_err(io_err)?;
        }
        (None, None) => unreachable!(),
    }
    finish(out)
}

fn experiment_config(args: &ExperimentArgs, experiment: Experiment) -> CliResult<ExperimentConfig> {
    let mut s = Settings::load(&args.common)?;
    for (k, v) in [
        ("d", &args.d),
        ("rate", &args.rate),
        ("space", &args.space),
        ("space_grid", &args.space_grid),
        ("times", &args.times),
        ("replicas", &args.replicas),
        ("seed", &args.seed),
        ("separations", &args.separations),
        ("region_side", &args.region_side),
        ("grid_spacing", &args.grid_spacing),
        ("shifts", &args.shifts),
        ("samples", &args.samples),
        ("events", &args.events),
        ("alpha", &args.alpha),
        ("fraction_min", &args.fraction_min),
        ("components_min", &args.components_min),
        ("r_squared_min", &args.r_squared_min),
        ("radius_bar", &args.radius_bar),
        ("exclusion_max", &args.exclusion_max),
    ] {
        s.flag(k, v);
    }
    let d = s.get("d")?.unwrap_or(experiment.default_dimension());
    let mut cfg = ExperimentConfig::defaults(experiment, d);
    macro_rules! set {
        ($field:ident) => {
            if let Some(v) = s.get(stringify!($field))? {
                cfg.$field = v;
            }
        };
        ($field:ident, list) => {
            if let Some(v) = s.list(stringify!($field))? {
                cfg.$field = v;
            }
        };
    }
    set!(rate);
    set!(space);
    set!(space_grid, list);
    set!(replicas);
    set!(seed);
    set!(separations, list);
    set!(region_side);
    set!(grid_spacing);
    set!(shifts, list);
    set!(samples);
    set!(events);
    set!(alpha);
    set!(fraction_min);
    set!(components_min);
    set!(r_squared_min);
    set!(radius_bar);
    set!(exclusion_max);
    if experiment == Experiment::MarginalDynamics {
        // keep the window long enough for the requested event count
        cfg.times = vec![crate::experiments::marginal_duration(cfg.d, cfg.rate, cfg.replicas, cfg.events)];
    }
    set!(times, list);
    cfg.validate().map_err(usage_err)?;
    Ok(cfg)
}

fn cmd_experiment(args: ExperimentArgs) -> CliResult<()> {
    let experiment: Experiment = args.name.parse().map_err(usage_err)?;
    let cfg = experiment_config(&args, experiment)?;
    let s = Settings::load(&args.common)?;
    let output = s.path("output", &args.output);
    let jsonl = s.path("jsonl", &args.jsonl);
    let report = with_pool(args.common.workers, || run_experiment(experiment, &cfg))?.map_err(usage_err)?;

    let mut out = open_output(&output)?;
    report.write_csv(&mut out).map_err(io_err)?;
    finish(out)?;
    if let Some(path) = jsonl {
        let mut out = open_output(&Some(path))?;
        report.write_jsonl(&mut out).map_err(io_err)?;
        finish(out)?;
    }
    let overall = report.overall();
    if args.common.verbose > 0 {
        eprintln!("{experiment}: {} in {:.1?}", overall.as_str(), report.runtime);
    }
    if overall == Verdict::Fail {
        let failed: Vec<String> = report
            .checks()
            .filter(|r| r.verdict == Verdict::Fail)
            .map(|r| format!("{} {}", r.cell, r.statistic))
            .collect();
        return Err(CliError::Failed(format!("{experiment} failed: {}", failed.join("; "))));
    }
    Ok(())
}

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
        }
    };
    let result = match cli.command {
        Command::Sample(a) => cmd_sample(a),
        Command::Forest(a) => cmd_forest(a),
        Command::Succession(a) => cmd_succession(a),
        Command::Walk(a) => cmd_walk(a),
        Command::Experiment(a) => cmd_experiment(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Usage(_) = e {
                eprintln!("run with --help for usage");
            }
            e.exit_code()
        }
    }
}
