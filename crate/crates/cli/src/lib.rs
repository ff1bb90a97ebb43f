//! Command-line driver for the tracelab toolkit.
//!
//! Every subcommand resolves its parameters from flags and an optional
//! `--config` file (flags win), runs the mapped library operations and emits
//! one [`ExperimentRecord`] per result as JSON lines.

pub mod commands;
pub mod config;
pub mod record;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

pub use config::{load_config, parse_config, ConfigMap, ParseError};
pub use record::ExperimentRecord;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "tracelab", version, about = "Deletion-channel trace reconstruction experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample traces of a source through the deletion channel.
    Simulate(Flags),
    /// Exact k-mer density map of a source.
    DensityMap(Flags),
    /// Generating polynomials of a source (or a pair) and their suprema.
    Genpoly(Flags),
    /// Hard-pair search over a separated family (modes: brute, sample, pigeonhole, properties).
    Hardpair(Flags),
    /// Maximum likelihood experiments (modes: trace, curve, lb, optimality, map).
    Mle(Flags),
    /// Success rate of a distinguisher (modes: mean, kgram).
    Distinguish(Flags),
    /// Run invariant suites.
    Verify(Flags),
    /// Parameter sweeps exported as CSV (modes: decay, distinctness, curve, distinguish).
    Report(Flags),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::DensityMap(_) => "density-map",
            Command::Genpoly(_) => "genpoly",
            Command::Hardpair(_) => "hardpair",
            Command::Mle(_) => "mle",
            Command::Distinguish(_) => "distinguish",
            Command::Verify(_) => "verify",
            Command::Report(_) => "report",
        }
    }

    fn flags(&self) -> &Flags {
        match self {
            Command::Simulate(f)
            | Command::DensityMap(f)
            | Command::Genpoly(f)
            | Command::Hardpair(f)
            | Command::Mle(f)
            | Command::Distinguish(f)
            | Command::Verify(f)
            | Command::Report(f) => f,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Source length.
    #[arg(long)]
    pub n: Option<usize>,
    /// k-mer length.
    #[arg(long)]
    pub k: Option<usize>,
    /// Deletion probability in [0, 1).
    #[arg(long)]
    pub p: Option<f64>,
    /// Number of traces.
    #[arg(long = "T")]
    pub t: Option<usize>,
    /// Block length of the separated family.
    #[arg(long = "L")]
    pub l: Option<usize>,
    /// Master seed, required by stochastic commands.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Monte-Carlo trials or sample count.
    #[arg(long)]
    pub trials: Option<usize>,
    /// JSON-lines output path (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Flat key=value configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub suite: Option<String>,
    /// Source string of '0'/'1'.
    #[arg(long)]
    pub x: Option<String>,
    /// Second source string.
    #[arg(long)]
    pub y: Option<String>,
    /// Sub-cube side for pigeonhole mode.
    #[arg(long)]
    pub side: Option<f64>,
    /// CSV output path for report.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Config(ParseError),
    Library(tracelab::Error),
    Io(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Config(e) => write!(f, "config error at {e}"),
            CliError::Library(e) => write!(f, "{e}"),
            CliError::Io(m) => write!(f, "{m}"),
        }
    }
}

impl From<tracelab::Error> for CliError {
    fn from(e: tracelab::Error) -> Self {
        CliError::Library(e)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Effective parameters: flag values over config values.
#[derive(Debug, Clone, Default)]
pub struct Params {
    flags: Flags,
    config: ConfigMap,
    used: BTreeMap<String, Value>,
}

impl Params {
    pub fn new(flags: Flags, config: ConfigMap) -> Self {
        Self {
            flags,
            config,
            used: BTreeMap::new(),
        }
    }

    fn config_value<T: FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        match self.config.get(key) {
            None => Ok(None),
            Some((v, line)) => v.parse().map(Some).map_err(|_| {
                CliError::Config(ParseError {
                    path: self.config.path.clone(),
                    line,
                    message: format!("invalid value {v:?} for {key}"),
                })
            }),
        }
    }

    fn lookup<T>(&mut self, key: &str, flag: Option<T>) -> CliResult<Option<T>>
    where
        T: FromStr + Clone + Into<Value>,
    {
        let v = match flag {
            Some(v) => Some(v),
            None => self.config_value(key)?,
        };
        if let Some(v) = &v {
            self.used.insert(key.to_string(), v.clone().into());
        }
        Ok(v)
    }

    pub fn n(&mut self) -> CliResult<Option<usize>> {
        self.lookup("n", self.flags.n)
    }
    pub fn k(&mut self) -> CliResult<Option<usize>> {
        self.lookup("k", self.flags.k)
    }
    pub fn p(&mut self) -> CliResult<Option<f64>> {
        self.lookup("p", self.flags.p)
    }
    pub fn t(&mut self) -> CliResult<Option<usize>> {
        self.lookup("T", self.flags.t)
    }
    pub fn l(&mut self) -> CliResult<Option<usize>> {
        self.lookup("L", self.flags.l)
    }
    pub fn seed(&mut self) -> CliResult<Option<u64>> {
        self.lookup("seed", self.flags.seed)
    }
    pub fn trials(&mut self) -> CliResult<Option<usize>> {
        self.lookup("trials", self.flags.trials)
    }
    pub fn side(&mut self) -> CliResult<Option<f64>> {
        self.lookup("side", self.flags.side)
    }
    pub fn mode(&mut self) -> CliResult<Option<String>> {
        self.lookup("mode", self.flags.mode.clone())
    }
    pub fn suite(&mut self) -> CliResult<Option<String>> {
        self.lookup("suite", self.flags.suite.clone())
    }
    pub fn x(&mut self) -> CliResult<Option<String>> {
        self.lookup("x", self.flags.x.clone())
    }
    pub fn y(&mut self) -> CliResult<Option<String>> {
        self.lookup("y", self.flags.y.clone())
    }

    // output paths are not experiment parameters and stay out of the record
    pub fn out(&self) -> CliResult<Option<PathBuf>> {
        Ok(self.flags.out.clone().or(self.config_value::<PathBuf>("out")?))
    }
    pub fn csv(&self) -> CliResult<Option<PathBuf>> {
        Ok(self.flags.csv.clone().or(self.config_value::<PathBuf>("csv")?))
    }

    /// The seed, or a usage error naming `--seed`.
    pub fn require_seed(&mut self, command: &str) -> CliResult<u64> {
        self.seed()?
            .ok_or_else(|| CliError::Usage(format!("missing required flag --seed: `{command}` is stochastic as configured")))
    }

    /// Parameters read so far, as recorded in every emitted record.
    pub fn used(&self) -> BTreeMap<String, Value> {
        self.used.clone()
    }
}

pub fn require<T>(value: Option<T>, flag: &str) -> CliResult<T> {
    value.ok_or_else(|| CliError::Usage(format!("missing required flag {flag}")))
}

/// What a subcommand produced.
#[derive(Debug, Default)]
pub struct Outcome {
    pub records: Vec<ExperimentRecord>,
    pub summary: Vec<String>,
    pub failed_checks: Vec<String>,
    pub csv: Option<String>,
}

fn usage_text() -> String {
    use clap::CommandFactory;
    Cli::command().render_usage().to_string()
}

/// Parses `argv` (including the program name), runs the command and returns
/// the exit code: 0 on success, 1 when a check fails, 2 on usage errors.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, CliError::Usage(_) | CliError::Config(_)) {
                eprintln!("{}", usage_text());
            }
            EXIT_USAGE
        }
    }
}

fn execute(command: &Command) -> CliResult<i32> {
    let flags = command.flags().clone();
    let config = match &flags.config {
        Some(path) => load_config(path).map_err(CliError::Config)?,
        None => ConfigMap::default(),
    };
    let mut params = Params::new(flags, config);
    let out_path = params.out()?;
    let csv_path = params.csv()?;
    let outcome = commands::dispatch(command.name(), &mut params)?;

    let lines = record::to_json_lines(&outcome.records);
    match &out_path {
        Some(path) => std::fs::write(path, &lines).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(lines.as_bytes()).map_err(|e| CliError::Io(e.to_string()))?;
        }
    }
    if let (Some(path), Some(csv)) = (&csv_path, &outcome.csv) {
        std::fs::write(path, csv).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    }
    for line in &outcome.summary {
        if out_path.is_some() {
            println!("{line}");
        } else {
            eprintln!("{line}");
        }
    }
    if outcome.failed_checks.is_empty() {
        Ok(EXIT_OK)
    } else {
        eprintln!("failed checks: {}", outcome.failed_checks.join(", "));
        Ok(EXIT_CHECK_FAILED)
    }
}
