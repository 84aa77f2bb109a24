//! Command-line harness.
//!
//! Exit codes: 0 converged or certified, 2 iteration cap reached, 3 Browder inner
//! solver failure, 4 not certified, 64 usage error, 74 output could not be written.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::characterize::{certify_common_fixed, default_grid, uniform_grid, Certificate, Verdict};
use crate::error::Error;
use crate::schemes::{
    run_scheme, ConvergenceReport, IterationConfig, RecordCadence, Schedule, SchemeKind, Termination,
    DEFAULT_INNER_CAP, DEFAULT_INNER_TOL,
};
use crate::semigroups::{parse_descriptor, Semigroup};
use crate::stepseq::{
    euclid_sequence, greedy_decompose, replay_action, BetaScheme, DEFAULT_EUCLID_MAX_TERMS,
    DEFAULT_EUCLID_TOL,
};
use crate::vecspace::{dist, StatePoint};

pub const SPEC_VERSION: &str = "1";

pub const EXIT_OK: i32 = 0;
pub const EXIT_MAX_ITER: i32 = 2;
pub const EXIT_INNER_FAILURE: i32 = 3;
pub const EXIT_NOT_CERTIFIED: i32 = 4;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_IO: i32 = 74;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => EXIT_USAGE,
            Self::Io(_) => EXIT_IO,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Usage(m) => write!(f, "usage error: {m}"),
            Self::Io(m) => write!(f, "output error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self::Usage(e.to_string())
    }
}

fn usage(flag: &str, e: impl fmt::Display) -> CliError {
    CliError::Usage(format!("--{flag}: {e}"))
}

fn io_error(path: &Path, e: impl fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "semiflow", version, about = "Common fixed points of nonexpansive semigroups")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Euclidean remainder sequence of a pair (α, β) as JSON.
    #[command(allow_negative_numbers = true)]
    Euclid {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = DEFAULT_EUCLID_TOL)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_EUCLID_MAX_TERMS)]
        max_terms: usize,
    },
    /// Greedy decomposition of a time t over moduli β_n, optionally replayed on a semigroup.
    #[command(allow_negative_numbers = true)]
    Decompose {
        #[arg(long)]
        t: f64,
        /// `geometric:<r>` or `list:<b1>,<b2>,…`
        #[arg(long, default_value = "geometric:0.5")]
        betas: String,
        #[arg(long, default_value_t = 40)]
        n: usize,
        #[arg(long)]
        semigroup: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        z: Option<String>,
    },
    /// Certify a point as a common fixed point from the pair (α, β).
    #[command(allow_negative_numbers = true)]
    Verify {
        #[arg(long)]
        semigroup: String,
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        /// `start:stop:step`; default is [0, 5] in steps of 0.01 plus α, β, α+β, |α-β|.
        #[arg(long)]
        grid: Option<GridSpec>,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Run one iteration scheme.
    #[command(allow_negative_numbers = true)]
    Run {
        /// Read the whole experiment from a JSON file; output flags still apply.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        scheme: SchemeArgs,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Run one scheme from many seeds or start points, concurrently.
    #[command(allow_negative_numbers = true)]
    Sweep {
        #[command(flatten)]
        scheme: SchemeArgs,
        /// Comma-separated seeds for sampled start points.
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
        /// Semicolon-separated explicit start points.
        #[arg(long, allow_hyphen_values = true)]
        starts: Option<String>,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct SchemeArgs {
    #[arg(long)]
    pub scheme: Option<String>,
    #[arg(long)]
    pub semigroup: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, default_value_t = 0.25)]
    pub kappa: f64,
    #[arg(long, default_value_t = 0.25)]
    pub lambda: f64,
    /// `harmonic:<offset>` or `power:<p>,<offset>`
    #[arg(long)]
    pub schedule: Option<String>,
    #[arg(long, default_value_t = 10_000)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub u: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_INNER_TOL)]
    pub inner_tol: f64,
    #[arg(long, default_value_t = DEFAULT_INNER_CAP)]
    pub inner_cap: usize,
    /// `thinned` or `every`
    #[arg(long, default_value = "thinned")]
    pub record: String,
    /// Grid used to certify the final point, `start:stop:step`.
    #[arg(long)]
    pub grid: Option<GridSpec>,
}

/// Uniform time grid `start:stop:step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl GridSpec {
    pub fn times(&self) -> crate::Result<Vec<f64>> {
        uniform_grid(self.start, self.stop, self.step)
    }
}

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected start:stop:step, got `{s}`"));
        }
        let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
        let spec = GridSpec {
            start: num(parts[0])?,
            stop: num(parts[1])?,
            step: num(parts[2])?,
        };
        spec.times().map_err(|e| e.to_string())?;
        Ok(spec)
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.step)
    }
}

/// Everything needed to reproduce one scheme run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub semigroup: String,
    pub scheme: SchemeKind,
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
    pub lambda: f64,
    pub schedule: Option<Schedule>,
    pub max_iter: usize,
    pub tol: f64,
    pub u: Option<Vec<f64>>,
    pub x0: Option<Vec<f64>>,
    pub seed: u64,
    pub inner_tol: f64,
    pub inner_cap: usize,
    pub record: RecordCadence,
    pub grid: Option<GridSpec>,
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
}

pub fn parse_point(flag: &str, text: &str) -> CliResult<Vec<f64>> {
    let coords = text
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<f64>, _>>()
        .map_err(|e| usage(flag, format!("`{text}`: {e}")))?;
    StatePoint::new(coords.clone()).map_err(|e| usage(flag, e))?;
    Ok(coords)
}

impl ExperimentConfig {
    /// Builds and validates a config from command-line flags.
    pub fn from_args(a: &SchemeArgs) -> CliResult<Self> {
        let required = |flag: &str| CliError::Usage(format!("--{flag} is required"));
        let scheme = a.scheme.as_deref().ok_or_else(|| required("scheme"))?;
        let scheme = scheme.parse::<SchemeKind>().map_err(|e| usage("scheme", e))?;
        let record = match a.record.as_str() {
            "thinned" => RecordCadence::Thinned,
            "every" => RecordCadence::Every,
            other => return Err(usage("record", format!("expected thinned or every, got `{other}`"))),
        };
        let cfg = Self {
            semigroup: a.semigroup.clone().ok_or_else(|| required("semigroup"))?,
            scheme,
            alpha: a.alpha.ok_or_else(|| required("alpha"))?,
            beta: a.beta.ok_or_else(|| required("beta"))?,
            kappa: a.kappa,
            lambda: a.lambda,
            schedule: a
                .schedule
                .as_deref()
                .map(Schedule::parse)
                .transpose()
                .map_err(|e| usage("schedule", e))?,
            max_iter: a.max_iter,
            tol: a.tol,
            u: a.u.as_deref().map(|t| parse_point("u", t)).transpose()?,
            x0: a.x0.as_deref().map(|t| parse_point("x0", t)).transpose()?,
            seed: a.seed,
            inner_tol: a.inner_tol,
            inner_cap: a.inner_cap,
            record,
            grid: a.grid,
            csv: None,
            json: None,
        };
        cfg.prepare()?;
        Ok(cfg)
    }

    /// Resolves the semigroup and the iteration config, sampling the start point from
    /// `seed` when none is given.
    pub fn prepare(&self) -> CliResult<(Semigroup, IterationConfig)> {
        let s = parse_descriptor(&self.semigroup).map_err(|e| usage("semigroup", e))?;
        let start = match &self.x0 {
            Some(c) => StatePoint::new(c.clone()).map_err(|e| usage("x0", e))?,
            None => s.domain.sample(&mut ChaCha8Rng::seed_from_u64(self.seed)),
        };
        s.admit(&start).map_err(|e| usage("x0", e))?;
        let mut it = IterationConfig::new(self.alpha, self.beta, start)
            .with_weights(self.kappa, self.lambda)
            .with_max_iter(self.max_iter)
            .with_tol(self.tol)
            .with_cadence(self.record);
        it.schedule = self.schedule;
        it.inner_tol = self.inner_tol;
        it.inner_cap = self.inner_cap;
        if let Some(u) = &self.u {
            let u = StatePoint::new(u.clone()).map_err(|e| usage("u", e))?;
            s.admit(&u).map_err(|e| usage("u", e))?;
            it.anchor = Some(u);
        }
        it.validate(self.scheme).map_err(CliError::from)?;
        Ok((s, it))
    }

    pub fn grid_times(&self) -> CliResult<Vec<f64>> {
        match &self.grid {
            Some(g) => g.times().map_err(|e| usage("grid", e)),
            None => Ok(default_grid(self.alpha, self.beta)),
        }
    }
}

/// JSON summary of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub spec_version: String,
    pub config: ExperimentConfig,
    #[serde(flatten)]
    pub report: ConvergenceReport,
    pub certificate: Certificate,
    pub exit_code: i32,
}

pub fn termination_exit_code(t: Termination) -> i32 {
    match t {
        Termination::Converged => EXIT_OK,
        Termination::MaxIter => EXIT_MAX_ITER,
        Termination::InnerSolverFailure => EXIT_INNER_FAILURE,
    }
}

/// Shortest representation that parses back to the same `f64`.
fn num(v: f64) -> String {
    format!("{v:?}")
}

/// Trace CSV: `n,pair_residual,step_norm,fixed_set_distance,x1,…,xd`.
pub fn report_csv(report: &ConvergenceReport) -> String {
    let d = report.final_point.dim();
    let mut out = String::from("n,pair_residual,step_norm,fixed_set_distance");
    for i in 1..=d {
        out.push_str(&format!(",x{i}"));
    }
    out.push('\n');
    for rec in &report.iterates_recorded {
        out.push_str(&format!(
            "{},{},{},{}",
            rec.n,
            num(rec.pair_residual),
            num(rec.step_norm),
            rec.fixed_set_distance.map(num).unwrap_or_default()
        ));
        for &c in rec.point.coords() {
            out.push(',');
            out.push_str(&num(c));
        }
        out.push('\n');
    }
    out
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| io_error(path, e))
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

/// Runs the experiment, writes its artifacts and returns the summary.
pub fn run_experiment(cfg: &ExperimentConfig) -> CliResult<RunSummary> {
    let (s, it) = cfg.prepare()?;
    let grid = cfg.grid_times()?;
    let report = run_scheme(cfg.scheme, &s, &it)?;
    let certificate = certify_common_fixed(&s, &report.final_point, cfg.alpha, cfg.beta, &grid, cfg.tol)?;
    let summary = RunSummary {
        spec_version: SPEC_VERSION.to_string(),
        config: cfg.clone(),
        exit_code: termination_exit_code(report.termination),
        report,
        certificate,
    };
    if let Some(path) = &cfg.csv {
        write_file(path, &report_csv(&summary.report))?;
    }
    if let Some(path) = &cfg.json {
        write_file(path, &to_json(&summary))?;
    }
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub label: String,
    pub seed: Option<u64>,
    pub start: Vec<f64>,
    pub termination: Termination,
    pub n_used: usize,
    pub final_pair_residual: f64,
    pub final_fixed_set_distance: Option<f64>,
    pub csv: PathBuf,
    pub json: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub spec_version: String,
    pub scheme: SchemeKind,
    pub runs: Vec<SweepEntry>,
    pub max_final_distance: Option<f64>,
    pub mean_final_distance: Option<f64>,
    pub exit_code: i32,
}

/// Runs `base` once per seed and once per explicit start, each into its own files.
pub fn run_sweep(
    base: &ExperimentConfig,
    seeds: &[u64],
    starts: &[Vec<f64>],
    out_dir: &Path,
) -> CliResult<SweepSummary> {
    if seeds.is_empty() && starts.is_empty() {
        return Err(CliError::Usage("--seeds or --starts must list at least one run".into()));
    }
    fs::create_dir_all(out_dir).map_err(|e| io_error(out_dir, e))?;
    let mut configs = Vec::new();
    for &seed in seeds {
        let mut c = base.clone();
        c.seed = seed;
        c.x0 = None;
        configs.push((format!("seed{seed}"), Some(seed), c));
    }
    for (i, x0) in starts.iter().enumerate() {
        let mut c = base.clone();
        c.x0 = Some(x0.clone());
        configs.push((format!("start{i}"), None, c));
    }
    for (label, _, c) in &mut configs {
        c.csv = Some(out_dir.join(format!("{label}.csv")));
        c.json = Some(out_dir.join(format!("{label}.json")));
        c.prepare()?;
    }

    let workers = std::thread::available_parallelism().map_or(1, usize::from);
    let mut results: Vec<Option<CliResult<RunSummary>>> = Vec::new();
    results.resize_with(configs.len(), || None);
    for (chunk_cfgs, chunk_out) in configs.chunks(workers).zip(results.chunks_mut(workers)) {
        std::thread::scope(|scope| {
            for ((_, _, c), slot) in chunk_cfgs.iter().zip(chunk_out.iter_mut()) {
                scope.spawn(move || *slot = Some(run_experiment(c)));
            }
        });
    }

    let mut runs = Vec::new();
    let mut exit_code = EXIT_OK;
    for ((label, seed, c), result) in configs.into_iter().zip(results) {
        let summary = result.expect("every run joined")?;
        exit_code = exit_code.max(summary.exit_code);
        runs.push(SweepEntry {
            label,
            seed,
            start: summary.config.x0.clone().unwrap_or_else(|| {
                c.prepare().map(|(_, it)| it.start.into_coords()).unwrap_or_default()
            }),
            termination: summary.report.termination,
            n_used: summary.report.n_used,
            final_pair_residual: summary.report.final_pair_residual,
            final_fixed_set_distance: summary.report.final_fixed_set_distance,
            csv: c.csv.expect("set above"),
            json: c.json.expect("set above"),
        });
    }
    let distances: Vec<f64> = runs.iter().filter_map(|r| r.final_fixed_set_distance).collect();
    Ok(SweepSummary {
        spec_version: SPEC_VERSION.to_string(),
        scheme: base.scheme,
        max_final_distance: distances.iter().copied().reduce(f64::max),
        mean_final_distance: (!distances.is_empty())
            .then(|| distances.iter().sum::<f64>() / distances.len() as f64),
        runs,
        exit_code,
    })
}

#[derive(Serialize)]
struct DecomposeOutput {
    #[serde(flatten)]
    decomposition: crate::stepseq::GreedyDecomposition,
    partial_sum: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    replay: Option<ReplayOutput>,
}

#[derive(Serialize)]
struct ReplayOutput {
    replay: StatePoint,
    evaluate: StatePoint,
    gap: f64,
}

fn execute(command: Command, out: &mut dyn Write) -> CliResult<i32> {
    let emit = |out: &mut dyn Write, text: &str| -> CliResult<()> {
        out.write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string()))
    };
    match command {
        Command::Euclid {
            alpha,
            beta,
            tol,
            max_terms,
        } => {
            let seq = euclid_sequence(alpha, beta, tol, max_terms)?;
            emit(out, &to_json(&seq))?;
            Ok(EXIT_OK)
        }
        Command::Decompose {
            t,
            betas,
            n,
            semigroup,
            z,
        } => {
            let scheme = BetaScheme::parse(&betas).map_err(|e| usage("betas", e))?;
            let decomposition = greedy_decompose(t, &scheme, n).map_err(|e| usage("t", e))?;
            let replay = match (semigroup, z) {
                (Some(desc), Some(z)) => {
                    let s = parse_descriptor(&desc).map_err(|e| usage("semigroup", e))?;
                    let z = StatePoint::new(parse_point("z", &z)?)?;
                    let replayed = replay_action(&s, &z, &decomposition, n)?;
                    let jumped = s.evaluate(decomposition.partial_sum(n), &z)?;
                    Some(ReplayOutput {
                        gap: dist(&replayed, &jumped)?,
                        replay: replayed,
                        evaluate: jumped,
                    })
                }
                (None, None) => None,
                _ => return Err(CliError::Usage("--semigroup and --z go together".into())),
            };
            emit(
                out,
                &to_json(&DecomposeOutput {
                    partial_sum: decomposition.partial_sum(n),
                    decomposition,
                    replay,
                }),
            )?;
            Ok(EXIT_OK)
        }
        Command::Verify {
            semigroup,
            x,
            alpha,
            beta,
            grid,
            tol,
            json,
        } => {
            let s = parse_descriptor(&semigroup).map_err(|e| usage("semigroup", e))?;
            let x = StatePoint::new(parse_point("x", &x)?)?;
            let grid = match grid {
                Some(g) => g.times().map_err(|e| usage("grid", e))?,
                None => default_grid(alpha, beta),
            };
            let cert = certify_common_fixed(&s, &x, alpha, beta, &grid, tol)?;
            let text = to_json(&cert);
            if let Some(path) = json {
                write_file(&path, &text)?;
            }
            emit(out, &text)?;
            Ok(match cert.verdict {
                Verdict::Certified => EXIT_OK,
                Verdict::NotCertified => EXIT_NOT_CERTIFIED,
            })
        }
        Command::Run {
            config,
            scheme,
            csv,
            json,
        } => {
            let mut cfg = match config {
                Some(path) => {
                    let text = fs::read_to_string(&path).map_err(|e| usage("config", io_error(&path, e)))?;
                    let cfg: ExperimentConfig =
                        serde_json::from_str(&text).map_err(|e| usage("config", e))?;
                    cfg.prepare()?;
                    cfg
                }
                None => ExperimentConfig::from_args(&scheme)?,
            };
            cfg.csv = csv.or(cfg.csv);
            cfg.json = json.or(cfg.json);
            let summary = run_experiment(&cfg)?;
            if cfg.json.is_none() {
                emit(out, &to_json(&summary))?;
            }
            Ok(summary.exit_code)
        }
        Command::Sweep {
            scheme,
            seeds,
            starts,
            out_dir,
            json,
        } => {
            let starts = starts
                .as_deref()
                .map(|s| {
                    s.split(';')
                        .filter(|p| !p.trim().is_empty())
                        .map(|p| parse_point("starts", p))
                        .collect::<CliResult<Vec<_>>>()
                })
                .transpose()?
                .unwrap_or_default();
            let cfg = ExperimentConfig::from_args(&scheme)?;
            let summary = run_sweep(&cfg, &seeds, &starts, &out_dir)?;
            let text = to_json(&summary);
            if let Some(path) = json {
                write_file(&path, &text)?;
            }
            emit(out, &text)?;
            Ok(summary.exit_code)
        }
    }
}

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            e.exit_code()
        }
    }
}

/// Entry point used by the binary.
pub fn main_with_env() -> i32 {
    let stdout = io::stdout();
    let stderr = io::stderr();
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}
