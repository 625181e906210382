//! Command-line front end.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::Error;
use crate::posterior::OutOfRange;
use crate::report::{analyze, read_observations, AnalyzeOptions, InputError, QuantileGrid};
use crate::sim::{
    run_study_with, summarize, SimFailure, SimOutcome, StudyConfig, StudyCsvWriter, SummaryRow,
};
use crate::VERSION;

pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_PARSE: u8 = 2;
pub const EXIT_OUT_OF_BOUNDS: u8 = 3;
pub const EXIT_USAGE: u8 = 4;
pub const EXIT_OUTPUT: u8 = 5;

#[derive(Debug, Parser)]
#[command(
    name = "dircat",
    version,
    about = "Binned Dirichlet posteriors for two-group experiments"
)]
pub struct Cli {
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compare a control and an experiment sample.
    Analyze(AnalyzeArgs),
    /// Run the simulation study against exact ground truth.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Control observations, one number per line.
    #[arg(long)]
    pub control: PathBuf,
    /// Experiment observations, one number per line.
    #[arg(long)]
    pub experiment: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub bins: usize,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub lower: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub upper: f64,
    #[arg(long, default_value_t = 100_000)]
    pub draws: usize,
    #[arg(long, default_value_t = 0.99)]
    pub gamma: f64,
    /// Quantile levels as start:stop:step.
    #[arg(long, default_value = "0.01:0.99:0.01")]
    pub quantiles: QuantileGrid,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Move out-of-range values to the nearest bound instead of failing.
    #[arg(long)]
    pub clamp: bool,
    /// Historical observations used to build the prior.
    #[arg(long, requires = "prior_strength")]
    pub prior_history: Option<PathBuf>,
    /// Weight of each historical observation in the prior.
    #[arg(long, requires = "prior_history")]
    pub prior_strength: Option<f64>,
    /// Report path (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the quantile curve as CSV.
    #[arg(long)]
    pub quantile_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 500)]
    pub sims: usize,
    #[arg(long, value_delimiter = ',', default_value = "8,32,128,512")]
    pub bins: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.5,0.9")]
    pub taus: Vec<f64>,
    /// Joint posterior draws per Dirichlet estimator.
    #[arg(long, default_value_t = 10_000)]
    pub draws: usize,
    #[arg(long, default_value_t = 10_000)]
    pub resamples: usize,
    #[arg(long, default_value_t = 8_000)]
    pub visitors_min: usize,
    #[arg(long, default_value_t = 25_000)]
    pub visitors_max: usize,
    #[arg(long, default_value_t = 0.99)]
    pub gamma: f64,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Grid cells for ground truth.
    #[arg(long, default_value_t = crate::sim::DEFAULT_RESOLUTION)]
    pub resolution: usize,
    /// Use one population and one sample for both groups.
    #[arg(long)]
    pub identical_groups: bool,
    /// Results CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Config and summary JSON (default: the results path with a .json extension).
    #[arg(long)]
    pub sidecar: Option<PathBuf>,
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    fn output(path: &Path, err: impl std::fmt::Display) -> Self {
        Self::new(
            EXIT_OUTPUT,
            format!("cannot write {}: {err}", path.display()),
        )
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::OutOfBounds { .. } => EXIT_OUT_OF_BOUNDS,
            Error::EmptyData => EXIT_PARSE,
            Error::InvalidArgument(_)
            | Error::InvalidBins(_)
            | Error::InvalidConcentration(_)
            | Error::DimensionMismatch { .. } => EXIT_USAGE,
            _ => EXIT_FAILURE,
        };
        Self::new(code, e.to_string())
    }
}

impl From<InputError> for CliError {
    fn from(e: InputError) -> Self {
        Self::new(EXIT_PARSE, e.to_string())
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::new(EXIT_USAGE, "--threads must be at least 1"));
        }
        // Fails only if a pool already exists, e.g. when called twice in one process.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    match cli.command {
        Command::Analyze(a) => cmd_analyze(a),
        Command::Simulate(s) => cmd_simulate(s),
    }
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = rand::random::<u64>();
        eprintln!("seed: {s}");
        s
    })
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::output(path, e))
}

pub fn cmd_analyze(args: AnalyzeArgs) -> Result<(), CliError> {
    if args.bins < 2 {
        return Err(CliError::new(
            EXIT_USAGE,
            format!("--bins {} must be at least 2", args.bins),
        ));
    }
    if args.lower.is_nan() || args.upper.is_nan() || args.lower >= args.upper {
        return Err(CliError::new(
            EXIT_USAGE,
            format!(
                "--lower {} must be below --upper {}",
                args.lower, args.upper
            ),
        ));
    }
    if args.draws == 0 {
        return Err(CliError::new(EXIT_USAGE, "--draws must be at least 1"));
    }
    let control = read_observations(&args.control)?;
    let experiment = read_observations(&args.experiment)?;
    for (data, path) in [(&control, &args.control), (&experiment, &args.experiment)] {
        if data.is_empty() {
            return Err(CliError::new(
                EXIT_PARSE,
                format!("{}: no observations", path.display()),
            ));
        }
    }
    if !args.clamp {
        for (data, path) in [(&control, &args.control), (&experiment, &args.experiment)] {
            if let Some((i, v)) = data
                .iter()
                .enumerate()
                .find(|(_, &v)| v < args.lower || v > args.upper)
            {
                return Err(CliError::new(
                    EXIT_OUT_OF_BOUNDS,
                    format!(
                        "{}: observation {} = {v} lies outside [{}, {}]; pass --clamp to move it to the nearest bound",
                        path.display(),
                        i + 1,
                        args.lower,
                        args.upper
                    ),
                ));
            }
        }
    }
    let history = match (&args.prior_history, args.prior_strength) {
        (Some(path), Some(strength)) => {
            if !(strength >= 0.0 && strength.is_finite()) {
                return Err(CliError::new(
                    EXIT_USAGE,
                    format!("--prior-strength {strength} must be finite and non-negative"),
                ));
            }
            Some((
                path.display().to_string(),
                read_observations(path)?,
                strength,
            ))
        }
        _ => None,
    };
    let opts = AnalyzeOptions {
        bins: args.bins,
        lower: args.lower,
        upper: args.upper,
        draws: args.draws,
        seed: resolve_seed(args.seed),
        gamma: args.gamma,
        quantiles: args.quantiles,
        policy: if args.clamp {
            OutOfRange::Clamp
        } else {
            OutOfRange::Reject
        },
        history,
    };
    let report = analyze(&control, &experiment, &opts)?;
    let json = report.to_json();
    match &args.out {
        Some(path) => write_file(path, &json)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(json.as_bytes())
                .map_err(|e| CliError::output(Path::new("<stdout>"), e))?;
        }
    }
    if let Some(path) = &args.quantile_csv {
        write_file(path, &report.quantile_csv())?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Sidecar<'a> {
    version: &'static str,
    seed: u64,
    config: &'a StudyConfig,
    method: Method,
    completed: usize,
    failures: &'a [SimFailure],
    summary: &'a [SummaryRow],
    /// Dirichlet cells whose offsets spread wider than the bootstrap's.
    wide_offsets: Vec<String>,
}

#[derive(Serialize)]
struct Method {
    interval: &'static str,
    quantile_interpolation: &'static str,
    truth_decision_metrics: &'static str,
    offset: &'static str,
    empirical_offset: &'static str,
}

const METHOD: Method = Method {
    interval: "equal-tailed, linear interpolation between order statistics",
    quantile_interpolation: "linear (type 7) for samples and bootstrap resamples",
    truth_decision_metrics:
        "Normal sampling distribution of the mean difference at the true means and variances",
    offset: "truth - estimate",
    empirical_offset: "normal or empirical sample statistic - estimate",
};

fn cell_label(r: &SummaryRow) -> String {
    let mut s = format!("{}", r.estimator);
    if let Some(k) = r.bin_count {
        s.push_str(&format!("[{k}]"));
    }
    s.push_str(&format!(" {}", r.statistic));
    if let Some(t) = r.tau {
        s.push_str(&format!("@{t}"));
    }
    s
}

pub fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    if args.sims == 0 || args.bins.is_empty() {
        return Err(CliError::new(
            EXIT_USAGE,
            "--sims and --bins must be non-empty",
        ));
    }
    let config = StudyConfig {
        n_sims: args.sims,
        bin_counts: args.bins,
        taus: args.taus,
        draws: args.draws,
        resamples: args.resamples,
        visitors_min: args.visitors_min,
        visitors_max: args.visitors_max,
        gamma: args.gamma,
        master_seed: resolve_seed(args.seed),
        resolution: args.resolution,
        identical_groups: args.identical_groups,
    };
    config.validate()?;
    let sidecar_path = args
        .sidecar
        .clone()
        .unwrap_or_else(|| args.out.with_extension("json"));
    let file = File::create(&args.out).map_err(|e| CliError::output(&args.out, e))?;
    let mut writer = StudyCsvWriter::new(BufWriter::new(file));
    let mut records = Vec::with_capacity(config.n_sims);
    let mut failures = Vec::new();
    run_study_with(&config, |outcome| {
        match outcome {
            SimOutcome::Completed(rec) => {
                writer
                    .write_record(&rec)
                    .map_err(|e| CliError::output(&args.out, e))?;
                records.push(rec);
            }
            SimOutcome::Failed(f) => failures.push(f),
        }
        Ok::<_, CliError>(())
    })?;
    writer.flush().map_err(|e| CliError::output(&args.out, e))?;

    let summary = summarize(&records);
    let wide: Vec<String> = summary
        .iter()
        .filter(|r| r.wide_offsets)
        .map(cell_label)
        .collect();
    let sidecar = Sidecar {
        version: VERSION,
        seed: config.master_seed,
        config: &config,
        method: METHOD,
        completed: records.len(),
        failures: &failures,
        summary: &summary,
        wide_offsets: wide.clone(),
    };
    let value = serde_json::to_value(&sidecar).expect("sidecar is serializable");
    let mut json = serde_json::to_string_pretty(&value).expect("value is serializable");
    json.push('\n');
    write_file(&sidecar_path, &json)?;

    eprintln!(
        "{} of {} simulations completed, {} failed",
        records.len(),
        config.n_sims,
        failures.len()
    );
    for r in summary.iter().filter(|r| r.coverage.is_some()) {
        eprintln!(
            "{:<40} coverage {:.3}  median range {:.5}  mean offset {:+.6}",
            cell_label(r),
            r.coverage.unwrap_or(f64::NAN),
            r.median_range.unwrap_or(f64::NAN),
            r.mean_offset
        );
    }
    for w in &wide {
        eprintln!("wide offsets: {w}");
    }
    Ok(())
}
