//! Command-line front end: `simulate`, `estimate`, `correct`, `report`.
//!
//! Exit codes: 0 on success, 1 for usage or configuration errors, 2 for
//! errors in the data being processed.

use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::info;

use crate::error::{Error, Result};
use crate::pipeline::config::{BiasSign, PipelineConfig, SimulationConfig, CONFIG_ENV};
use crate::pipeline::report::{rows, summarize, write_plots, write_table, ReportOptions};
use crate::pipeline::{correct_log, Estimator};
use crate::records::{
    ingest, read_jsonl, write_csv, write_jsonl, EstimateRecord, Ingested, LogFormat, MalformedPolicy, TruthRecord,
};
use crate::sim::simulate;

#[derive(Debug, Parser)]
#[command(name = "ftbias", version, about = "Online force-torque sensor bias and drift estimation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic joint/wrench log and its ground-truth sidecar.
    Simulate(SimulateArgs),
    /// Run the estimator over a log and emit one estimate per wrench sample.
    Estimate(EstimateArgs),
    /// Apply estimated bias and drift to the wrench samples of a log.
    Correct(CorrectArgs),
    /// Summarize an estimate stream, optionally against ground truth.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Simulation config (TOML); built-in defaults when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Log output path; `-` or absent for stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Ground-truth sidecar output path (JSONL).
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Log format; inferred from the output extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<LogFormat>,
    /// Noise seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Seed for randomly generated trajectories.
    #[arg(long)]
    pub trajectory_seed: Option<u64>,
    #[arg(long)]
    pub duration: Option<f64>,
    #[arg(long)]
    pub rate: Option<f64>,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Input log; `-` or absent for stdin.
    #[arg(long, short)]
    pub input: Option<PathBuf>,
    /// Input format; inferred from the extension when omitted (stdin: jsonl).
    #[arg(long, value_enum)]
    pub format: Option<LogFormat>,
    #[arg(long, value_enum, default_value_t = MalformedPolicy::FailFast)]
    pub malformed: MalformedPolicy,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Pipeline config (TOML); built-in defaults when omitted.
    #[arg(long, env = CONFIG_ENV)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub input: InputArgs,
    /// Estimate output path (JSONL); `-` or absent for stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Write ingestion and estimator counters as JSON to this path.
    #[arg(long)]
    pub stats: Option<PathBuf>,
    /// Largest gap in seconds between a wrench and the joint sample it is paired with.
    #[arg(long)]
    pub pairing_tolerance: Option<f64>,
    /// Drift random-walk intensity.
    #[arg(long)]
    pub sigma_q: Option<f64>,
    /// χ² probability for the innovation gate threshold.
    #[arg(long)]
    pub gate_probability: Option<f64>,
    /// Disable innovation gating.
    #[arg(long)]
    pub no_gate: bool,
    /// Include the full 12×12 covariance in every estimate.
    #[arg(long)]
    pub full_covariance: bool,
    /// `plus`: measured + b = load wrench; `minus`: measured − b = load wrench.
    #[arg(long, value_enum)]
    pub bias_sign: Option<SignArg>,
}

#[derive(Debug, Args)]
pub struct CorrectArgs {
    /// Pipeline config; only the bias sign convention is used.
    #[arg(long, env = CONFIG_ENV)]
    pub config: Option<PathBuf>,
    /// Estimate stream produced by `estimate`.
    #[arg(long)]
    pub estimates: PathBuf,
    #[command(flatten)]
    pub input: InputArgs,
    /// Corrected wrench output (JSONL); `-` or absent for stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// `plus`: measured + b = load wrench; `minus`: measured − b = load wrench.
    #[arg(long, value_enum)]
    pub bias_sign: Option<SignArg>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Estimate stream produced by `estimate`.
    #[arg(long)]
    pub estimates: PathBuf,
    /// Ground-truth sidecar produced by `simulate`.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Summary output (JSON); `-` or absent for stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Per-step CSV table.
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Directory for `bias.svg` and `drift.svg`.
    #[arg(long)]
    pub plot_dir: Option<PathBuf>,
    /// Converged once every bias σ stays within this factor of its final value.
    #[arg(long, default_value_t = ReportOptions::default().convergence_ratio)]
    pub convergence_ratio: f64,
    /// Two-sided confidence of the NEES band.
    #[arg(long, default_value_t = ReportOptions::default().nees_confidence)]
    pub nees_confidence: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SignArg {
    Plus,
    Minus,
}

impl From<SignArg> for BiasSign {
    fn from(s: SignArg) -> Self {
        match s {
            SignArg::Plus => BiasSign::Plus,
            SignArg::Minus => BiasSign::Minus,
        }
    }
}

fn is_stdio(path: &Option<PathBuf>) -> bool {
    path.as_deref().is_none_or(|p| p == Path::new("-"))
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    if is_stdio(path) {
        return Ok(Box::new(BufWriter::new(io::stdout().lock())));
    }
    let p = path.as_deref().expect("checked above");
    let f = File::create(p).map_err(|e| Error::io(format!("creating {}", p.display()), e))?;
    Ok(Box::new(BufWriter::new(f)))
}

fn read_input(args: &InputArgs) -> Result<Ingested> {
    if is_stdio(&args.input) {
        let mut buf = Vec::new();
        io::stdin().read_to_end(&mut buf).map_err(|e| Error::io("reading stdin", e))?;
        return ingest(buf.as_slice(), args.format.unwrap_or_default(), args.malformed);
    }
    let p = args.input.as_deref().expect("checked above");
    let f = File::open(p).map_err(|e| Error::io(format!("opening {}", p.display()), e))?;
    let ingested = ingest(f, args.format.unwrap_or_else(|| LogFormat::from_path(p)), args.malformed)?;
    info!("{}: {:?}", p.display(), ingested.stats);
    Ok(ingested)
}

fn load_pipeline_config(path: &Option<PathBuf>) -> Result<PipelineConfig> {
    match path {
        Some(p) => PipelineConfig::load(p),
        None => Ok(PipelineConfig::default()),
    }
}

fn finish(mut w: Box<dyn Write>, what: &str) -> Result<()> {
    w.flush().map_err(|e| Error::io(format!("writing {what}"), e))
}

fn run_simulate(args: &SimulateArgs) -> Result<()> {
    let mut cfg = match &args.config {
        Some(p) => SimulationConfig::load(p)?,
        None => SimulationConfig::default(),
    };
    if let Some(s) = args.seed {
        cfg.noise.seed = s;
    }
    if let Some(s) = args.trajectory_seed {
        cfg.trajectory.seed = s;
    }
    if let Some(d) = args.duration {
        cfg.trajectory.duration = d;
    }
    if let Some(r) = args.rate {
        cfg.trajectory.rate = r;
    }
    let model = cfg.robot_model()?;
    let sim = simulate(&model, &cfg.trajectory, &cfg.noise, &cfg.load.theta, &cfg.options)
        .map_err(|e| Error::Config(e.to_string()))?;
    let format = args.format.unwrap_or_else(|| match &args.output {
        Some(p) if !is_stdio(&args.output) => LogFormat::from_path(p),
        _ => LogFormat::Jsonl,
    });
    let mut out = output(&args.output)?;
    match format {
        LogFormat::Jsonl => write_jsonl(&mut out, &sim.records).map_err(|e| Error::io("writing log", e))?,
        LogFormat::Csv => write_csv(&mut out, &sim.records)?,
    }
    finish(out, "log")?;
    if let Some(p) = &args.truth {
        let f = File::create(p).map_err(|e| Error::io(format!("creating {}", p.display()), e))?;
        write_jsonl(f, &sim.truth).map_err(|e| Error::io(format!("writing {}", p.display()), e))?;
    }
    info!("simulated {} records", sim.records.len());
    Ok(())
}

fn run_estimate(args: &EstimateArgs) -> Result<()> {
    let mut cfg = load_pipeline_config(&args.config)?;
    if let Some(v) = args.pairing_tolerance {
        cfg.pairing_tolerance = v;
    }
    if let Some(v) = args.sigma_q {
        cfg.bias_filter.sigma_q = v;
    }
    if let Some(v) = args.gate_probability {
        cfg.gating.probability = v;
    }
    if args.no_gate {
        cfg.gating.enabled = false;
    }
    if args.full_covariance {
        cfg.output.full_covariance = true;
    }
    if let Some(s) = args.bias_sign {
        cfg.bias_sign = s.into();
    }
    cfg.validate()?;
    let mut estimator = Estimator::new(&cfg)?;
    let input = read_input(&args.input)?;
    let mut out = output(&args.output)?;
    let io_err = |e: serde_json::Error| Error::io("writing estimates", e.into());
    let emit = |e: &EstimateRecord, out: &mut Box<dyn Write>| -> Result<()> {
        serde_json::to_writer(&mut *out, e).map_err(io_err)?;
        out.write_all(b"\n").map_err(|e| Error::io("writing estimates", e))
    };
    for r in &input.records {
        if let Some(e) = estimator.push(r)? {
            emit(&e, &mut out)?;
        }
    }
    if let Some(e) = estimator.finish()? {
        emit(&e, &mut out)?;
    }
    finish(out, "estimates")?;
    let stats = estimator.stats();
    info!("ingest {:?}; estimator {:?}", input.stats, stats);
    if let Some(p) = &args.stats {
        let body = serde_json::json!({ "ingest": input.stats, "estimator": stats });
        std::fs::write(p, format!("{body:#}\n")).map_err(|e| Error::io(format!("writing {}", p.display()), e))?;
    }
    Ok(())
}

fn run_correct(args: &CorrectArgs) -> Result<()> {
    let mut sign = load_pipeline_config(&args.config)?.bias_sign;
    if let Some(s) = args.bias_sign {
        sign = s.into();
    }
    let estimates: Vec<EstimateRecord> = read_jsonl(&args.estimates)?;
    if estimates.windows(2).any(|w| w[1].t < w[0].t) {
        return Err(Error::RejectedMeasurement("estimates are not sorted by time".into()));
    }
    let input = read_input(&args.input)?;
    let (corrected, stats) = correct_log(&input.records, &estimates, sign);
    info!("{stats:?}");
    let mut out = output(&args.output)?;
    write_jsonl(&mut out, &corrected).map_err(|e| Error::io("writing corrected wrenches", e))?;
    finish(out, "corrected wrenches")
}

fn run_report(args: &ReportArgs) -> Result<()> {
    let opts = ReportOptions {
        convergence_ratio: args.convergence_ratio,
        nees_confidence: args.nees_confidence,
    };
    if !(opts.convergence_ratio >= 1.0) || !(opts.nees_confidence > 0.0 && opts.nees_confidence < 1.0) {
        return Err(Error::Config(
            "convergence ratio must be >= 1 and NEES confidence in (0, 1)".into(),
        ));
    }
    let estimates: Vec<EstimateRecord> = read_jsonl(&args.estimates)?;
    let truth: Option<Vec<TruthRecord>> = args.truth.as_deref().map(read_jsonl).transpose()?;
    let summary = summarize(&estimates, truth.as_deref(), &opts);
    let mut out = output(&args.output)?;
    serde_json::to_writer_pretty(&mut out, &summary).map_err(|e| Error::io("writing summary", e.into()))?;
    out.write_all(b"\n").map_err(|e| Error::io("writing summary", e))?;
    finish(out, "summary")?;
    if args.table.is_some() || args.plot_dir.is_some() {
        let rows = rows(&estimates, truth.as_deref());
        if let Some(p) = &args.table {
            let f = File::create(p).map_err(|e| Error::io(format!("creating {}", p.display()), e))?;
            write_table(f, &rows)?;
        }
        if let Some(dir) = &args.plot_dir {
            write_plots(dir, &rows, truth.as_deref())?;
        }
    }
    Ok(())
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate(a) => run_simulate(a),
        Command::Estimate(a) => run_estimate(a),
        Command::Correct(a) => run_correct(a),
        Command::Report(a) => run_report(a),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
