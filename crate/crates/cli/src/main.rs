use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use matnorm::diagnostics::DEFAULT_FIT_WINDOW;
use matnorm::drivers::DEFAULT_MAX_ITERATIONS;
use matnorm::io::{self, IoError};
use matnorm::{
    certify_doubly_standardized, estimate_rate, generate_gaussian, run_simultaneous,
    run_successive, sample_ring, GenSpec, Matrix, NormConfig, NormError, Order, StopReason, Trace,
    TraceFormat,
};

// help text spellings of the library defaults
const TOLERANCE_TEXT: &str = "1e-8";
const CEILING_TEXT: &str = "1e12";
const CERTIFY_TOLERANCE_TEXT: &str = "1e-4";

const EXIT_NOT_CONVERGED: u8 = 2;
const EXIT_INPUT: u8 = 3;
const EXIT_IO: u8 = 4;

/// Successive row/column standardization experiments.
///
/// Exit codes: 0 success or converged, 2 not converged (or not certified),
/// 3 input error (dimension, malformed CSV, zero variance, bad flags),
/// 4 I/O error.
#[derive(Parser)]
#[command(name = "matnorm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run successive standardization to convergence.
    Normalize(NormalizeArgs),
    /// Run the simultaneous-normalization update (expected not to converge).
    Simultaneous(SimultaneousArgs),
    /// Run both schemes from the same start and report a verdict.
    Compare(CompareArgs),
    /// Sample first columns of 3x3 limit matrices from random starts.
    Ring(RingArgs),
    /// Write a seeded Gaussian matrix as CSV.
    Generate(GenerateArgs),
    /// Check whether a CSV matrix is doubly standardized.
    Certify(CertifyArgs),
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// Read the starting matrix from a CSV file.
    #[arg(long = "in", value_name = "PATH")]
    input: Option<PathBuf>,
    /// Generate the starting matrix: ROWSxCOLS,MEAN,VARIANCE,SEED (e.g. 5x5,2,4,42).
    #[arg(long = "gen", value_name = "SPEC")]
    gen: Option<GenSpec>,
}

#[derive(Args)]
struct IterArgs {
    /// Stop when the squared Frobenius step between full iterations is below this.
    #[arg(long, default_value = TOLERANCE_TEXT)]
    tol: f64,
    /// Iteration cap.
    #[arg(long = "max-iter", default_value_t = DEFAULT_MAX_ITERATIONS)]
    max_iter: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderArg {
    /// Columns then rows within each iteration.
    ColFirst,
    /// Rows then columns within each iteration.
    RowFirst,
}

#[derive(Args)]
struct NormalizeArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, value_enum, default_value = "col-first")]
    order: OrderArg,
    #[command(flatten)]
    iter: IterArgs,
    /// Write the per-iteration trace (`.json` for JSON, otherwise CSV).
    #[arg(long, value_name = "PATH")]
    trace: Option<PathBuf>,
    /// Store every iterate in a JSON trace.
    #[arg(long)]
    capture: bool,
    /// Write the final matrix as CSV.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Number of trailing iterations used for the rate fit.
    #[arg(long, default_value_t = DEFAULT_FIT_WINDOW)]
    window: usize,
}

#[derive(Args)]
struct SimultaneousArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    iter: IterArgs,
    /// Step or sum of squares above this counts as divergence.
    #[arg(long, default_value = CEILING_TEXT)]
    ceiling: f64,
    /// Write the per-iteration trace (`.json` for JSON, otherwise CSV).
    #[arg(long, value_name = "PATH")]
    trace: Option<PathBuf>,
    /// Write the final matrix as CSV.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    iter: IterArgs,
    /// Directory receiving successive.<ext> and simultaneous.<ext>.
    #[arg(long = "trace-dir", value_name = "DIR")]
    trace_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    /// Worker threads (the two runs execute concurrently when > 1).
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct RingArgs {
    /// Number of random 3x3 starts.
    #[arg(long)]
    count: usize,
    /// Seed of the first start; start k uses seed + k.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Ring CSV output: seed,iterations,c1,c2,c3,u1,u2,u3.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[command(flatten)]
    iter: IterArgs,
    /// Worker threads; output order is by seed regardless.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct GenerateArgs {
    /// ROWSxCOLS,MEAN,VARIANCE,SEED
    #[arg(long = "gen", value_name = "SPEC")]
    gen: GenSpec,
    /// Output CSV; standard output when absent.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CertifyArgs {
    /// CSV matrix to check.
    #[arg(long = "in", value_name = "PATH")]
    input: PathBuf,
    /// Allowed |mean| and |std - 1| for every row and column.
    #[arg(long, default_value = CERTIFY_TOLERANCE_TEXT)]
    tol: f64,
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Io(String),
}

impl From<NormError> for Failure {
    fn from(e: NormError) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Io { .. } => Failure::Io(e.to_string()),
            e => Failure::Input(e.to_string()),
        }
    }
}

type CmdResult = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_INPUT)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Normalize(a) => normalize(a),
        Command::Simultaneous(a) => simultaneous(a),
        Command::Compare(a) => compare(a),
        Command::Ring(a) => ring(a),
        Command::Generate(a) => generate(a),
        Command::Certify(a) => certify(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INPUT)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_IO)
        }
    }
}

fn load(source: &Source) -> Result<Matrix, Failure> {
    match (&source.input, &source.gen) {
        (Some(path), _) => Ok(io::read_matrix_csv(path)?),
        (None, Some(spec)) => Ok(generate_gaussian(spec)?),
        (None, None) => Err(Failure::Input("one of --in or --gen is required".into())),
    }
}

fn config(iter: &IterArgs) -> NormConfig {
    NormConfig::default()
        .with_tolerance(iter.tol)
        .with_max_iterations(iter.max_iter)
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool, Failure> {
    if jobs == 0 {
        return Err(Failure::Input("--jobs must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Failure::Io(e.to_string()))
}

fn stop_name(r: StopReason) -> &'static str {
    match r {
        StopReason::Tolerance => "tolerance",
        StopReason::MaxIterations => "max_iterations",
        StopReason::ZeroVariance => "zero_variance",
        StopReason::Diverged => "diverged",
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_string(), |v| format!("{v:?}"))
}

fn summary(label: &str, trace: &Trace, window: usize) -> String {
    let window = window.min(trace.iterations());
    let rate = estimate_rate(trace, window)
        .ok()
        .and_then(|r| r.rate_estimate);
    format!(
        "{label} converged={} stop={} iterations={} step_sq={} rate={}",
        trace.converged,
        stop_name(trace.stop_reason),
        trace.iterations(),
        fmt_opt(trace.last_step_sq()),
        fmt_opt(rate)
    )
}

fn exit_for(trace: &Trace) -> CmdResult {
    match trace.stop_reason {
        StopReason::Tolerance => Ok(0),
        StopReason::ZeroVariance => Err(Failure::Input(
            "zero standard deviation encountered; the input lies in the degenerate set".into(),
        )),
        StopReason::MaxIterations | StopReason::Diverged => Ok(EXIT_NOT_CONVERGED),
    }
}

fn write_outputs(
    trace: &Trace,
    trace_path: Option<&Path>,
    out: Option<&Path>,
) -> Result<(), Failure> {
    if let Some(path) = trace_path {
        io::write_trace(trace, path, TraceFormat::from_path(path))?;
    }
    if let Some(path) = out {
        io::write_matrix_csv(&trace.final_matrix, path)?;
    }
    Ok(())
}

fn normalize(a: NormalizeArgs) -> CmdResult {
    let m = load(&a.source)?;
    let order = match a.order {
        OrderArg::ColFirst => Order::ColumnFirst,
        OrderArg::RowFirst => Order::RowFirst,
    };
    let cfg = config(&a.iter).with_order(order).with_capture(a.capture);
    let trace = run_successive(&m, &cfg)?;
    write_outputs(&trace, a.trace.as_deref(), a.out.as_deref())?;
    println!("{}", summary("successive", &trace, a.window));
    exit_for(&trace)
}

fn simultaneous(a: SimultaneousArgs) -> CmdResult {
    let m = load(&a.source)?;
    let mut cfg = config(&a.iter);
    cfg.divergence_ceiling = a.ceiling;
    let trace = run_simultaneous(&m, &cfg)?;
    write_outputs(&trace, a.trace.as_deref(), a.out.as_deref())?;
    println!("{}", summary("simultaneous", &trace, DEFAULT_FIT_WINDOW));
    exit_for(&trace)
}

fn compare(a: CompareArgs) -> CmdResult {
    let m = load(&a.source)?;
    let cfg = config(&a.iter);
    let (succ, simul) = pool(a.jobs)?
        .install(|| rayon::join(|| run_successive(&m, &cfg), || run_simultaneous(&m, &cfg)));
    let (succ, simul) = (succ?, simul?);
    if let Some(dir) = &a.trace_dir {
        std::fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
        let (ext, format) = match a.format {
            FormatArg::Csv => ("csv", TraceFormat::Csv),
            FormatArg::Json => ("json", TraceFormat::Json),
        };
        io::write_trace(&succ, dir.join(format!("successive.{ext}")), format)?;
        io::write_trace(&simul, dir.join(format!("simultaneous.{ext}")), format)?;
    }
    println!("{}", summary("successive", &succ, DEFAULT_FIT_WINDOW));
    println!("{}", summary("simultaneous", &simul, DEFAULT_FIT_WINDOW));
    let verdict = |t: &Trace| {
        if t.converged {
            "converged"
        } else {
            stop_name(t.stop_reason)
        }
    };
    println!(
        "verdict successive={} simultaneous={}",
        verdict(&succ),
        verdict(&simul)
    );
    if succ.stop_reason == StopReason::ZeroVariance {
        return exit_for(&succ);
    }
    Ok(if succ.converged {
        0
    } else {
        EXIT_NOT_CONVERGED
    })
}

fn ring(a: RingArgs) -> CmdResult {
    if a.count == 0 {
        return Err(Failure::Input("--count must be at least 1".into()));
    }
    let cfg = config(&a.iter);
    let sampling = pool(a.jobs)?.install(|| sample_ring(a.count, a.seed, &cfg))?;
    if let Some(path) = &a.out {
        io::write_ring_csv(&sampling.samples, path)?;
    }
    println!(
        "ring samples={} excluded={} max_abs_sum={:?} max_norm_dev={:?}",
        sampling.samples.len(),
        sampling.excluded.len(),
        sampling.max_abs_sum(),
        sampling.max_norm_deviation()
    );
    if !sampling.excluded.is_empty() {
        eprintln!("warning: excluded seeds {:?}", sampling.excluded);
    }
    Ok(0)
}

fn generate(a: GenerateArgs) -> CmdResult {
    let m = generate_gaussian(&a.gen)?;
    match &a.out {
        Some(path) => io::write_matrix_csv(&m, path)?,
        None => print!("{}", io::format_matrix_csv(&m)),
    }
    Ok(0)
}

fn certify(a: CertifyArgs) -> CmdResult {
    let m = io::read_matrix_csv(&a.input)?;
    let c = certify_doubly_standardized(&m, a.tol);
    println!(
        "certified={} max_abs_mean={:?} max_std_dev={:?}",
        c.ok, c.max_abs_mean, c.max_std_dev
    );
    Ok(if c.ok { 0 } else { EXIT_NOT_CONVERGED })
}
