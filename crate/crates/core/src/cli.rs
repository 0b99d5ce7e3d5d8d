//! The `edag` command line: argument parsing, report serialization and exit codes.
//!
//! Exit status is 0 on success, 1 for usage errors and 2 for analysis errors.
//! Reports go to `--out` or standard output; warnings and progress go to
//! standard error.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cache::{CacheConfig, CacheConfigError};
use crate::edag::{
    BuildOptions, CostModel, EdagBuilder, EdagSummary, FalseDeps, DEFAULT_VERTEX_CAP,
};
use crate::graph::{export_dot, DotError, MaterializedEdag};
use crate::isa::{isa_listing, DecodeMode};
use crate::metrics::{
    compute_metrics, decimal, movement_series, rank_traces, Exact, MetricsError, MetricsReport,
    ModelParams, RankMetric,
};
use crate::oracle::{brute_force_memory_depth, simulate_greedy_memory_by, Priority};
use crate::synth::{
    write_trace, Pattern, SynthError, SynthSpec, DEFAULT_BASE_ADDR, DEFAULT_STRIDE,
};
use crate::trace::open_trace;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

const PROGRESS_EVERY: u64 = 1 << 20;

#[derive(Debug, Parser)]
#[command(
    name = "edag",
    version,
    about = "Memory-sensitivity analysis of RISC-V instruction traces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Analyze one trace and emit a JSON report.
    Analyze(AnalyzeArgs),
    /// Rank several traces by memory latency sensitivity; CSV output.
    Rank(RankArgs),
    /// Emit the data-movement time series of one trace; CSV output.
    Movement(MovementArgs),
    /// Write the eDAG of a small trace as Graphviz DOT.
    ExportDot(DotArgs),
    /// Generate a synthetic trace.
    Synth(SynthArgs),
    /// List the supported mnemonics.
    Isa,
}

#[derive(Debug, Clone, Args)]
struct ModelArgs {
    /// Cache geometry as TOTAL:LINE:ASSOC, in bytes.
    #[arg(
        long,
        value_name = "S:L:A",
        default_value = "32768:64:2",
        conflicts_with = "no_cache"
    )]
    cache: CacheConfig,
    /// Send every memory access to RAM.
    #[arg(long)]
    no_cache: bool,
    /// Concurrent memory accesses.
    #[arg(long, default_value_t = 4)]
    m: u32,
    /// RAM latency in cycles; also the cost of a miss vertex.
    #[arg(long, default_value_t = 200)]
    alpha: u64,
    /// Baseline RAM latency in cycles.
    #[arg(long, default_value_t = 50)]
    alpha0: u64,
    /// Cost of every vertex that is not a RAM access.
    #[arg(long, default_value_t = 1)]
    unit_cost: u64,
    /// Clock frequency in Hz.
    #[arg(long = "clock", default_value_t = 1_000_000_000)]
    clock_hz: u64,
    /// Decode unknown mnemonics heuristically instead of failing.
    #[arg(long)]
    permissive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum KeepDeps {
    Waw,
    War,
    All,
}

impl From<KeepDeps> for FalseDeps {
    fn from(k: KeepDeps) -> Self {
        match k {
            KeepDeps::Waw => FalseDeps::WAW,
            KeepDeps::War => FalseDeps {
                war: true,
                waw: false,
            },
            KeepDeps::All => FalseDeps::ALL,
        }
    }
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[arg(long, required_unless_present = "replay")]
    trace: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
    /// Data-movement sampling interval in cycles.
    #[arg(long)]
    tau: Option<u64>,
    /// Keep the explicit graph (bounded by --vertex-cap).
    #[arg(long)]
    materialize: bool,
    /// Run the greedy schedule and depth oracles; needs --materialize.
    #[arg(long)]
    oracle: bool,
    /// Keep false dependencies as edges; needs --materialize.
    #[arg(long, value_name = "KIND", num_args = 0..=1, default_missing_value = "waw")]
    keep_false_deps: Option<KeepDeps>,
    #[arg(long, default_value_t = DEFAULT_VERTEX_CAP)]
    vertex_cap: usize,
    /// Re-run with the configuration embedded in an earlier report.
    #[arg(long, value_name = "REPORT", conflicts_with = "trace")]
    replay: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// No progress output.
    #[arg(long)]
    quiet: bool,
}

#[derive(Debug, Args)]
struct RankArgs {
    #[arg(long, value_enum)]
    metric: MetricArg,
    #[command(flatten)]
    model: ModelArgs,
    /// Traces analyzed in parallel.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(required = true, value_name = "TRACE")]
    traces: Vec<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MetricArg {
    #[value(name = "lambda")]
    Lambda,
    #[value(name = "Lambda")]
    BigLambda,
}

#[derive(Debug, Args)]
struct MovementArgs {
    #[arg(long)]
    trace: PathBuf,
    #[arg(long)]
    tau: u64,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    quiet: bool,
}

#[derive(Debug, Args)]
struct DotArgs {
    #[arg(long)]
    trace: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_name = "KIND", num_args = 0..=1, default_missing_value = "waw")]
    keep_false_deps: Option<KeepDeps>,
    #[arg(long, default_value_t = DEFAULT_VERTEX_CAP)]
    vertex_cap: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, value_parser = parse_pattern)]
    pattern: Pattern,
    #[arg(long)]
    n: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_STRIDE)]
    stride: u64,
    #[arg(long, value_parser = parse_u64_auto, default_value_t = DEFAULT_BASE_ADDR)]
    base_addr: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_pattern(s: &str) -> Result<Pattern, String> {
    s.parse().map_err(|e: SynthError| e.to_string())
}

fn parse_u64_auto(s: &str) -> Result<u64, String> {
    match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    }
    .map_err(|e| e.to_string())
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Analysis(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Analysis(_) => 2,
        }
    }
}

fn analysis(context: impl std::fmt::Display, e: impl std::fmt::Display) -> CliError {
    CliError::Analysis(format!("{context}: {e}"))
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        CliError::Analysis(e.to_string())
    }
}

/// The effective configuration of an `analyze` run, embedded in its report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalyzeConfig {
    pub trace: PathBuf,
    /// `TOTAL:LINE:ASSOC` or `none`.
    pub cache: String,
    pub m: u32,
    pub alpha: u64,
    pub alpha0: u64,
    pub unit_cost: u64,
    pub clock_hz: u64,
    pub tau: Option<u64>,
    pub materialize: bool,
    pub oracle: bool,
    pub keep_false_deps: Option<String>,
    pub vertex_cap: usize,
    pub decode_mode: DecodeMode,
}

#[derive(Debug, Clone, Copy)]
struct Model {
    cache: CacheConfig,
    cost: CostModel,
    params: ModelParams,
    decode_mode: DecodeMode,
}

impl ModelArgs {
    fn resolve(&self) -> Result<Model, CliError> {
        let params = ModelParams {
            m: self.m,
            alpha: self.alpha,
            alpha0: self.alpha0,
            clock_hz: self.clock_hz,
        };
        params
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        if self.alpha == 0 {
            return Err(CliError::Usage("--alpha must be at least 1".into()));
        }
        Ok(Model {
            cache: if self.no_cache {
                CacheConfig::disabled()
            } else {
                self.cache
            },
            cost: CostModel {
                miss_cost: self.alpha,
                unit_cost: self.unit_cost,
            },
            params,
            decode_mode: if self.permissive {
                DecodeMode::Permissive
            } else {
                DecodeMode::Strict
            },
        })
    }
}

impl AnalyzeConfig {
    fn model(&self) -> Result<Model, CliError> {
        let cache = match self.cache.as_str() {
            "none" => CacheConfig::disabled(),
            spec => spec
                .parse()
                .map_err(|e: CacheConfigError| CliError::Usage(e.to_string()))?,
        };
        let params = ModelParams {
            m: self.m,
            alpha: self.alpha,
            alpha0: self.alpha0,
            clock_hz: self.clock_hz,
        };
        params
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(Model {
            cache,
            cost: CostModel {
                miss_cost: self.alpha,
                unit_cost: self.unit_cost,
            },
            params,
            decode_mode: self.decode_mode,
        })
    }

    fn false_deps(&self) -> Result<FalseDeps, CliError> {
        match self.keep_false_deps.as_deref() {
            None => Ok(FalseDeps::NONE),
            Some(k) => KeepDeps::from_str(k, false)
                .map(FalseDeps::from)
                .map_err(|e| CliError::Usage(format!("keep_false_deps: {e}"))),
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.keep_false_deps.is_some() && !self.materialize {
            return Err(CliError::Usage(
                "--keep-false-deps requires --materialize".into(),
            ));
        }
        if self.oracle && !self.materialize {
            return Err(CliError::Usage("--oracle requires --materialize".into()));
        }
        if self.tau == Some(0) {
            return Err(CliError::Usage("--tau must be positive".into()));
        }
        Ok(())
    }
}

/// Stream a trace file through the builder, reporting progress to `stderr`.
fn build_file(
    path: &Path,
    model: &Model,
    opts: BuildOptions,
    mut progress: Option<&mut dyn Write>,
) -> Result<(EdagSummary, Option<MaterializedEdag>), CliError> {
    let ctx = path.display();
    let reader = open_trace(path).map_err(|e| analysis(&ctx, e))?;
    let mut builder = EdagBuilder::new(model.cache, model.cost, opts)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let started = Instant::now();
    let mut next_report = PROGRESS_EVERY;
    for rec in reader {
        let rec = rec.map_err(|e| analysis(&ctx, e))?;
        builder.push(&rec).map_err(|e| analysis(&ctx, e))?;
        let n = builder.vertex_count();
        if n == next_report {
            next_report += PROGRESS_EVERY;
            if let Some(err) = progress.as_deref_mut() {
                let secs = started.elapsed().as_secs_f64().max(1e-9);
                let _ = writeln!(err, "edag: {n} lines ({:.0} lines/s)", n as f64 / secs);
            }
        }
    }
    let out = builder.finish();
    Ok((out.summary, out.graph))
}

#[derive(Serialize)]
struct CacheCounters {
    hits: u64,
    misses: u64,
    load_hits: u64,
    load_misses: u64,
    store_hits: u64,
    store_misses: u64,
}

#[derive(Serialize)]
struct SummaryJson<'a> {
    #[serde(rename = "T1")]
    t1: u64,
    #[serde(rename = "Tinf")]
    tinf: u64,
    vertex_count: u64,
    #[serde(rename = "W")]
    w: u64,
    #[serde(rename = "D")]
    d: u64,
    #[serde(rename = "C")]
    c: u64,
    layer_histogram: &'a [u64],
    bytes_total: u64,
    cache: CacheCounters,
    unknown_mnemonics: u64,
    atomic_records: u64,
    /// `[time_cycles, bytes]` rows when `tau` is set.
    movement: Option<Vec<(u64, u64)>>,
}

#[derive(Serialize)]
struct MetricsJson {
    lower: Exact,
    upper_layered: Exact,
    upper_closed: Exact,
    total_lower: Exact,
    total_upper: Exact,
    lambda: Exact,
    #[serde(rename = "Lambda")]
    big_lambda: Option<Exact>,
    parallelism: Option<Exact>,
    /// Theoretical maximum average bandwidth in GB/s.
    bandwidth_gbs: Option<Exact>,
}

#[derive(Serialize)]
struct OracleJson {
    /// Ready memory vertices served shallowest layer first, then by id.
    greedy_makespan: u64,
    /// Ready memory vertices served by id only.
    greedy_makespan_id_order: u64,
    peak_memory_issues: u32,
    memory_depth: u64,
}

#[derive(Serialize)]
struct Report<'a> {
    tool_version: &'static str,
    config: &'a AnalyzeConfig,
    summary: SummaryJson<'a>,
    metrics: MetricsJson,
    oracle: Option<OracleJson>,
    warnings: Vec<String>,
}

fn summary_json<'a>(s: &'a EdagSummary, clock_hz: u64) -> Result<SummaryJson<'a>, CliError> {
    let movement = match &s.movement {
        Some(bins) => Some(
            movement_series(bins, bins.tau, clock_hz)?
                .into_iter()
                .map(|r| (r.time_cycles, r.bytes))
                .collect(),
        ),
        None => None,
    };
    Ok(SummaryJson {
        t1: s.t1,
        tinf: s.tinf,
        vertex_count: s.vertex_count,
        w: s.w,
        d: s.d,
        c: s.c,
        layer_histogram: &s.layer_counts,
        bytes_total: s.bytes_total,
        cache: CacheCounters {
            hits: s.cache.hits(),
            misses: s.cache.misses(),
            load_hits: s.cache.load_hits,
            load_misses: s.cache.load_misses,
            store_hits: s.cache.store_hits,
            store_misses: s.cache.store_misses,
        },
        unknown_mnemonics: s.unknown_mnemonics,
        atomic_records: s.atomic_records,
        movement,
    })
}

fn metrics_json(r: &MetricsReport) -> MetricsJson {
    MetricsJson {
        lower: r.memory.lower,
        upper_layered: r.memory.layered_upper,
        upper_closed: r.memory.closed_upper,
        total_lower: r.total.lower,
        total_upper: r.total.upper,
        lambda: r.lambda,
        big_lambda: r.big_lambda,
        parallelism: r.parallelism,
        bandwidth_gbs: r.bandwidth_gbs,
    }
}

/// Run `analyze` for a fully resolved configuration and return the JSON report text.
pub fn analyze_report(
    cfg: &AnalyzeConfig,
    progress: Option<&mut dyn Write>,
) -> Result<String, String> {
    analyze_inner(cfg, progress).map_err(|e| e.to_string())
}

fn analyze_inner(
    cfg: &AnalyzeConfig,
    progress: Option<&mut dyn Write>,
) -> Result<String, CliError> {
    cfg.validate()?;
    let model = cfg.model()?;
    let opts = BuildOptions {
        materialize: cfg.materialize,
        false_deps: cfg.false_deps()?,
        tau: cfg.tau,
        vertex_cap: cfg.vertex_cap,
        decode_mode: model.decode_mode,
    };
    let (summary, graph) = build_file(&cfg.trace, &model, opts, progress)?;
    let report = compute_metrics(&summary, model.cache, model.cost, model.params)?;
    let oracle = match (&graph, cfg.oracle) {
        (Some(g), true) => {
            let p = &model.params;
            let run = |priority| {
                simulate_greedy_memory_by(
                    g,
                    p.m,
                    p.alpha,
                    model.cost.unit_cost,
                    cfg.vertex_cap,
                    priority,
                )
                .map_err(|e| analysis(cfg.trace.display(), e))
            };
            let sched = run(Priority::LayerThenId)?;
            let by_id = run(Priority::Id)?;
            let depth = brute_force_memory_depth(g, cfg.vertex_cap)
                .map_err(|e| analysis(cfg.trace.display(), e))?;
            Some(OracleJson {
                greedy_makespan: sched.makespan,
                greedy_makespan_id_order: by_id.makespan,
                peak_memory_issues: sched.peak_memory_issues,
                memory_depth: depth,
            })
        }
        _ => None,
    };
    let doc = Report {
        tool_version: TOOL_VERSION,
        config: cfg,
        summary: summary_json(&summary, model.params.clock_hz)?,
        metrics: metrics_json(&report),
        oracle,
        warnings: report.warnings.clone(),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("report serializes");
    text.push('\n');
    Ok(text)
}

fn open_out<'a>(
    path: &Option<PathBuf>,
    stdout: &'a mut dyn Write,
) -> Result<Box<dyn Write + 'a>, CliError> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(
            File::create(p).map_err(|e| analysis(p.display(), e))?,
        )),
        None => Box::new(stdout),
    })
}

fn cmd_analyze(
    args: AnalyzeArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    let cfg = match &args.replay {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| analysis(path.display(), e))?;
            let doc: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| analysis(path.display(), e))?;
            serde_json::from_value(doc["config"].clone()).map_err(|e| {
                CliError::Usage(format!("{}: bad embedded config: {e}", path.display()))
            })?
        }
        None => {
            let model = args.model.resolve()?;
            AnalyzeConfig {
                trace: args.trace.clone().expect("clap enforces --trace"),
                cache: model.cache.to_string(),
                m: model.params.m,
                alpha: model.params.alpha,
                alpha0: model.params.alpha0,
                unit_cost: model.cost.unit_cost,
                clock_hz: model.params.clock_hz,
                tau: args.tau,
                materialize: args.materialize,
                oracle: args.oracle,
                keep_false_deps: args.keep_false_deps.map(|k| {
                    k.to_possible_value()
                        .expect("no skipped variants")
                        .get_name()
                        .to_string()
                }),
                vertex_cap: args.vertex_cap,
                decode_mode: model.decode_mode,
            }
        }
    };
    cfg.validate()?;
    let progress: Option<&mut dyn Write> = if args.quiet { None } else { Some(&mut *stderr) };
    let text = analyze_inner(&cfg, progress)?;
    let doc: serde_json::Value = serde_json::from_str(&text).expect("own output parses");
    if let Some(ws) = doc["warnings"].as_array() {
        for w in ws {
            let _ = writeln!(stderr, "warning: {}", w.as_str().unwrap_or_default());
        }
    }
    let mut out = open_out(&args.out, stdout)?;
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| analysis("writing report", e))
}

fn trace_name(path: &Path) -> String {
    path.file_name().map_or_else(
        || path.display().to_string(),
        |n| n.to_string_lossy().into_owned(),
    )
}

fn cmd_rank(
    args: RankArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    if args.traces.len() < 2 {
        return Err(CliError::Usage("rank needs at least two traces".into()));
    }
    if args.jobs == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    let model = args.model.resolve()?;
    let opts = BuildOptions {
        decode_mode: model.decode_mode,
        ..BuildOptions::default()
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .map_err(|e| analysis("thread pool", e))?;
    let results: Vec<Result<(String, MetricsReport), CliError>> = pool.install(|| {
        args.traces
            .par_iter()
            .map(|path| {
                let (summary, _) = build_file(path, &model, opts, None)?;
                let report = compute_metrics(&summary, model.cache, model.cost, model.params)
                    .map_err(|e| analysis(path.display(), e))?;
                Ok((trace_name(path), report))
            })
            .collect()
    });
    let reports = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let metric = match args.metric {
        MetricArg::Lambda => RankMetric::Lambda,
        MetricArg::BigLambda => RankMetric::BigLambda,
    };
    let ranked = rank_traces(&reports, metric)?;

    let mut out = open_out(&args.out, stdout)?;
    {
        let mut csv = csv::Writer::from_writer(&mut out);
        let io_err = |e: csv::Error| analysis("writing ranking", e);
        csv.write_record(["name", "metric", "rank", "warnings"])
            .map_err(io_err)?;
        for r in &ranked {
            for w in &r.warnings {
                let _ = writeln!(stderr, "warning: {}: {w}", r.name);
            }
            let value = r
                .value
                .map_or_else(|| "undefined".to_string(), |v| decimal(v.0, 6));
            csv.write_record([
                r.name.as_str(),
                &value,
                &r.rank.to_string(),
                &r.warnings.join("; "),
            ])
            .map_err(io_err)?;
        }
        csv.flush().map_err(|e| analysis("writing ranking", e))?;
    }
    out.flush().map_err(|e| analysis("writing ranking", e))
}

fn cmd_movement(
    args: MovementArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    if args.tau == 0 {
        return Err(CliError::Usage("--tau must be positive".into()));
    }
    let model = args.model.resolve()?;
    let opts = BuildOptions {
        tau: Some(args.tau),
        decode_mode: model.decode_mode,
        ..BuildOptions::default()
    };
    let progress: Option<&mut dyn Write> = if args.quiet { None } else { Some(&mut *stderr) };
    let (summary, _) = build_file(&args.trace, &model, opts, progress)?;
    let bins = summary.movement.as_ref().expect("tau was set");
    let rows = movement_series(bins, args.tau, model.params.clock_hz)?;
    let mut out = open_out(&args.out, stdout)?;
    {
        let mut csv = csv::Writer::from_writer(&mut out);
        let io_err = |e: csv::Error| analysis("writing series", e);
        csv.write_record(["time_cycles", "bytes"]).map_err(io_err)?;
        for r in rows {
            csv.write_record([r.time_cycles.to_string(), r.bytes.to_string()])
                .map_err(io_err)?;
        }
        csv.flush().map_err(|e| analysis("writing series", e))?;
    }
    out.flush().map_err(|e| analysis("writing series", e))
}

fn cmd_export_dot(args: DotArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let model = args.model.resolve()?;
    let opts = BuildOptions {
        materialize: true,
        false_deps: args
            .keep_false_deps
            .map_or(FalseDeps::NONE, FalseDeps::from),
        vertex_cap: args.vertex_cap,
        decode_mode: model.decode_mode,
        tau: None,
    };
    let (_, graph) = build_file(&args.trace, &model, opts, None)?;
    let graph = graph.expect("materialized build");
    let mut out = open_out(&args.out, stdout)?;
    export_dot(&graph, &mut out, args.vertex_cap).map_err(|e| match e {
        DotError::CapExceeded(e) => analysis(args.trace.display(), e),
        DotError::Io(e) => analysis("writing DOT", e),
    })?;
    out.flush().map_err(|e| analysis("writing DOT", e))
}

fn cmd_synth(
    args: SynthArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    let spec = SynthSpec {
        pattern: args.pattern,
        n: args.n,
        seed: args.seed,
        base_addr: args.base_addr,
        stride: args.stride,
    };
    spec.validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let out = open_out(&args.out, stdout)?;
    let truth = write_trace(&spec, out).map_err(|e| analysis("writing trace", e))?;
    let _ = writeln!(
        stderr,
        "edag: {} lines, expected W = {}, D = {} without a cache",
        truth.lines, truth.memory_work, truth.memory_depth
    );
    Ok(())
}

/// Parse `args` (including the program name) and run one command.
/// Returns the process exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{text}");
                1
            } else {
                let _ = write!(stdout, "{text}");
                0
            };
        }
    };
    let result = match cli.command {
        Command::Analyze(a) => cmd_analyze(a, stdout, stderr),
        Command::Rank(a) => cmd_rank(a, stdout, stderr),
        Command::Movement(a) => cmd_movement(a, stdout, stderr),
        Command::ExportDot(a) => cmd_export_dot(a, stdout),
        Command::Synth(a) => cmd_synth(a, stdout, stderr),
        Command::Isa => stdout
            .write_all(isa_listing().as_bytes())
            .map_err(|e| analysis("writing listing", e)),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let kind = match e {
                CliError::Usage(_) => "usage error",
                CliError::Analysis(_) => "error",
            };
            let _ = writeln!(stderr, "{kind}: {e}");
            e.code()
        }
    }
}
