//! The `mapfold` command.
//!
//! Three subcommands:
//!
//! * `run` — execute one benchmark, validate every iteration against its
//!   sequential oracle, append a CSV row, and print a one-line summary.
//! * `bench-all` — the full benchmark × flow × worker-count sweep into a
//!   single CSV.
//! * `analyze` — parse a reducer kernel file and report, step by step,
//!   whether a combiner can be derived from it.
//!
//! Exit codes: 0 success, 1 usage or I/O failure (for `analyze`: parse
//! failure), 2 oracle mismatch (for `analyze`: not combinable), 3
//! configuration error. The worker count defaults to `MAPFOLD_WORKERS`,
//! then to the number of available cores.

mod report;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use mapfold_core::bench::{self, wc, BenchId, BenchReport, SizeScale, ORACLE_REL_TOL};
use mapfold_core::kernel::{build_dep_graph, parse_kernel, EvalError};
use mapfold_core::optimizer::{analyze, print_triple, AnalysisResult, NotCombinableReason};
use mapfold_core::runtime::{
    run, FlowMode, FlowUsed, Job, OpaqueReducer, ReducerSpec, RunConfig, RunError,
    DEFAULT_CHUNK_BYTES,
};
use mapfold_core::Value;
use report::{append_rows, ReportRow};
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

const EXIT_OK: u8 = 0;
const EXIT_FAILURE: u8 = 1;
const EXIT_MISMATCH: u8 = 2;
const EXIT_NOT_COMBINABLE: u8 = 2;
const EXIT_CONFIG: u8 = 3;

#[derive(Parser)]
#[command(
    name = "mapfold",
    version,
    about = "Shared-memory map/reduce engine with a reducer-to-combiner optimizer"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one benchmark against its oracle and append a CSV report row
    Run(RunArgs),
    /// Sweep every benchmark x flow x worker count into one CSV
    BenchAll(BenchAllArgs),
    /// Analyze a reducer kernel file for combinability, step by step
    Analyze(AnalyzeArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Benchmark: hg, km, lr, mm, pc, sm, wc, or wc-opaque
    #[arg(value_parser = parse_target)]
    benchmark: BenchTarget,
    /// Flow selection: auto, reduce, or combine
    #[arg(long, default_value = "auto", value_parser = parse_flow)]
    flow: FlowMode,
    /// Worker threads (default: MAPFOLD_WORKERS, then available cores)
    #[arg(long)]
    workers: Option<usize>,
    /// Input size: tiny, small, or medium
    #[arg(long, default_value = "small", value_parser = SizeScale::from_str)]
    size: SizeScale,
    /// Seed for input generation
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Target bytes per map split
    #[arg(long, default_value_t = DEFAULT_CHUNK_BYTES)]
    chunk_bytes: usize,
    /// Warmup and measured iteration counts, comma separated
    #[arg(long, default_value = "5,10", value_parser = parse_iters)]
    iters: (u32, u32),
    /// CSV file to append report rows to
    #[arg(long, default_value = "mapfold.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct BenchAllArgs {
    /// Worker counts to sweep, comma separated
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
    workers_list: Vec<usize>,
    /// Input size: tiny, small, or medium
    #[arg(long, default_value = "small", value_parser = SizeScale::from_str)]
    size: SizeScale,
    /// Seed for input generation
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Target bytes per map split
    #[arg(long, default_value_t = DEFAULT_CHUNK_BYTES)]
    chunk_bytes: usize,
    /// Warmup and measured iteration counts, comma separated
    #[arg(long, default_value = "5,10", value_parser = parse_iters)]
    iters: (u32, u32),
    /// CSV file to append report rows to
    #[arg(long, default_value = "mapfold.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Path to a reducer kernel file
    kernel_file: PathBuf,
    /// Also print the derived initialize/combine/finalize triple
    #[arg(long)]
    print_triple: bool,
}

/// What `run` can execute: a built-in benchmark, or the word-count mapper
/// paired with an opaque host-function reducer the optimizer cannot see
/// into (so `--flow combine` must be rejected as a configuration error).
#[derive(Debug, Clone, Copy)]
enum BenchTarget {
    Builtin(BenchId),
    WcOpaque,
}

fn parse_target(s: &str) -> Result<BenchTarget, String> {
    if s.eq_ignore_ascii_case("wc-opaque") {
        return Ok(BenchTarget::WcOpaque);
    }
    s.parse::<BenchId>().map(BenchTarget::Builtin).map_err(|_| {
        format!("unknown benchmark {s:?}; expected hg, km, lr, mm, pc, sm, wc, or wc-opaque")
    })
}

fn parse_flow(s: &str) -> Result<FlowMode, String> {
    match s.to_ascii_lowercase().as_str() {
        "auto" => Ok(FlowMode::Auto),
        "reduce" => Ok(FlowMode::ForceReduce),
        "combine" => Ok(FlowMode::ForceCombine),
        other => Err(format!("unknown flow {other:?}; expected auto, reduce, or combine")),
    }
}

fn parse_iters(s: &str) -> Result<(u32, u32), String> {
    let (w, m) = s
        .split_once(',')
        .ok_or_else(|| format!("expected WARMUP,MEASURED (e.g. 5,10), got {s:?}"))?;
    let w = w.trim().parse().map_err(|_| format!("bad warmup count {w:?}"))?;
    let m = m.trim().parse().map_err(|_| format!("bad measured count {m:?}"))?;
    Ok((w, m))
}

fn main() -> ExitCode {
    // Die quietly on a closed pipe (`mapfold analyze … | head`) like other
    // line-oriented tools, instead of panicking mid-print.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_FAILURE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let code = match &cli.cmd {
        Cmd::Run(a) => exit_of(cmd_run(a)),
        Cmd::BenchAll(a) => exit_of(cmd_bench_all(a)),
        Cmd::Analyze(a) => cmd_analyze(a),
    };
    ExitCode::from(code)
}

/// Anything the measurement commands can fail with, carrying its exit code.
enum CmdError {
    Engine(RunError),
    Other(anyhow::Error),
}

impl From<RunError> for CmdError {
    fn from(e: RunError) -> Self {
        CmdError::Engine(e)
    }
}

impl From<anyhow::Error> for CmdError {
    fn from(e: anyhow::Error) -> Self {
        CmdError::Other(e)
    }
}

fn exit_of(r: Result<(), CmdError>) -> u8 {
    match r {
        Ok(()) => EXIT_OK,
        Err(CmdError::Engine(e)) => {
            eprintln!("error: {e}");
            match e {
                RunError::Config(_) => EXIT_CONFIG,
                RunError::OracleMismatch(_) => EXIT_MISMATCH,
                _ => EXIT_FAILURE,
            }
        }
        Err(CmdError::Other(e)) => {
            eprintln!("error: {e:#}");
            EXIT_FAILURE
        }
    }
}

/// Worker count: explicit flag, then MAPFOLD_WORKERS, then available cores.
/// A malformed environment value is a configuration error, not a usage one —
/// the flag never reached the parser.
fn resolve_workers(flag: Option<usize>) -> Result<usize, RunError> {
    if let Some(w) = flag {
        return Ok(w);
    }
    match std::env::var("MAPFOLD_WORKERS") {
        Ok(raw) => raw.trim().parse::<usize>().map_err(|_| {
            RunError::Config(format!(
                "MAPFOLD_WORKERS must be a positive integer, got {raw:?}"
            ))
        }),
        Err(std::env::VarError::NotPresent) => Ok(std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)),
        Err(e) => Err(RunError::Config(format!("MAPFOLD_WORKERS: {e}"))),
    }
}

fn ratio(numerator: u64, denominator: u64) -> f64 {
    numerator as f64 / denominator.max(1) as f64
}

/// A host-function version of the word-count reducer. Sums exactly like the
/// kernel, but the optimizer cannot analyze it, so the combine flow is
/// unavailable.
fn opaque_word_total() -> OpaqueReducer {
    Arc::new(|_key: &Value, values: &[Value]| {
        let mut total: i64 = 0;
        for v in values {
            match v {
                Value::Int(n) => total = total.wrapping_add(*n),
                other => {
                    return Err(EvalError::TypeMismatch {
                        op: "add",
                        detail: format!("expected Int count, got {other}"),
                    })
                }
            }
        }
        Ok(Value::Int(total))
    })
}

fn cmd_run(a: &RunArgs) -> Result<(), CmdError> {
    let workers = resolve_workers(a.workers)?;
    let (warmup_iters, measure_iters) = a.iters;
    let cfg = RunConfig {
        workers,
        chunk_bytes: a.chunk_bytes,
        seed: a.seed,
        warmup_iters,
        measure_iters,
    };

    let (name, report, baseline_ns) = match a.benchmark {
        BenchTarget::Builtin(id) => {
            let report = bench::run_benchmark(id, a.size, a.seed, &cfg, a.flow)?;
            let (base_results, base_ns) = bench::baseline_run(id, a.size, a.seed)?;
            bench::compare_results(&base_results, &report.results, ORACLE_REL_TOL)
                .map_err(RunError::OracleMismatch)?;
            (id.name().to_string(), report, base_ns)
        }
        BenchTarget::WcOpaque => {
            let input = wc::generate(a.size, a.seed);
            let want = wc::oracle(&input);
            let job = Job::new(wc::mapper(), ReducerSpec::Opaque(opaque_word_total()))
                .with_flow(a.flow);
            let report = bench::harness(&cfg, &want, || run(&job, &input, &cfg))?;
            let t0 = Instant::now();
            let base_results = mapfold_core::runtime::run_baseline_sequential(&job, &input)?;
            let base_ns = t0.elapsed().as_nanos() as u64;
            bench::compare_results(&base_results, &want, ORACLE_REL_TOL)
                .map_err(RunError::OracleMismatch)?;
            ("wc-opaque".to_string(), report, base_ns)
        }
    };

    let speedup_vs_seq = Some(ratio(baseline_ns, report.mean.total_ns));
    // A combine-flow row also reports its gain over the matched reduce-flow
    // configuration, which takes one extra measurement run.
    let speedup_combine_vs_reduce = match (a.benchmark, report.metrics.flow_used) {
        (BenchTarget::Builtin(id), FlowUsed::Combine) => {
            let rr = bench::run_benchmark(id, a.size, a.seed, &cfg, FlowMode::ForceReduce)?;
            Some(ratio(rr.mean.total_ns, report.mean.total_ns))
        }
        _ => None,
    };

    let row = row_of(
        &name,
        &report,
        workers,
        a.size,
        a.seed,
        speedup_vs_seq,
        speedup_combine_vs_reduce,
    );
    append_rows(&a.out, &[row])?;

    let mut line = format!(
        "{name}: flow={} workers={workers} size={} seed={} | mean total {:.3} ms over {} iters | {} keys, {} pairs, {} cells",
        report.metrics.flow_used,
        a.size,
        a.seed,
        report.mean.total_ns as f64 / 1e6,
        report.measured_iters,
        report.metrics.store.distinct_keys,
        report.metrics.store.pairs_emitted,
        report.metrics.store.cells_allocated,
    );
    if let Some(s) = speedup_vs_seq {
        line.push_str(&format!(" | vs sequential {s:.2}x"));
    }
    if let Some(s) = speedup_combine_vs_reduce {
        line.push_str(&format!(" | combine vs reduce {s:.2}x"));
    }
    println!("{line}");
    Ok(())
}

fn row_of(
    name: &str,
    report: &BenchReport,
    workers: usize,
    size: SizeScale,
    seed: u64,
    speedup_vs_seq: Option<f64>,
    speedup_combine_vs_reduce: Option<f64>,
) -> ReportRow {
    ReportRow {
        benchmark: name.to_string(),
        flow: report.metrics.flow_used.to_string(),
        workers,
        size: size.to_string(),
        seed,
        times: report.mean,
        pairs_emitted: report.metrics.store.pairs_emitted,
        cells_allocated: report.metrics.store.cells_allocated,
        distinct_keys: report.metrics.store.distinct_keys,
        speedup_vs_seq,
        speedup_combine_vs_reduce,
    }
}

fn cmd_bench_all(a: &BenchAllArgs) -> Result<(), CmdError> {
    let (warmup_iters, measure_iters) = a.iters;
    let mut rows = Vec::new();
    for id in BenchId::ALL {
        let (base_results, base_ns) = bench::baseline_run(id, a.size, a.seed)?;
        let mut baseline_checked = false;
        for &workers in &a.workers_list {
            let cfg = RunConfig {
                workers,
                chunk_bytes: a.chunk_bytes,
                seed: a.seed,
                warmup_iters,
                measure_iters,
            };
            let reduce = bench::run_benchmark(id, a.size, a.seed, &cfg, FlowMode::ForceReduce)?;
            let combine = bench::run_benchmark(id, a.size, a.seed, &cfg, FlowMode::ForceCombine)?;
            if !baseline_checked {
                bench::compare_results(&base_results, &reduce.results, ORACLE_REL_TOL)
                    .map_err(RunError::OracleMismatch)?;
                baseline_checked = true;
            }
            println!(
                "{} workers={workers}: reduce {:.3} ms, combine {:.3} ms ({:.2}x), vs sequential {:.2}x",
                id.name(),
                reduce.mean.total_ns as f64 / 1e6,
                combine.mean.total_ns as f64 / 1e6,
                ratio(reduce.mean.total_ns, combine.mean.total_ns),
                ratio(base_ns, combine.mean.total_ns),
            );
            rows.push(row_of(
                id.name(),
                &reduce,
                workers,
                a.size,
                a.seed,
                Some(ratio(base_ns, reduce.mean.total_ns)),
                None,
            ));
            rows.push(row_of(
                id.name(),
                &combine,
                workers,
                a.size,
                a.seed,
                Some(ratio(base_ns, combine.mean.total_ns)),
                Some(ratio(reduce.mean.total_ns, combine.mean.total_ns)),
            ));
        }
    }
    append_rows(&a.out, &rows)?;
    println!("wrote {} rows to {}", rows.len(), a.out.display());
    Ok(())
}

fn step_description(step: u8) -> &'static str {
    match step {
        2 => "reducer folds over the full value list",
        3 => "init block folds to constants",
        4 => "loop step reads only accumulators and the current value",
        5 => "emit reads only accumulators, the key, and constants",
        6 => "combiner triple assembled",
        _ => "",
    }
}

fn reason_text(r: NotCombinableReason) -> &'static str {
    match r {
        NotCombinableReason::NoFullIteration => {
            "no loop over the value list, and not a recognized idiom"
        }
        NotCombinableReason::ExternalInitDependence => {
            "the init block depends on the key or the values, so a fresh holder cannot be built from constants"
        }
        NotCombinableReason::CrossIterationDependence => {
            "a step depends on more than the accumulators, the current value, and constants"
        }
        NotCombinableReason::EmitInsideLoop => "emission happens inside the loop",
        NotCombinableReason::OpaqueReducer => "the reducer is an opaque host function",
    }
}

fn cmd_analyze(a: &AnalyzeArgs) -> u8 {
    let text = match std::fs::read_to_string(&a.kernel_file) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: reading {}: {e}", a.kernel_file.display());
            return EXIT_FAILURE;
        }
    };
    let kernel = match parse_kernel(&text) {
        Ok(k) => k,
        Err(e) => {
            eprintln!("parse error: {e}");
            return EXIT_FAILURE;
        }
    };
    let graph = build_dep_graph(&kernel);
    println!("kernel: {}", kernel.name);
    println!(
        "step 1: dependency graph built: {} nodes, {} edges",
        graph.nodes.len(),
        graph.edges.len()
    );
    let result = analyze(&kernel);
    match &result {
        AnalysisResult::Idiomatic(kind) => {
            println!("idiomatic reducer ({kind}): the engine folds it directly, no derived triple needed");
            println!("result: {result}");
            EXIT_OK
        }
        AnalysisResult::Combinable(t) => {
            for step in 2..=5 {
                println!("step {step}: {}: ok", step_description(step));
            }
            let holder: Vec<&str> = t.holder_layout.iter().map(|(v, _)| v.as_str()).collect();
            println!(
                "step 6: {} (holder: {})",
                step_description(6),
                holder.join(", ")
            );
            println!("result: {result}");
            if a.print_triple {
                println!("{}", print_triple(t));
            }
            EXIT_OK
        }
        AnalysisResult::NotCombinable { reason, step } => {
            for s in 2..*step {
                println!("step {s}: {}: ok", step_description(s));
            }
            println!(
                "step {step}: {}: FAILED — {}",
                step_description(*step),
                reason_text(*reason)
            );
            println!("result: {result}");
            EXIT_NOT_COMBINABLE
        }
    }
}
