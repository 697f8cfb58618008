//! Seven classic map/reduce benchmark workloads at desk scale, each with a
//! deterministic input generator, a mapper, a reducer kernel, and an
//! independent sequential oracle.
//!
//! | id | workload | keys | reducer |
//! |----|----------|------|---------|
//! | hg | color histogram of an RGB raster | exactly 768 | integer sum |
//! | km | Lloyd's k-means over 3-d points | one per cluster | (sumVec, count) mean |
//! | lr | linear-regression statistics | 5 | float sum |
//! | mm | matrix multiply | n² cells | integer sum |
//! | pc | covariance statistics of matrix rows | n(n+1)/2 + n | integer sum |
//! | sm | string match against 4 targets | 4 | counting idiom |
//! | wc | word count of Zipf text | vocabulary | integer sum |
//!
//! The oracles share no aggregation code with the engine — they are plain
//! loops and hash maps — so agreement between [`run_benchmark`] results
//! and [`oracle_results`] genuinely cross-checks the runtime, the store,
//! the optimizer, and the kernel interpreter at once.
//!
//! Sizes are chosen so `tiny` stays under 64KB of input, `small` in the
//! low megabytes, and `medium` in the tens of megabytes.

pub mod gen;
pub mod hg;
pub mod io;
pub mod km;
pub mod lr;
pub mod mm;
pub mod pc;
pub mod sm;
pub mod wc;

use crate::kernel::{parse_kernel, ReducerKernel};
use crate::runtime::{
    run, run_baseline_sequential, FlowMode, Job, ReducerSpec, RunConfig, RunError, RunMetrics,
};
use crate::value::Value;
use std::sync::Arc;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BenchId {
    Hg,
    Km,
    Lr,
    Mm,
    Pc,
    Sm,
    Wc,
}

impl BenchId {
    pub const ALL: [BenchId; 7] = [
        BenchId::Hg,
        BenchId::Km,
        BenchId::Lr,
        BenchId::Mm,
        BenchId::Pc,
        BenchId::Sm,
        BenchId::Wc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BenchId::Hg => "hg",
            BenchId::Km => "km",
            BenchId::Lr => "lr",
            BenchId::Mm => "mm",
            BenchId::Pc => "pc",
            BenchId::Sm => "sm",
            BenchId::Wc => "wc",
        }
    }
}

impl std::fmt::Display for BenchId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for BenchId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "hg" => Ok(BenchId::Hg),
            "km" => Ok(BenchId::Km),
            "lr" => Ok(BenchId::Lr),
            "mm" => Ok(BenchId::Mm),
            "pc" => Ok(BenchId::Pc),
            "sm" => Ok(BenchId::Sm),
            "wc" => Ok(BenchId::Wc),
            other => Err(format!(
                "unknown benchmark `{other}` (expected one of hg, km, lr, mm, pc, sm, wc)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SizeScale {
    Tiny,
    Small,
    Medium,
}

impl SizeScale {
    pub const ALL: [SizeScale; 3] = [SizeScale::Tiny, SizeScale::Small, SizeScale::Medium];

    pub fn name(self) -> &'static str {
        match self {
            SizeScale::Tiny => "tiny",
            SizeScale::Small => "small",
            SizeScale::Medium => "medium",
        }
    }
}

impl std::fmt::Display for SizeScale {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SizeScale {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "tiny" => Ok(SizeScale::Tiny),
            "small" => Ok(SizeScale::Small),
            "medium" => Ok(SizeScale::Medium),
            other => Err(format!(
                "unknown size `{other}` (expected tiny, small, or medium)"
            )),
        }
    }
}

/// The reducer kernel source for a benchmark.
pub fn kernel_source(id: BenchId) -> &'static str {
    match id {
        BenchId::Hg => hg::KERNEL,
        BenchId::Km => km::KERNEL,
        BenchId::Lr => lr::KERNEL,
        BenchId::Mm => mm::KERNEL,
        BenchId::Pc => pc::KERNEL,
        BenchId::Sm => sm::KERNEL,
        BenchId::Wc => wc::KERNEL,
    }
}

pub fn reducer_kernel(id: BenchId) -> ReducerKernel {
    parse_kernel(kernel_source(id)).expect("embedded benchmark kernels parse")
}

/// How the optimizer is expected to classify each benchmark's reducer.
pub fn expected_analysis(id: BenchId) -> &'static str {
    match id {
        BenchId::Sm => "Idiomatic(Count)",
        _ => "Combinable",
    }
}

/// One benchmark execution: oracle-validated results plus timing.
#[derive(Debug, Clone)]
pub struct BenchReport {
    /// Final results (canonically sorted), identical every iteration.
    pub results: Vec<(Value, Value)>,
    /// Metrics of the last measured iteration (k-means: summed over its
    /// rounds).
    pub metrics: RunMetrics,
    /// Mean per-phase nanoseconds over the measured iterations.
    pub mean: PhaseTimes,
    /// Minimum per-phase nanoseconds over the measured iterations.
    pub min: PhaseTimes,
    pub measured_iters: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PhaseTimes {
    pub split_ns: u64,
    pub map_ns: u64,
    pub group_ns: u64,
    pub reduce_ns: u64,
    pub total_ns: u64,
}

impl PhaseTimes {
    pub fn of(m: &RunMetrics) -> Self {
        PhaseTimes {
            split_ns: m.t_split_ns,
            map_ns: m.t_map_ns,
            group_ns: m.t_group_ns,
            reduce_ns: m.t_reduce_ns,
            total_ns: m.t_total_ns,
        }
    }

    pub fn add(&mut self, other: &PhaseTimes) {
        self.split_ns += other.split_ns;
        self.map_ns += other.map_ns;
        self.group_ns += other.group_ns;
        self.reduce_ns += other.reduce_ns;
        self.total_ns += other.total_ns;
    }

    pub fn min_with(&mut self, other: &PhaseTimes) {
        self.split_ns = self.split_ns.min(other.split_ns);
        self.map_ns = self.map_ns.min(other.map_ns);
        self.group_ns = self.group_ns.min(other.group_ns);
        self.reduce_ns = self.reduce_ns.min(other.reduce_ns);
        self.total_ns = self.total_ns.min(other.total_ns);
    }

    pub fn div(&self, n: u32) -> PhaseTimes {
        let n = n as u64;
        PhaseTimes {
            split_ns: self.split_ns / n,
            map_ns: self.map_ns / n,
            group_ns: self.group_ns / n,
            reduce_ns: self.reduce_ns / n,
            total_ns: self.total_ns / n,
        }
    }
}

/// Compare engine results against a reference: keys exactly, Int values
/// exactly, Float/Vec values within `rel_tol` relative error.
pub fn compare_results(
    got: &[(Value, Value)],
    want: &[(Value, Value)],
    rel_tol: f64,
) -> Result<(), String> {
    if got.len() != want.len() {
        return Err(format!(
            "row count mismatch: got {}, expected {}",
            got.len(),
            want.len()
        ));
    }
    for (i, ((gk, gv), (wk, wv))) in got.iter().zip(want).enumerate() {
        if gk != wk {
            return Err(format!("row {i}: key {gk} != expected {wk}"));
        }
        let ok = match (gv, wv) {
            (Value::Int(a), Value::Int(b)) => a == b,
            _ => gv.approx_eq(wv, rel_tol),
        };
        if !ok {
            return Err(format!("row {i} (key {gk}): value {gv} != expected {wv}"));
        }
    }
    Ok(())
}

/// Tolerance used when validating benchmark results against oracles.
pub const ORACLE_REL_TOL: f64 = 1e-9;

/// Generate the benchmark input for `(scale, seed)` and compute the
/// oracle's answer for it.
pub fn oracle_results(id: BenchId, scale: SizeScale, seed: u64) -> Vec<(Value, Value)> {
    match id {
        BenchId::Hg => hg::oracle(&hg::generate(scale, seed)),
        BenchId::Km => km::oracle(&km::generate(scale, seed)),
        BenchId::Lr => lr::oracle(&lr::generate(scale, seed)),
        BenchId::Mm => mm::oracle(&mm::generate(scale, seed)),
        BenchId::Pc => pc::oracle(&pc::generate(scale, seed)),
        BenchId::Sm => sm::oracle(&sm::generate(scale, seed)),
        BenchId::Wc => wc::oracle(&wc::generate(scale, seed)),
    }
}

/// Warm up, then measure, validating results against the oracle on every
/// iteration (a mismatch aborts with [`RunError::OracleMismatch`]).
pub fn run_benchmark(
    id: BenchId,
    scale: SizeScale,
    seed: u64,
    cfg: &RunConfig,
    flow: FlowMode,
) -> Result<BenchReport, RunError> {
    match id {
        BenchId::Hg => {
            let input = hg::generate(scale, seed);
            let want = hg::oracle(&input);
            let job = Job::new(hg::mapper(), ReducerSpec::Kernel(reducer_kernel(id))).with_flow(flow);
            harness(cfg, &want, || run(&job, &input, cfg))
        }
        BenchId::Km => {
            let input = km::generate(scale, seed);
            let want = km::oracle(&input);
            harness(cfg, &want, || km::engine_rounds(&input, cfg, flow))
        }
        BenchId::Lr => {
            let input = lr::generate(scale, seed);
            let want = lr::oracle(&input);
            let job = Job::new(lr::mapper(), ReducerSpec::Kernel(reducer_kernel(id))).with_flow(flow);
            harness(cfg, &want, || run(&job, &input, cfg))
        }
        BenchId::Mm => {
            let input = mm::generate(scale, seed);
            let want = mm::oracle(&input);
            let job =
                Job::new(mm::mapper(&input), ReducerSpec::Kernel(reducer_kernel(id))).with_flow(flow);
            harness(cfg, &want, || run(&job, &input.items, cfg))
        }
        BenchId::Pc => {
            let input = pc::generate(scale, seed);
            let want = pc::oracle(&input);
            let job =
                Job::new(pc::mapper(&input), ReducerSpec::Kernel(reducer_kernel(id))).with_flow(flow);
            harness(cfg, &want, || run(&job, &input.items, cfg))
        }
        BenchId::Sm => {
            let input = sm::generate(scale, seed);
            let want = sm::oracle(&input);
            let targets = Arc::new(input.targets.clone());
            let job =
                Job::new(sm::mapper(targets), ReducerSpec::Kernel(reducer_kernel(id))).with_flow(flow);
            harness(cfg, &want, || run(&job, &input.words, cfg))
        }
        BenchId::Wc => {
            let input = wc::generate(scale, seed);
            let want = wc::oracle(&input);
            let job = Job::new(wc::mapper(), ReducerSpec::Kernel(reducer_kernel(id))).with_flow(flow);
            harness(cfg, &want, || run(&job, &input, cfg))
        }
    }
}

/// Drive one configuration through its warmup and measured iterations,
/// validating every iteration (warmups included) against `want` and
/// aggregating mean and minimum phase times. [`run_benchmark`] uses this
/// for the built-in workloads; callers with their own jobs (custom mappers
/// or opaque reducers) can reuse it for the same measurement discipline.
pub fn harness<F>(
    cfg: &RunConfig,
    want: &[(Value, Value)],
    mut run_once: F,
) -> Result<BenchReport, RunError>
where
    F: FnMut() -> Result<(Vec<(Value, Value)>, RunMetrics), RunError>,
{
    let measured = cfg.measure_iters.max(1);
    for _ in 0..cfg.warmup_iters {
        let (results, _) = run_once()?;
        compare_results(&results, want, ORACLE_REL_TOL).map_err(RunError::OracleMismatch)?;
    }
    let mut sum = PhaseTimes::default();
    let mut min: Option<PhaseTimes> = None;
    let mut last: Option<(Vec<(Value, Value)>, RunMetrics)> = None;
    for _ in 0..measured {
        let (results, metrics) = run_once()?;
        compare_results(&results, want, ORACLE_REL_TOL).map_err(RunError::OracleMismatch)?;
        let t = PhaseTimes::of(&metrics);
        sum.add(&t);
        match &mut min {
            Some(m) => m.min_with(&t),
            None => min = Some(t),
        }
        last = Some((results, metrics));
    }
    let (results, metrics) = last.expect("measured at least once");
    Ok(BenchReport {
        results,
        metrics,
        mean: sum.div(measured),
        min: min.expect("measured at least once"),
        measured_iters: measured,
    })
}

/// Time one single-threaded, list-mode execution of the benchmark; the
/// speedup denominator. Returns `(results, elapsed nanoseconds)`.
pub fn baseline_run(
    id: BenchId,
    scale: SizeScale,
    seed: u64,
) -> Result<(Vec<(Value, Value)>, u64), RunError> {
    // Input generation stays outside the timed region: engine metrics cover
    // split through reduce only, so the denominator must match.
    fn timed<I: crate::runtime::InputItem + Sync>(
        job: &Job<I>,
        input: &[I],
    ) -> Result<(Vec<(Value, Value)>, u64), RunError> {
        let t0 = Instant::now();
        let results = run_baseline_sequential(job, input)?;
        Ok((results, t0.elapsed().as_nanos() as u64))
    }
    match id {
        BenchId::Hg => {
            let input = hg::generate(scale, seed);
            let job = Job::new(hg::mapper(), ReducerSpec::Kernel(reducer_kernel(id)));
            timed(&job, &input)
        }
        BenchId::Km => {
            let input = km::generate(scale, seed);
            let t0 = Instant::now();
            let results = km::baseline(&input)?;
            Ok((results, t0.elapsed().as_nanos() as u64))
        }
        BenchId::Lr => {
            let input = lr::generate(scale, seed);
            let job = Job::new(lr::mapper(), ReducerSpec::Kernel(reducer_kernel(id)));
            timed(&job, &input)
        }
        BenchId::Mm => {
            let input = mm::generate(scale, seed);
            let job = Job::new(mm::mapper(&input), ReducerSpec::Kernel(reducer_kernel(id)));
            timed(&job, &input.items)
        }
        BenchId::Pc => {
            let input = pc::generate(scale, seed);
            let job = Job::new(pc::mapper(&input), ReducerSpec::Kernel(reducer_kernel(id)));
            timed(&job, &input.items)
        }
        BenchId::Sm => {
            let input = sm::generate(scale, seed);
            let targets = Arc::new(input.targets.clone());
            let job = Job::new(sm::mapper(targets), ReducerSpec::Kernel(reducer_kernel(id)));
            timed(&job, &input.words)
        }
        BenchId::Wc => {
            let input = wc::generate(scale, seed);
            let job = Job::new(wc::mapper(), ReducerSpec::Kernel(reducer_kernel(id)));
            timed(&job, &input)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::analyze;

    fn quick_cfg() -> RunConfig {
        RunConfig {
            workers: 2,
            warmup_iters: 0,
            measure_iters: 1,
            ..RunConfig::default()
        }
    }

    #[test]
    fn every_kernel_parses_and_analyzes_as_expected() {
        for id in BenchId::ALL {
            let k = reducer_kernel(id);
            let result = analyze(&k);
            assert_eq!(result.to_string(), expected_analysis(id), "benchmark {id}");
        }
    }

    #[test]
    fn every_benchmark_matches_its_oracle_at_tiny_scale() {
        for id in BenchId::ALL {
            for flow in [FlowMode::ForceReduce, FlowMode::Auto] {
                let report = run_benchmark(id, SizeScale::Tiny, 1, &quick_cfg(), flow)
                    .unwrap_or_else(|e| panic!("{id} {flow:?}: {e}"));
                assert!(!report.results.is_empty(), "{id} produced no results");
            }
        }
    }

    #[test]
    fn baseline_agrees_with_oracle_at_tiny_scale() {
        for id in BenchId::ALL {
            let (results, _) = baseline_run(id, SizeScale::Tiny, 2).unwrap();
            let want = oracle_results(id, SizeScale::Tiny, 2);
            compare_results(&results, &want, ORACLE_REL_TOL)
                .unwrap_or_else(|e| panic!("{id}: {e}"));
        }
    }

    #[test]
    fn ids_and_scales_round_trip_through_strings() {
        for id in BenchId::ALL {
            assert_eq!(id.name().parse::<BenchId>().unwrap(), id);
        }
        for scale in SizeScale::ALL {
            assert_eq!(scale.name().parse::<SizeScale>().unwrap(), scale);
        }
        assert!("xx".parse::<BenchId>().is_err());
        assert!("huge".parse::<SizeScale>().is_err());
    }

    #[test]
    fn compare_results_tolerances() {
        let a = vec![(Value::Int(0), Value::Float(1.0))];
        let close = vec![(Value::Int(0), Value::Float(1.0 + 1e-12))];
        let far = vec![(Value::Int(0), Value::Float(1.001))];
        assert!(compare_results(&a, &close, 1e-9).is_ok());
        assert!(compare_results(&a, &far, 1e-9).is_err());
        // Int comparison stays exact no matter the tolerance.
        let b = vec![(Value::Int(0), Value::Int(1_000_000))];
        let off = vec![(Value::Int(0), Value::Int(1_000_001))];
        assert!(compare_results(&b, &off, 1.0).is_err());
    }
}
