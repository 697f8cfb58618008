//! The engine: split → parallel map → group → parallel reduce/finalize.
//!
//! [`run`] executes a [`Job`] over an input slice. The input is split into
//! contiguous chunks of roughly `chunk_bytes`, one map task per split runs
//! on a work-stealing pool, and emitted pairs land in the intermediate
//! store. What happens next depends on the selected flow:
//!
//! * **Reduce** — the store held per-key value lists; a second pool batch
//!   runs the reducer over each list.
//! * **Combine** — emissions were already folded into per-key holders
//!   during the map phase; the second batch only finalizes each holder.
//!
//! Flow selection ([`select_flow`]) is automatic by default: the optimizer
//! must succeed *and* the derived combine step must use only
//! order-insensitive ops, because combining happens in value arrival order,
//! which is nondeterministic across threads. `ForceCombine` overrides the
//! safety gate (the caller vouches for the reducer) but still requires a
//! derivable combiner.
//!
//! Results are always returned sorted by key in canonical [`Value`] order,
//! so any two runs of the same job — any worker count, either flow — can be
//! compared with `==`.

use crate::kernel::{EvalDiag, EvalError, ReducerKernel};
use crate::optimizer::{analyze, Combiner};
use crate::pool;
use crate::store::{Accumulator, IntermediateStore, StoreError, StoreMode, StoreStats};
use crate::value::Value;
use parking_lot::Mutex;
use std::ops::Range;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Instant;

/// Default input split size: a desktop L1 data cache's worth of bytes.
pub const DEFAULT_CHUNK_BYTES: usize = 32 * 1024;

/// Anything splittable into byte-sized chunks for the map phase.
pub trait InputItem {
    /// Nominal size used only to pack items into splits; it does not have
    /// to match in-memory layout.
    fn size_bytes(&self) -> usize;
}

impl InputItem for String {
    fn size_bytes(&self) -> usize {
        self.len()
    }
}

impl InputItem for Vec<u8> {
    fn size_bytes(&self) -> usize {
        self.len()
    }
}

impl InputItem for u8 {
    fn size_bytes(&self) -> usize {
        1
    }
}

impl InputItem for i64 {
    fn size_bytes(&self) -> usize {
        8
    }
}

impl InputItem for f64 {
    fn size_bytes(&self) -> usize {
        8
    }
}

impl<const N: usize> InputItem for [f64; N] {
    fn size_bytes(&self) -> usize {
        N * 8
    }
}

impl<A: InputItem, B: InputItem> InputItem for (A, B) {
    fn size_bytes(&self) -> usize {
        self.0.size_bytes() + self.1.size_bytes()
    }
}

/// A reducer given to the engine: either a kernel the optimizer can look
/// inside, or an opaque host function (always executed via the reduce flow).
#[derive(Clone)]
pub enum ReducerSpec {
    Kernel(ReducerKernel),
    Opaque(OpaqueReducer),
}

pub type OpaqueReducer = Arc<dyn Fn(&Value, &[Value]) -> Result<Value, EvalError> + Send + Sync>;

impl std::fmt::Debug for ReducerSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ReducerSpec::Kernel(k) => write!(f, "Kernel({})", k.name),
            ReducerSpec::Opaque(_) => write!(f, "Opaque"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowMode {
    Auto,
    ForceReduce,
    ForceCombine,
}

/// What a run will actually do, as chosen by [`select_flow`].
#[derive(Debug, Clone)]
pub enum Flow {
    Reduce,
    Combine(Combiner),
}

/// Which flow a finished run used (the [`Flow`] minus its payload).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowUsed {
    Reduce,
    Combine,
}

impl std::fmt::Display for FlowUsed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FlowUsed::Reduce => "reduce",
            FlowUsed::Combine => "combine",
        })
    }
}

pub type Mapper<I> = Arc<dyn Fn(&[I], &mut EmitSink<'_>) -> Result<(), RunError> + Send + Sync>;

/// One map/reduce workload: how to map a split, how to reduce a key.
#[derive(Clone)]
pub struct Job<I> {
    pub mapper: Mapper<I>,
    pub reducer: ReducerSpec,
    pub flow_mode: FlowMode,
}

impl<I> Job<I> {
    pub fn new(mapper: Mapper<I>, reducer: ReducerSpec) -> Self {
        Job {
            mapper,
            reducer,
            flow_mode: FlowMode::Auto,
        }
    }

    pub fn with_flow(mut self, mode: FlowMode) -> Self {
        self.flow_mode = mode;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunConfig {
    pub workers: usize,
    pub chunk_bytes: usize,
    pub seed: u64,
    pub warmup_iters: u32,
    pub measure_iters: u32,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            workers: 1,
            chunk_bytes: DEFAULT_CHUNK_BYTES,
            seed: 0,
            warmup_iters: 5,
            measure_iters: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunMetrics {
    pub t_split_ns: u64,
    pub t_map_ns: u64,
    pub t_group_ns: u64,
    pub t_reduce_ns: u64,
    pub t_total_ns: u64,
    pub flow_used: FlowUsed,
    pub store: StoreStats,
    pub map_tasks: u64,
    pub reduce_keys: u64,
    pub steals: u64,
    pub int_overflows: u64,
    /// Wall time of a sequential baseline of the same workload, when one
    /// was measured (filled by harnesses, not by [`run`] itself).
    pub baseline_total_ns: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("reduce failed: {0}")]
    Eval(#[from] EvalError),
    #[error("mapper failed: {0}")]
    Mapper(String),
    #[error("results do not match the reference: {0}")]
    OracleMismatch(String),
}

/// Where mappers put their `(key, value)` pairs.
pub struct EmitSink<'a> {
    store: &'a IntermediateStore,
}

impl EmitSink<'_> {
    pub fn emit(&mut self, key: Value, value: Value) -> Result<(), RunError> {
        self.store.emit(key, value).map_err(RunError::from)
    }
}

/// Greedily pack items into contiguous splits of at most `chunk_bytes`
/// (single oversized items become singleton splits).
pub fn split_input<I: InputItem>(items: &[I], chunk_bytes: usize) -> Vec<Range<usize>> {
    let mut splits = Vec::new();
    let mut start = 0usize;
    let mut bytes = 0usize;
    for (i, item) in items.iter().enumerate() {
        let sz = item.size_bytes();
        if i > start && bytes.saturating_add(sz) > chunk_bytes {
            splits.push(start..i);
            start = i;
            bytes = 0;
        }
        bytes += sz;
    }
    if start < items.len() {
        splits.push(start..items.len());
    }
    splits
}

/// Decide the execution flow for a job's reducer and flow mode.
pub fn select_flow(reducer: &ReducerSpec, mode: FlowMode) -> Result<Flow, RunError> {
    let combiner = match reducer {
        ReducerSpec::Kernel(k) => Combiner::from_analysis(&analyze(k)),
        ReducerSpec::Opaque(_) => None,
    };
    match mode {
        FlowMode::ForceReduce => Ok(Flow::Reduce),
        FlowMode::ForceCombine => match combiner {
            Some(c) => Ok(Flow::Combine(c)),
            None => Err(RunError::Config(match reducer {
                ReducerSpec::Kernel(k) => {
                    format!("reducer `{}` is not combinable: {}", k.name, analyze(k))
                }
                ReducerSpec::Opaque(_) => {
                    "an opaque reducer cannot use the combine flow".to_string()
                }
            })),
        },
        FlowMode::Auto => Ok(match combiner {
            Some(c) if c.commutative_safe() => Flow::Combine(c),
            _ => Flow::Reduce,
        }),
    }
}

fn validate(cfg: &RunConfig) -> Result<(), RunError> {
    if cfg.workers < 1 {
        return Err(RunError::Config("workers must be >= 1".into()));
    }
    if cfg.chunk_bytes < 1 {
        return Err(RunError::Config("chunk_bytes must be >= 1".into()));
    }
    Ok(())
}

/// Keys per reduce/finalize task: at least 64, at most an even 4-way
/// spread per worker, so scheduling overhead stays bounded when keys are
/// numerous and parallelism is still available when they are not.
fn reduce_batch_size(keys: usize, workers: usize) -> usize {
    keys.div_ceil(workers.max(1) * 4).max(64)
}

fn finish_list(
    reducer: &ReducerSpec,
    key: &Value,
    values: &[Value],
    diag: &mut EvalDiag,
) -> Result<Value, RunError> {
    match reducer {
        ReducerSpec::Kernel(k) => Ok(interpret(k, key, values, diag)?),
        ReducerSpec::Opaque(f) => Ok(f(key, values)?),
    }
}

fn interpret(
    k: &ReducerKernel,
    key: &Value,
    values: &[Value],
    diag: &mut EvalDiag,
) -> Result<Value, EvalError> {
    crate::kernel::interpret_reduce_diag(k, key, values, diag).map(|(_, v)| v)
}

/// Execute the job over `input` and return `(sorted results, metrics)`.
pub fn run<I: InputItem + Sync>(
    job: &Job<I>,
    input: &[I],
    cfg: &RunConfig,
) -> Result<(Vec<(Value, Value)>, RunMetrics), RunError> {
    validate(cfg)?;
    let t_run = Instant::now();

    let t0 = Instant::now();
    let splits = split_input(input, cfg.chunk_bytes);
    let t_split_ns = t0.elapsed().as_nanos() as u64;

    let flow = select_flow(&job.reducer, job.flow_mode)?;
    let mode = match &flow {
        Flow::Reduce => StoreMode::List,
        Flow::Combine(c) => StoreMode::Holder(c.clone()),
    };
    let store = IntermediateStore::new(mode, IntermediateStore::shard_count_for(cfg.workers));

    // Map phase: one task per split, all emitting into the shared store.
    let t0 = Instant::now();
    let n_splits = splits.len();
    let map_stats = pool::run_batch(cfg.workers, splits, |range: Range<usize>| {
        let mut sink = EmitSink { store: &store };
        (job.mapper)(&input[range], &mut sink)
    })?;
    let t_map_ns = t0.elapsed().as_nanos() as u64;
    assert_eq!(
        map_stats.tasks_executed, n_splits as u64,
        "map work conservation"
    );

    // Group phase: close the store (the map barrier — anything emitting
    // after this fails) and take the canonically ordered entries.
    let t0 = Instant::now();
    let entries = store.snapshot();
    let store_stats = store.stats();
    let t_group_ns = t0.elapsed().as_nanos() as u64;

    if matches!(flow, Flow::Combine(_)) {
        assert_eq!(
            store_stats.cells_allocated, store_stats.distinct_keys,
            "combine flow allocates exactly one holder per key"
        );
    }

    // Reduce/finalize phase: batches of keys, one pool task per batch.
    let t0 = Instant::now();
    let n_keys = entries.len();
    let batch = reduce_batch_size(n_keys, cfg.workers);
    let mut tasks: Vec<(usize, Vec<(Value, Accumulator)>)> = Vec::new();
    let mut entries = entries.into_iter().peekable();
    while entries.peek().is_some() {
        let chunk: Vec<_> = entries.by_ref().take(batch).collect();
        tasks.push((tasks.len(), chunk));
    }
    let n_batches = tasks.len();
    let slots: Mutex<Vec<Option<Vec<(Value, Value)>>>> = Mutex::new(vec![None; n_batches]);
    let overflow = AtomicU64::new(store.int_overflows());
    let reduce_stats = pool::run_batch(cfg.workers, tasks, |(idx, chunk)| {
        let mut out = Vec::with_capacity(chunk.len());
        let mut diag = EvalDiag::default();
        for (key, acc) in chunk {
            let value = match acc {
                Accumulator::List(vals) => finish_list(&job.reducer, &key, &vals, &mut diag)?,
                Accumulator::Holder(h) => match &flow {
                    Flow::Combine(Combiner::Triple(t)) => t.finalize(&key, &h, &mut diag)?,
                    _ => unreachable!("holder accumulators only exist under a triple combiner"),
                },
                Accumulator::Count(n) => Value::Int(n),
                Accumulator::First(v) => v,
            };
            out.push((key, value));
        }
        overflow.fetch_add(diag.int_overflows, Ordering::Relaxed);
        slots.lock()[idx] = Some(out);
        Ok::<(), RunError>(())
    })?;
    let mut results = Vec::with_capacity(n_keys);
    for slot in slots.into_inner() {
        results.extend(slot.expect("every batch reports results"));
    }
    let t_reduce_ns = t0.elapsed().as_nanos() as u64;
    assert_eq!(results.len(), n_keys, "reduce work conservation");

    let metrics = RunMetrics {
        t_split_ns,
        t_map_ns,
        t_group_ns,
        t_reduce_ns,
        t_total_ns: t_run.elapsed().as_nanos() as u64,
        flow_used: match flow {
            Flow::Reduce => FlowUsed::Reduce,
            Flow::Combine(_) => FlowUsed::Combine,
        },
        store: store_stats,
        map_tasks: n_splits as u64,
        reduce_keys: n_keys as u64,
        steals: map_stats.steals + reduce_stats.steals,
        int_overflows: overflow.load(Ordering::Relaxed),
        baseline_total_ns: None,
    };
    Ok((results, metrics))
}

/// Single-threaded reduce-flow execution: the reference answer every other
/// configuration must reproduce, and the denominator for speedups.
pub fn run_baseline_sequential<I: InputItem + Sync>(
    job: &Job<I>,
    input: &[I],
) -> Result<Vec<(Value, Value)>, RunError> {
    let store = IntermediateStore::new(StoreMode::List, 1);
    for range in split_input(input, DEFAULT_CHUNK_BYTES) {
        let mut sink = EmitSink { store: &store };
        (job.mapper)(&input[range], &mut sink)?;
    }
    let mut diag = EvalDiag::default();
    let mut results = Vec::new();
    for (key, acc) in store.snapshot() {
        let vals = match acc {
            Accumulator::List(vals) => vals,
            _ => unreachable!("baseline uses list mode"),
        };
        let value = finish_list(&job.reducer, &key, &vals, &mut diag)?;
        results.push((key, value));
    }
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::parse_kernel;

    const SUM: &str = "reducer sum\nlet total = 0\nfor v in values:\n  total = add(total, v)\nemit total\n";
    const SUB: &str = "reducer deduct\nlet acc = 100\nfor v in values:\n  acc = sub(acc, v)\nemit acc\n";
    const COUNT: &str = "reducer count\nemit len(values)\n";

    fn kernel(src: &str) -> ReducerSpec {
        ReducerSpec::Kernel(parse_kernel(src).unwrap())
    }

    /// Uppercase-word mapper over string items, emitting `(word, 1)`.
    fn word_mapper() -> Mapper<String> {
        Arc::new(|split, sink| {
            for item in split {
                for w in item.split_whitespace() {
                    let w: String = w
                        .chars()
                        .filter(|c| c.is_ascii_alphabetic() || *c == '\'')
                        .collect();
                    if !w.is_empty() {
                        sink.emit(Value::Text(w.to_ascii_uppercase()), Value::Int(1))?;
                    }
                }
            }
            Ok(())
        })
    }

    fn wc_job() -> Job<String> {
        Job::new(word_mapper(), kernel(SUM))
    }

    fn sentence() -> Vec<String> {
        vec!["the cat sat on the mat".to_string()]
    }

    fn expected_counts() -> Vec<(Value, Value)> {
        [("CAT", 1), ("MAT", 1), ("ON", 1), ("SAT", 1), ("THE", 2)]
            .into_iter()
            .map(|(w, n)| (Value::Text(w.into()), Value::Int(n)))
            .collect()
    }

    #[test]
    fn splits_pack_greedily() {
        let items: Vec<u8> = vec![0; 10];
        let splits = split_input(&items, 4);
        assert_eq!(splits, vec![0..4, 4..8, 8..10]);
    }

    #[test]
    fn oversized_item_becomes_singleton_split() {
        let items = vec![vec![0u8; 1 << 20], vec![0u8; 3]];
        let splits = split_input(&items, 64 * 1024);
        assert_eq!(splits, vec![0..1, 1..2]);
    }

    #[test]
    fn empty_input_has_no_splits() {
        assert!(split_input(&Vec::<String>::new(), 4).is_empty());
    }

    #[test]
    fn auto_flow_selection() {
        assert!(matches!(
            select_flow(&kernel(SUM), FlowMode::Auto).unwrap(),
            Flow::Combine(Combiner::Triple(_))
        ));
        assert!(matches!(
            select_flow(&kernel(COUNT), FlowMode::Auto).unwrap(),
            Flow::Combine(Combiner::Count)
        ));
        // sub is structurally combinable but order-sensitive, so Auto
        // falls back to the reduce flow.
        assert!(matches!(
            select_flow(&kernel(SUB), FlowMode::Auto).unwrap(),
            Flow::Reduce
        ));
        let opaque = ReducerSpec::Opaque(Arc::new(|_: &Value, vs: &[Value]| {
            Ok(Value::Int(vs.len() as i64))
        }));
        assert!(matches!(
            select_flow(&opaque, FlowMode::Auto).unwrap(),
            Flow::Reduce
        ));
        // Forcing combine overrides the safety gate but not derivability.
        assert!(matches!(
            select_flow(&kernel(SUB), FlowMode::ForceCombine).unwrap(),
            Flow::Combine(_)
        ));
        assert!(matches!(
            select_flow(&opaque, FlowMode::ForceCombine),
            Err(RunError::Config(_))
        ));
    }

    #[test]
    fn word_count_sentence_both_flows() {
        let input = sentence();
        for mode in [FlowMode::ForceReduce, FlowMode::ForceCombine, FlowMode::Auto] {
            let job = wc_job().with_flow(mode);
            let (results, metrics) = run(&job, &input, &RunConfig::default()).unwrap();
            assert_eq!(results, expected_counts(), "flow mode {mode:?}");
            assert_eq!(metrics.store.pairs_emitted, 6);
            assert_eq!(metrics.store.distinct_keys, 5);
            assert_eq!(metrics.reduce_keys, 5);
        }
    }

    #[test]
    fn flows_differ_in_cells_not_results() {
        let input = vec!["a a a a b".to_string()];
        let job = wc_job().with_flow(FlowMode::ForceReduce);
        let (r1, m1) = run(&job, &input, &RunConfig::default()).unwrap();
        let job = wc_job().with_flow(FlowMode::ForceCombine);
        let (r2, m2) = run(&job, &input, &RunConfig::default()).unwrap();
        assert_eq!(r1, r2);
        assert_eq!(m1.store.cells_allocated, 5); // one per emitted value
        assert_eq!(m2.store.cells_allocated, 2); // one per distinct key
        assert_eq!(m1.flow_used, FlowUsed::Reduce);
        assert_eq!(m2.flow_used, FlowUsed::Combine);
    }

    #[test]
    fn worker_counts_agree() {
        let input: Vec<String> = (0..200)
            .map(|i| format!("w{} w{} shared", i % 17, i % 5))
            .collect();
        let baseline = run_baseline_sequential(&wc_job(), &input).unwrap();
        for workers in [1, 2, 8] {
            for mode in [FlowMode::ForceReduce, FlowMode::Auto] {
                let cfg = RunConfig {
                    workers,
                    chunk_bytes: 64, // force many splits
                    ..RunConfig::default()
                };
                let (results, metrics) = run(&wc_job().with_flow(mode), &input, &cfg).unwrap();
                assert_eq!(results, baseline, "workers={workers} mode={mode:?}");
                assert!(metrics.map_tasks > 1);
            }
        }
    }

    #[test]
    fn empty_input_runs_to_empty_result() {
        let (results, metrics) = run(&wc_job(), &[], &RunConfig::default()).unwrap();
        assert!(results.is_empty());
        assert_eq!(metrics.store, StoreStats::default());
        assert_eq!(metrics.map_tasks, 0);
        assert_eq!(metrics.reduce_keys, 0);
    }

    #[test]
    fn count_idiom_counts_in_both_flows() {
        let input = sentence();
        let job = Job::new(word_mapper(), kernel(COUNT));
        let (combined, m) = run(&job, &input, &RunConfig::default()).unwrap();
        assert_eq!(m.flow_used, FlowUsed::Combine);
        let (reduced, _) = run(
            &job.clone().with_flow(FlowMode::ForceReduce),
            &input,
            &RunConfig::default(),
        )
        .unwrap();
        assert_eq!(combined, reduced);
        assert_eq!(combined, expected_counts());
    }

    #[test]
    fn mapper_errors_abort_the_run() {
        let job: Job<String> = Job::new(
            Arc::new(|_split, _sink| Err(RunError::Mapper("bad split".into()))),
            kernel(SUM),
        );
        let err = run(&job, &sentence(), &RunConfig::default()).unwrap_err();
        assert_eq!(err, RunError::Mapper("bad split".into()));
    }

    #[test]
    fn combine_type_errors_surface_as_store_errors() {
        let job: Job<String> = Job::new(
            Arc::new(|_split, sink| {
                sink.emit(Value::Int(0), Value::Int(1))?;
                sink.emit(Value::Int(0), Value::Text("oops".into()))
            }),
            kernel(SUM),
        );
        let err = run(&job, &sentence(), &RunConfig::default()).unwrap_err();
        assert!(matches!(err, RunError::Store(StoreError::Eval(_))));
    }

    #[test]
    fn invalid_config_is_rejected() {
        let cfg = RunConfig {
            workers: 0,
            ..RunConfig::default()
        };
        assert!(matches!(
            run(&wc_job(), &sentence(), &cfg),
            Err(RunError::Config(_))
        ));
        let cfg = RunConfig {
            chunk_bytes: 0,
            ..RunConfig::default()
        };
        assert!(matches!(
            run(&wc_job(), &sentence(), &cfg),
            Err(RunError::Config(_))
        ));
    }

    #[test]
    fn overflow_diagnostics_reach_metrics() {
        let src = "reducer wrap\nlet t = 9223372036854775807\nfor v in values:\n  t = add(t, v)\nemit t\n";
        let job: Job<String> = Job::new(
            Arc::new(|_split, sink| sink.emit(Value::Int(0), Value::Int(1))),
            kernel(src),
        )
        .with_flow(FlowMode::ForceCombine);
        let (_, metrics) = run(&job, &sentence(), &RunConfig::default()).unwrap();
        assert_eq!(metrics.int_overflows, 1);
    }

    #[test]
    fn reduce_batch_size_bounds() {
        assert_eq!(reduce_batch_size(10, 4), 64); // floor dominates
        assert_eq!(reduce_batch_size(5000, 4), 313); // ceil(5000/16)
        assert_eq!(reduce_batch_size(0, 8), 64);
    }
}
