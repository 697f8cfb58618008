//! K-Means: a fixed number of Lloyd rounds over 3-d points.
//!
//! Each round is one engine run: the mapper assigns every point to its
//! nearest current center and emits `(cluster, point)`; the reducer folds
//! a `(sumVec, count)` pair and finalizes to `sum * (1/count)` — the
//! cluster mean — which becomes the next round's center. Clusters that
//! attract no points keep their previous center.
//!
//! All generated coordinates are multiples of 1/64, so coordinate sums are
//! exact in `f64` regardless of addition order; together with the fixed
//! two-step mean (`q = 1/count`, then scale), every flow and worker count
//! produces bit-identical centers each round, and so does the oracle.

use crate::runtime::{
    run, EmitSink, FlowMode, Job, Mapper, ReducerSpec, RunConfig, RunError, RunMetrics,
};
use crate::value::Value;
use rand::Rng;
use std::sync::Arc;

pub const KERNEL: &str = "\
reducer cluster_mean
let sumVec = vec(0.0, 0.0, 0.0)
let count = 0.0
for p in values:
  sumVec = vec_add(sumVec, p)
  count = add(count, 1.0)
emit vec_scale(sumVec, div(1.0, count))
";

pub const ROUNDS: usize = 5;

#[derive(Clone)]
pub struct KmInput {
    pub points: Vec<[f64; 3]>,
    pub initial_centers: Vec<[f64; 3]>,
}

/// (point count, cluster count) per scale.
fn dimensions(scale: super::SizeScale) -> (usize, usize) {
    match scale {
        super::SizeScale::Tiny => (1_000, 5),
        super::SizeScale::Small => (10_000, 10),
        super::SizeScale::Medium => (500_000, 100),
    }
}

/// Points scattered around `k` integer-coordinate cluster centers with
/// noise on a 1/64 grid; the first `k` points seed the initial centers.
pub fn generate(scale: super::SizeScale, seed: u64) -> KmInput {
    let (n, k) = dimensions(scale);
    let mut rng = super::gen::rng(seed, 0);
    let true_centers: Vec<[f64; 3]> = (0..k)
        .map(|_| {
            let x = rng.gen_range(0..256) as f64;
            let y = rng.gen_range(0..256) as f64;
            let z = rng.gen_range(0..256) as f64;
            [x, y, z]
        })
        .collect();
    let points: Vec<[f64; 3]> = (0..n)
        .map(|i| {
            let c = true_centers[i % k];
            let dx = rng.gen_range(-128..=128) as f64 / 64.0;
            let dy = rng.gen_range(-128..=128) as f64 / 64.0;
            let dz = rng.gen_range(-128..=128) as f64 / 64.0;
            [c[0] + dx, c[1] + dy, c[2] + dz]
        })
        .collect();
    let initial_centers = points[..k].to_vec();
    KmInput {
        points,
        initial_centers,
    }
}

/// Index of the nearest center by squared distance; ties keep the lowest
/// index. Both the mapper and the oracle assign with exactly this rule.
fn nearest(p: [f64; 3], centers: &[[f64; 3]]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, center) in centers.iter().enumerate() {
        let dx = p[0] - center[0];
        let dy = p[1] - center[1];
        let dz = p[2] - center[2];
        let d = dx * dx + dy * dy + dz * dz;
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

fn mapper(centers: Arc<Vec<[f64; 3]>>) -> Mapper<[f64; 3]> {
    Arc::new(move |split: &[[f64; 3]], sink: &mut EmitSink<'_>| {
        for p in split {
            let cluster = nearest(*p, &centers) as i64;
            sink.emit(
                Value::Int(cluster),
                Value::Vec(vec![
                    Value::Float(p[0]),
                    Value::Float(p[1]),
                    Value::Float(p[2]),
                ]),
            )?;
        }
        Ok(())
    })
}

fn value_to_point(v: &Value) -> [f64; 3] {
    let Value::Vec(coords) = v else {
        panic!("cluster mean must be a vector, got {v}");
    };
    std::array::from_fn(|d| match coords[d] {
        Value::Float(f) => f,
        ref other => panic!("coordinate must be a float, got {other}"),
    })
}

fn apply_round_results(centers: &mut [[f64; 3]], results: &[(Value, Value)]) {
    for (k, v) in results {
        let Value::Int(c) = k else {
            panic!("cluster key must be an int, got {k}")
        };
        centers[*c as usize] = value_to_point(v);
    }
}

fn add_metrics(total: &mut RunMetrics, m: &RunMetrics) {
    total.t_split_ns += m.t_split_ns;
    total.t_map_ns += m.t_map_ns;
    total.t_group_ns += m.t_group_ns;
    total.t_reduce_ns += m.t_reduce_ns;
    total.t_total_ns += m.t_total_ns;
    total.store.pairs_emitted += m.store.pairs_emitted;
    total.store.cells_allocated += m.store.cells_allocated;
    total.store.peak_stored_values = total.store.peak_stored_values.max(m.store.peak_stored_values);
    total.store.distinct_keys = total.store.distinct_keys.max(m.store.distinct_keys);
    total.map_tasks += m.map_tasks;
    total.reduce_keys += m.reduce_keys;
    total.steals += m.steals;
    total.int_overflows += m.int_overflows;
}

/// Run [`ROUNDS`] chained engine rounds; returns the final round's
/// `(cluster, mean)` rows and metrics summed over the rounds (store peaks
/// and distinct keys are per-round maxima, not sums).
pub fn engine_rounds(
    input: &KmInput,
    cfg: &RunConfig,
    flow: FlowMode,
) -> Result<(Vec<(Value, Value)>, RunMetrics), RunError> {
    let kernel = crate::kernel::parse_kernel(KERNEL).expect("embedded kernel parses");
    let mut centers = input.initial_centers.clone();
    let mut results = Vec::new();
    let mut total: Option<RunMetrics> = None;
    for _ in 0..ROUNDS {
        let job = Job::new(
            mapper(Arc::new(centers.clone())),
            ReducerSpec::Kernel(kernel.clone()),
        )
        .with_flow(flow);
        let (round_results, m) = run(&job, &input.points, cfg)?;
        apply_round_results(&mut centers, &round_results);
        results = round_results;
        match &mut total {
            Some(t) => add_metrics(t, &m),
            None => total = Some(m),
        }
    }
    Ok((results, total.expect("at least one round")))
}

/// Sequential single-threaded chain of [`ROUNDS`] baseline runs.
pub fn baseline(input: &KmInput) -> Result<Vec<(Value, Value)>, RunError> {
    let kernel = crate::kernel::parse_kernel(KERNEL).expect("embedded kernel parses");
    let mut centers = input.initial_centers.clone();
    let mut results = Vec::new();
    for _ in 0..ROUNDS {
        let job = Job::new(
            mapper(Arc::new(centers.clone())),
            ReducerSpec::Kernel(kernel.clone()),
        );
        let round_results = crate::runtime::run_baseline_sequential(&job, &input.points)?;
        apply_round_results(&mut centers, &round_results);
        results = round_results;
    }
    Ok(results)
}

/// Reference implementation: its own Lloyd loop with per-cluster
/// coordinate sums and the same two-step mean.
pub fn oracle(input: &KmInput) -> Vec<(Value, Value)> {
    let k = input.initial_centers.len();
    let mut centers = input.initial_centers.clone();
    let mut sums = vec![[0.0f64; 3]; k];
    let mut counts = vec![0u64; k];
    for _ in 0..ROUNDS {
        sums.iter_mut().for_each(|s| *s = [0.0; 3]);
        counts.iter_mut().for_each(|c| *c = 0);
        for p in &input.points {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (c, center) in centers.iter().enumerate() {
                let dx = p[0] - center[0];
                let dy = p[1] - center[1];
                let dz = p[2] - center[2];
                let d = dx * dx + dy * dy + dz * dz;
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            for d in 0..3 {
                sums[best][d] += p[d];
            }
            counts[best] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                let q = 1.0 / counts[c] as f64;
                centers[c] = [sums[c][0] * q, sums[c][1] * q, sums[c][2] * q];
            }
        }
    }
    let mut out = Vec::new();
    for c in 0..k {
        if counts[c] > 0 {
            out.push((
                Value::Int(c as i64),
                Value::Vec(centers[c].iter().map(|f| Value::Float(*f)).collect()),
            ));
        }
    }
    out
}
