//! Linear Regression: accumulate the five sufficient statistics of a
//! least-squares line fit over noisy `(x, y)` samples.
//!
//! Each point contributes one value to each of five keys — Σx, Σy, Σx²,
//! Σxy, Σy² — and the reducer sums them; slope and intercept are then
//! closed-form functions of the five sums (see [`fit`]). Keys are small
//! integers ([`KEY_SX`] …) rather than strings so emitting five pairs per
//! point costs no allocation.
//!
//! The generator keeps x on a 1/16 grid and noise on a 1/256 grid, which
//! makes every emitted product — and every partial sum of them, at any
//! scale this module generates — exactly representable in `f64`. Sums are
//! therefore independent of addition order, so both flows, any worker
//! count, and the oracle agree bit-for-bit.

use crate::runtime::{Mapper, RunError};
use crate::value::Value;
use rand::Rng;
use std::sync::Arc;

pub const KERNEL: &str = "\
reducer stat_total
let total = 0.0
for v in values:
  total = add(total, v)
emit total
";

pub const KEY_SX: i64 = 0;
pub const KEY_SY: i64 = 1;
pub const KEY_SXX: i64 = 2;
pub const KEY_SXY: i64 = 3;
pub const KEY_SYY: i64 = 4;

const SLOPE: f64 = 0.5;
const INTERCEPT: f64 = 10.0;

fn count(scale: super::SizeScale) -> usize {
    match scale {
        super::SizeScale::Tiny => 4_096,
        super::SizeScale::Small => 250_000,
        super::SizeScale::Medium => 2_000_000,
    }
}

/// `(x, y)` samples of `y = x/2 + 10 + e` with grid-aligned x and noise.
pub fn generate(scale: super::SizeScale, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = super::gen::rng(seed, 0);
    (0..count(scale))
        .map(|_| {
            let x = rng.gen_range(0..=1024) as f64 / 16.0;
            let e = rng.gen_range(-32..=32) as f64 / 256.0;
            (x, SLOPE * x + INTERCEPT + e)
        })
        .collect()
}

pub fn mapper() -> Mapper<(f64, f64)> {
    Arc::new(|split, sink| {
        for (x, y) in split {
            sink.emit(Value::Int(KEY_SX), Value::Float(*x))?;
            sink.emit(Value::Int(KEY_SY), Value::Float(*y))?;
            sink.emit(Value::Int(KEY_SXX), Value::Float(x * x))?;
            sink.emit(Value::Int(KEY_SXY), Value::Float(x * y))?;
            sink.emit(Value::Int(KEY_SYY), Value::Float(y * y))?;
        }
        Ok::<(), RunError>(())
    })
}

/// Reference sums via five plain accumulators.
pub fn oracle(input: &[(f64, f64)]) -> Vec<(Value, Value)> {
    let (mut sx, mut sy, mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (x, y) in input {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
    }
    [
        (KEY_SX, sx),
        (KEY_SY, sy),
        (KEY_SXX, sxx),
        (KEY_SXY, sxy),
        (KEY_SYY, syy),
    ]
    .into_iter()
    .map(|(k, v)| (Value::Int(k), Value::Float(v)))
    .collect()
}

/// `(slope, intercept)` of the least-squares line from the five sums.
pub fn fit(n: usize, results: &[(Value, Value)]) -> (f64, f64) {
    let get = |key: i64| -> f64 {
        results
            .iter()
            .find_map(|(k, v)| match (k, v) {
                (Value::Int(i), Value::Float(f)) if *i == key => Some(*f),
                _ => None,
            })
            .unwrap_or_else(|| panic!("missing statistic {key}"))
    };
    let n = n as f64;
    let (sx, sy, sxx, sxy) = (get(KEY_SX), get(KEY_SY), get(KEY_SXX), get(KEY_SXY));
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    (slope, intercept)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_on_a_tiny_handmade_sample() {
        // Points (0, 1) and (2, 2): Σx=2 Σy=3 Σx²=4 Σxy=4 Σy²=5.
        let input = vec![(0.0, 1.0), (2.0, 2.0)];
        let out = oracle(&input);
        let expect = [2.0, 3.0, 4.0, 4.0, 5.0];
        for (i, (k, v)) in out.iter().enumerate() {
            assert_eq!(*k, Value::Int(i as i64));
            assert_eq!(*v, Value::Float(expect[i]));
        }
        // A two-point fit is exact: the line through them.
        let (m, b) = fit(2, &out);
        assert_eq!((m, b), (0.5, 1.0));
    }

    #[test]
    fn fit_recovers_the_generating_line() {
        let input = generate(super::super::SizeScale::Tiny, 42);
        let (m, b) = fit(input.len(), &oracle(&input));
        assert!((m - SLOPE).abs() < 0.01, "slope {m}");
        assert!((b - INTERCEPT).abs() < 0.05, "intercept {b}");
    }

    #[test]
    fn samples_sit_on_their_grids() {
        for (x, y) in generate(super::super::SizeScale::Tiny, 7) {
            assert_eq!((x * 16.0).fract(), 0.0);
            assert_eq!((y * 256.0).fract(), 0.0);
        }
    }
}
