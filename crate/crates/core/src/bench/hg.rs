//! Histogram: 768-bucket color histogram of a synthetic 24-bit RGB raster.
//!
//! Keys are `channel * 256 + intensity` (0..=255 red, 256..=511 green,
//! 512..=767 blue). Input items are pixel rows; the mapper builds one
//! private 768-bucket histogram for its whole split and then emits every
//! bucket — zeros included — so each split contributes exactly 768 pairs
//! no matter how many pixels it covered. That per-split pre-aggregation
//! keeps emitted pairs proportional to splits, and the all-bucket emission
//! makes the key set exactly 768 for any input.

use crate::runtime::{Mapper, RunError};
use crate::value::Value;
use rand::RngCore;
use std::sync::Arc;

pub const KERNEL: &str = "\
reducer bucket_total
let total = 0
for v in values:
  total = add(total, v)
emit total
";

pub const BUCKETS: usize = 768;

/// Square image edge length per scale.
fn edge(scale: super::SizeScale) -> usize {
    match scale {
        super::SizeScale::Tiny => 128,
        super::SizeScale::Small => 1024,
        super::SizeScale::Medium => 4096,
    }
}

/// Uniformly random pixel rows, each `edge * 3` RGB bytes.
pub fn generate(scale: super::SizeScale, seed: u64) -> Vec<Vec<u8>> {
    let n = edge(scale);
    let mut rng = super::gen::rng(seed, 0);
    (0..n)
        .map(|_| {
            let mut row = vec![0u8; n * 3];
            rng.fill_bytes(&mut row);
            row
        })
        .collect()
}

pub fn mapper() -> Mapper<Vec<u8>> {
    Arc::new(|split, sink| {
        let mut hist = [0i64; BUCKETS];
        for row in split {
            for px in row.chunks_exact(3) {
                hist[px[0] as usize] += 1;
                hist[256 + px[1] as usize] += 1;
                hist[512 + px[2] as usize] += 1;
            }
        }
        for (bucket, count) in hist.iter().enumerate() {
            sink.emit(Value::Int(bucket as i64), Value::Int(*count))?;
        }
        Ok::<(), RunError>(())
    })
}

/// Reference histogram: direct per-pixel bucket counting.
pub fn oracle(input: &[Vec<u8>]) -> Vec<(Value, Value)> {
    let mut hist = [0i64; BUCKETS];
    for row in input {
        for (i, byte) in row.iter().enumerate() {
            hist[(i % 3) * 256 + *byte as usize] += 1;
        }
    }
    hist.iter()
        .enumerate()
        .map(|(bucket, count)| (Value::Int(bucket as i64), Value::Int(*count)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_black_image_masses_bucket_zero_of_each_channel() {
        let input = vec![vec![0u8; 4 * 3]; 4];
        let out = oracle(&input);
        assert_eq!(out.len(), BUCKETS);
        for (k, v) in out {
            let (Value::Int(bucket), Value::Int(count)) = (&k, &v) else {
                panic!("non-int row ({k}, {v})");
            };
            let expected = if bucket % 256 == 0 { 16 } else { 0 };
            assert_eq!(*count, expected, "bucket {bucket}");
        }
    }

    #[test]
    fn counts_sum_to_pixel_count_per_channel() {
        let input = generate(super::super::SizeScale::Tiny, 9);
        let out = oracle(&input);
        for ch in 0..3 {
            let total: i64 = out[ch * 256..(ch + 1) * 256]
                .iter()
                .map(|(_, v)| match v {
                    Value::Int(n) => *n,
                    _ => 0,
                })
                .sum();
            assert_eq!(total, 128 * 128);
        }
    }

    #[test]
    fn generator_is_deterministic() {
        assert_eq!(
            generate(super::super::SizeScale::Tiny, 5),
            generate(super::super::SizeScale::Tiny, 5)
        );
    }
}
