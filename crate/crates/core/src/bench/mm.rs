//! Matrix Multiply: C = A × B over square integer matrices.
//!
//! One input item is a (row, k-block) slice of the product's work: the
//! mapper computes, for every column j, the partial dot product of A's row
//! with B's column restricted to the item's k-range, and emits it under
//! key `row * n + j`. Each output cell therefore collects one partial per
//! k-block ([`K_BLOCKS`] of them) and the reducer sums them — the same
//! sum kernel as word count, just over larger operands.

use crate::runtime::{InputItem, Mapper, RunError};
use crate::value::Value;
use rand::Rng;
use std::sync::Arc;

pub const KERNEL: &str = "\
reducer cell_total
let total = 0
for v in values:
  total = add(total, v)
emit total
";

/// Partial dot products per output cell.
pub const K_BLOCKS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MmItem {
    pub row: u32,
    pub k_start: u32,
    pub k_len: u32,
}

impl InputItem for MmItem {
    fn size_bytes(&self) -> usize {
        // The slice of A this item reads.
        self.k_len as usize * 8
    }
}

#[derive(Clone)]
pub struct MmInput {
    pub n: usize,
    pub a: Arc<Vec<i64>>,
    pub b: Arc<Vec<i64>>,
    pub items: Vec<MmItem>,
}

fn edge(scale: super::SizeScale) -> usize {
    match scale {
        super::SizeScale::Tiny => 32,
        super::SizeScale::Small => 256,
        super::SizeScale::Medium => 768,
    }
}

/// Two random `n x n` matrices with entries in [-100, 100] plus the
/// (row, k-block) work items.
pub fn generate(scale: super::SizeScale, seed: u64) -> MmInput {
    let n = edge(scale);
    let mut rng = super::gen::rng(seed, 0);
    let mut fill = || -> Vec<i64> { (0..n * n).map(|_| rng.gen_range(-100..=100)).collect() };
    let a = Arc::new(fill());
    let b = Arc::new(fill());
    let mut items = Vec::with_capacity(n * K_BLOCKS);
    for row in 0..n {
        for blk in 0..K_BLOCKS {
            let k_start = blk * n / K_BLOCKS;
            let k_end = (blk + 1) * n / K_BLOCKS;
            items.push(MmItem {
                row: row as u32,
                k_start: k_start as u32,
                k_len: (k_end - k_start) as u32,
            });
        }
    }
    MmInput { n, a, b, items }
}

pub fn mapper(input: &MmInput) -> Mapper<MmItem> {
    let n = input.n;
    let a = Arc::clone(&input.a);
    let b = Arc::clone(&input.b);
    Arc::new(move |split, sink| {
        for item in split {
            let i = item.row as usize;
            let ks = item.k_start as usize;
            let ke = ks + item.k_len as usize;
            for j in 0..n {
                let mut partial = 0i64;
                for k in ks..ke {
                    partial += a[i * n + k] * b[k * n + j];
                }
                sink.emit(Value::Int((i * n + j) as i64), Value::Int(partial))?;
            }
        }
        Ok::<(), RunError>(())
    })
}

/// Reference product: the classic triple loop.
pub fn oracle(input: &MmInput) -> Vec<(Value, Value)> {
    let n = input.n;
    let (a, b) = (&input.a, &input.b);
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let mut sum = 0i64;
            for k in 0..n {
                sum += a[i * n + k] * b[k * n + j];
            }
            out.push((Value::Int((i * n + j) as i64), Value::Int(sum)));
        }
    }
    out
}
