//! Principal Component: the sufficient statistics for a covariance matrix
//! of the rows of a square integer matrix.
//!
//! Output keys come in two families, for a matrix of edge `n`:
//!
//! * `i * n + j` (for `i <= j`) — the cross-product sum Σₖ m[i,k]·m[j,k];
//! * `n² + i` — the row sum Σₖ m[i,k].
//!
//! Mean and covariance are affine in these: mean_i = rowSum_i / n and
//! cov(i,j) = crossSum(i,j)/n − mean_i·mean_j. Keeping the engine's output
//! at the integer-sum level keeps every comparison exact.
//!
//! One input item is a row pair `(i, j)`; its mapper emits each sum in two
//! column-block halves so the reducer always has partials to fold.

use crate::runtime::{InputItem, Mapper, RunError};
use crate::value::Value;
use rand::Rng;
use std::sync::Arc;

pub const KERNEL: &str = "\
reducer stat_total
let total = 0
for v in values:
  total = add(total, v)
emit total
";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PcItem {
    pub i: u32,
    pub j: u32,
    /// Matrix edge, carried so the item can report a nominal size.
    pub n: u32,
}

impl InputItem for PcItem {
    fn size_bytes(&self) -> usize {
        // The two rows this pair reads, nominally a byte per element.
        2 * self.n as usize
    }
}

#[derive(Clone)]
pub struct PcInput {
    pub n: usize,
    pub m: Arc<Vec<i64>>,
    pub items: Vec<PcItem>,
}

fn edge(scale: super::SizeScale) -> usize {
    match scale {
        super::SizeScale::Tiny => 32,
        super::SizeScale::Small => 128,
        super::SizeScale::Medium => 512,
    }
}

/// A random `n x n` matrix with entries in [-50, 50] and one item per
/// unordered row pair.
pub fn generate(scale: super::SizeScale, seed: u64) -> PcInput {
    let n = edge(scale);
    let mut rng = super::gen::rng(seed, 0);
    let m = Arc::new((0..n * n).map(|_| rng.gen_range(-50..=50)).collect::<Vec<i64>>());
    let mut items = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            items.push(PcItem {
                i: i as u32,
                j: j as u32,
                n: n as u32,
            });
        }
    }
    PcInput { n, m, items }
}

pub fn mapper(input: &PcInput) -> Mapper<PcItem> {
    let n = input.n;
    let m = Arc::clone(&input.m);
    Arc::new(move |split, sink| {
        let half = n / 2;
        for item in split {
            let (i, j) = (item.i as usize, item.j as usize);
            let cross_key = Value::Int((i * n + j) as i64);
            for (ks, ke) in [(0, half), (half, n)] {
                let mut cross = 0i64;
                for k in ks..ke {
                    cross += m[i * n + k] * m[j * n + k];
                }
                sink.emit(cross_key.clone(), Value::Int(cross))?;
            }
            if i == j {
                let row_key = Value::Int((n * n + i) as i64);
                for (ks, ke) in [(0, half), (half, n)] {
                    let mut row = 0i64;
                    for k in ks..ke {
                        row += m[i * n + k];
                    }
                    sink.emit(row_key.clone(), Value::Int(row))?;
                }
            }
        }
        Ok::<(), RunError>(())
    })
}

/// Reference sums by direct iteration.
pub fn oracle(input: &PcInput) -> Vec<(Value, Value)> {
    let n = input.n;
    let m = &input.m;
    let mut out = Vec::new();
    for i in 0..n {
        for j in i..n {
            let mut cross = 0i64;
            for k in 0..n {
                cross += m[i * n + k] * m[j * n + k];
            }
            out.push((Value::Int((i * n + j) as i64), Value::Int(cross)));
        }
    }
    for i in 0..n {
        let row: i64 = m[i * n..(i + 1) * n].iter().sum();
        out.push((Value::Int((n * n + i) as i64), Value::Int(row)));
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_input(n: usize, elems: Vec<i64>) -> PcInput {
        let mut items = Vec::new();
        for i in 0..n {
            for j in i..n {
                items.push(PcItem {
                    i: i as u32,
                    j: j as u32,
                    n: n as u32,
                });
            }
        }
        PcInput {
            n,
            m: Arc::new(elems),
            items,
        }
    }

    #[test]
    fn hand_checked_two_by_two() {
        // Rows r0 = [1, 2], r1 = [3, -1].
        let input = tiny_input(2, vec![1, 2, 3, -1]);
        let out = oracle(&input);
        let get = |key: i64| {
            out.iter()
                .find(|(k, _)| *k == Value::Int(key))
                .map(|(_, v)| v.clone())
                .unwrap()
        };
        assert_eq!(get(0), Value::Int(5)); // r0·r0 = 1 + 4
        assert_eq!(get(1), Value::Int(1)); // r0·r1 = 3 - 2
        assert_eq!(get(3), Value::Int(10)); // r1·r1 = 9 + 1
        assert_eq!(get(4), Value::Int(3)); // Σ r0
        assert_eq!(get(5), Value::Int(2)); // Σ r1
        // No (1,0) key: pairs are unordered, stored once with i <= j.
        assert_eq!(out.len(), 5);
    }

    #[test]
    fn item_count_is_triangular() {
        let input = generate(super::super::SizeScale::Tiny, 2);
        assert_eq!(input.items.len(), 32 * 33 / 2);
    }

    #[test]
    fn covariance_of_identical_rows_is_consistent() {
        // Both rows equal: cross sums all equal, covariance must be 0.
        let input = tiny_input(2, vec![4, 6, 4, 6]);
        let out = oracle(&input);
        let get = |key: i64| match out.iter().find(|(k, _)| *k == Value::Int(key)) {
            Some((_, Value::Int(v))) => *v as f64,
            _ => panic!("missing {key}"),
        };
        let n = 2.0;
        let mean0 = get(4) / n;
        let mean1 = get(5) / n;
        let cov01 = get(1) / n - mean0 * mean1;
        let var0 = get(0) / n - mean0 * mean0;
        assert_eq!(cov01, var0);
        assert_eq!(var0, 1.0); // values 4, 6 → variance 1
    }
}
