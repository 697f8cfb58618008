//! Word Count: count word occurrences in synthetic Zipf-distributed text.
//!
//! The generator draws words from a fixed-size vocabulary with Zipf(1.0)
//! rank frequencies — a few very common words, a long tail — which is what
//! gives word counting its characteristic many-keys/skewed-values shape.
//! Input items are lines of text; the mapper uppercases each line and
//! emits `(word, 1)` for every token, where a token is a letter followed
//! by letters or apostrophes. The reducer sums the ones.

use super::gen;
use crate::runtime::{Mapper, RunError};
use crate::value::Value;
use rand::Rng;
use std::collections::HashMap;
use std::sync::Arc;

pub const KERNEL: &str = "\
reducer word_total
let total = 0
for v in values:
  total = add(total, v)
emit total
";

/// (total bytes, vocabulary size) per scale.
fn dimensions(scale: super::SizeScale) -> (usize, usize) {
    match scale {
        super::SizeScale::Tiny => (32 * 1024, 500),
        super::SizeScale::Small => (2 * 1024 * 1024, 5_000),
        super::SizeScale::Medium => (32 * 1024 * 1024, 20_000),
    }
}

/// Lines of Zipf-distributed words totalling roughly the scale's byte size.
pub fn generate(scale: super::SizeScale, seed: u64) -> Vec<String> {
    let (target_bytes, vocab) = dimensions(scale);
    let zipf = gen::Zipf::new(vocab, 1.0);
    let mut rng = gen::rng(seed, 0);
    let mut lines = Vec::new();
    let mut bytes = 0usize;
    while bytes < target_bytes {
        let mut line = String::new();
        let words = 8 + rng.gen_range(0..8);
        for i in 0..words {
            if i > 0 {
                line.push(' ');
            }
            line.push_str(&gen::vocab_word(zipf.sample(&mut rng)));
        }
        bytes += line.len() + 1;
        lines.push(line);
    }
    lines
}

/// Uppercase the split and emit `(token, 1)` per token.
pub fn mapper() -> Mapper<String> {
    Arc::new(|split, sink| {
        for line in split {
            let upper = line.to_ascii_uppercase();
            let bytes = upper.as_bytes();
            let mut i = 0;
            while i < bytes.len() {
                if bytes[i].is_ascii_uppercase() {
                    let start = i;
                    i += 1;
                    while i < bytes.len() && (bytes[i].is_ascii_uppercase() || bytes[i] == b'\'') {
                        i += 1;
                    }
                    sink.emit(
                        Value::Text(upper[start..i].to_string()),
                        Value::Int(1),
                    )?;
                } else {
                    i += 1;
                }
            }
        }
        Ok::<(), RunError>(())
    })
}

/// Reference word counts, computed with a hash map and its own tokenizer.
pub fn oracle(input: &[String]) -> Vec<(Value, Value)> {
    let mut counts: HashMap<String, i64> = HashMap::new();
    for line in input {
        let mut word = String::new();
        for c in line.chars().map(|c| c.to_ascii_uppercase()) {
            let extends = if word.is_empty() {
                c.is_ascii_uppercase()
            } else {
                c.is_ascii_uppercase() || c == '\''
            };
            if extends {
                word.push(c);
            } else if !word.is_empty() {
                *counts.entry(std::mem::take(&mut word)).or_insert(0) += 1;
            }
        }
        if !word.is_empty() {
            *counts.entry(word).or_insert(0) += 1;
        }
    }
    let mut out: Vec<(Value, Value)> = counts
        .into_iter()
        .map(|(w, n)| (Value::Text(w), Value::Int(n)))
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}
