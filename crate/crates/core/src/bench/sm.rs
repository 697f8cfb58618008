//! String Match: count how many candidate words contain each of four
//! target strings.
//!
//! The classic few-keys workload: exactly four keys (the targets), each
//! collecting one value per matching word. The reducer is the pure
//! counting idiom (`emit len(values)`), so the optimizer recognizes it
//! without deriving a triple and the combine flow keeps one integer per
//! target instead of a list of hits.
//!
//! Candidates are length-7 random words; targets are length-9, so a match
//! can only be a planted word (every [`PLANT_EVERY`]-th word is replaced
//! by a target, round-robin). That makes expected counts easy to reason
//! about and guarantees all four keys appear.

use crate::runtime::{Mapper, RunError};
use crate::value::Value;
use std::sync::Arc;

pub const KERNEL: &str = "\
reducer match_count
emit len(values)
";

pub const TARGETS: usize = 4;
pub const TARGET_LEN: usize = 9;
pub const CANDIDATE_LEN: usize = 7;
pub const PLANT_EVERY: usize = 256;

#[derive(Clone)]
pub struct SmInput {
    pub words: Vec<String>,
    pub targets: Vec<String>,
}

fn count(scale: super::SizeScale) -> usize {
    match scale {
        super::SizeScale::Tiny => 5_000,
        super::SizeScale::Small => 300_000,
        super::SizeScale::Medium => 4_000_000,
    }
}

pub fn generate(scale: super::SizeScale, seed: u64) -> SmInput {
    let mut target_rng = super::gen::rng(seed, 1);
    let mut targets = Vec::with_capacity(TARGETS);
    while targets.len() < TARGETS {
        let t = super::gen::random_word(&mut target_rng, TARGET_LEN);
        if !targets.contains(&t) {
            targets.push(t);
        }
    }
    let mut rng = super::gen::rng(seed, 0);
    let words = (0..count(scale))
        .map(|w| {
            if w % PLANT_EVERY == 0 {
                targets[(w / PLANT_EVERY) % TARGETS].clone()
            } else {
                super::gen::random_word(&mut rng, CANDIDATE_LEN)
            }
        })
        .collect();
    SmInput { words, targets }
}

pub fn mapper(targets: Arc<Vec<String>>) -> Mapper<String> {
    Arc::new(move |split, sink| {
        for word in split {
            for t in targets.iter() {
                if word.contains(t.as_str()) {
                    sink.emit(Value::Text(t.clone()), Value::Int(1))?;
                }
            }
        }
        Ok::<(), RunError>(())
    })
}

/// Reference counts with a hand-rolled substring scan.
pub fn oracle(input: &SmInput) -> Vec<(Value, Value)> {
    fn contains_sub(hay: &[u8], needle: &[u8]) -> bool {
        if needle.len() > hay.len() {
            return false;
        }
        (0..=hay.len() - needle.len()).any(|s| &hay[s..s + needle.len()] == needle)
    }
    let mut counts = vec![0i64; input.targets.len()];
    for word in &input.words {
        for (t, target) in input.targets.iter().enumerate() {
            if contains_sub(word.as_bytes(), target.as_bytes()) {
                counts[t] += 1;
            }
        }
    }
    let mut out: Vec<(Value, Value)> = input
        .targets
        .iter()
        .zip(&counts)
        .filter(|(_, n)| **n > 0)
        .map(|(t, n)| (Value::Text(t.clone()), Value::Int(*n)))
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plants_are_the_only_matches() {
        let input = generate(super::super::SizeScale::Tiny, 3);
        let out = oracle(&input);
        assert_eq!(out.len(), TARGETS);
        let total: i64 = out
            .iter()
            .map(|(_, v)| match v {
                Value::Int(n) => *n,
                _ => 0,
            })
            .sum();
        // 5000 words → plant at every index divisible by 256: 0, 256, ...
        assert_eq!(total, 5_000usize.div_ceil(PLANT_EVERY) as i64);
    }

    #[test]
    fn round_robin_spreads_plants_evenly() {
        let input = generate(super::super::SizeScale::Tiny, 8);
        let out = oracle(&input);
        let counts: Vec<i64> = out
            .iter()
            .map(|(_, v)| match v {
                Value::Int(n) => *n,
                _ => 0,
            })
            .collect();
        let (min, max) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
        assert!(max - min <= 1, "uneven plants: {counts:?}");
    }

    #[test]
    fn oracle_substring_scan_agrees_with_std() {
        let hay = "abcdefgh";
        for needle in ["abc", "fgh", "abcdefgh", "abcdefghi", "xyz", ""] {
            let manual = {
                let (h, n) = (hay.as_bytes(), needle.as_bytes());
                n.len() <= h.len()
                    && (0..=h.len() - n.len()).any(|s| &h[s..s + n.len()] == n)
            };
            assert_eq!(manual, hay.contains(needle), "needle {needle:?}");
        }
    }

    #[test]
    fn targets_are_distinct_and_long() {
        let input = generate(super::super::SizeScale::Tiny, 5);
        assert_eq!(input.targets.len(), TARGETS);
        for t in &input.targets {
            assert_eq!(t.len(), TARGET_LEN);
        }
        let mut dedup = input.targets.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(dedup.len(), TARGETS);
    }
}
