//! Concurrent intermediate (key → accumulator) collector.
//!
//! The map phase emits into this store from many workers at once. What a
//! key accumulates depends on the mode:
//!
//! * **List** (reduce flow) — every value is appended to the key's list;
//!   stored cells grow with *emissions*.
//! * **Holder** (combine flow) — the first emission creates the key's
//!   holder via `initialize` and folds the value in; later emissions fold
//!   under the same lock; stored cells grow with *distinct keys*.
//!
//! Keys are sharded by hash; one mutex per shard gives per-key mutual
//! exclusion at shard granularity, which bounds contention without paying a
//! lock per key. The counters make the memory story observable:
//! `cells_allocated` counts stored values (List) or holders (Holder), so
//! the List/Holder ratio for one workload is exactly the allocation factor
//! the combine flow saves.

use crate::kernel::{EvalDiag, EvalError};
use crate::optimizer::{Combiner, Holder};
use crate::value::Value;
use parking_lot::Mutex;
use std::collections::hash_map::{DefaultHasher, Entry};
use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

#[derive(Debug, Clone)]
pub enum StoreMode {
    List,
    Holder(Combiner),
}

/// Per-key accumulated state, as returned by [`IntermediateStore::snapshot`].
#[derive(Debug, Clone)]
pub enum Accumulator {
    List(Vec<Value>),
    Holder(Holder),
    Count(i64),
    First(Value),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StoreStats {
    pub pairs_emitted: u64,
    pub cells_allocated: u64,
    pub peak_stored_values: u64,
    pub distinct_keys: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StoreError {
    #[error("emit after snapshot")]
    EmitAfterSnapshot,
    #[error("combine failed: {0}")]
    Eval(#[from] EvalError),
}

pub struct IntermediateStore {
    mode: StoreMode,
    shards: Vec<Mutex<HashMap<Value, Accumulator>>>,
    mask: u64,
    closed: AtomicBool,
    pairs_emitted: AtomicU64,
    cells_allocated: AtomicU64,
    stored_values: AtomicU64,
    peak_stored_values: AtomicU64,
    distinct_keys: AtomicU64,
    int_overflows: AtomicU64,
}

impl IntermediateStore {
    /// `shard_count` is rounded up to a power of two (minimum 1).
    pub fn new(mode: StoreMode, shard_count: usize) -> Self {
        let n = shard_count.max(1).next_power_of_two();
        IntermediateStore {
            mode,
            shards: (0..n).map(|_| Mutex::new(HashMap::new())).collect(),
            mask: (n - 1) as u64,
            closed: AtomicBool::new(false),
            pairs_emitted: AtomicU64::new(0),
            cells_allocated: AtomicU64::new(0),
            stored_values: AtomicU64::new(0),
            peak_stored_values: AtomicU64::new(0),
            distinct_keys: AtomicU64::new(0),
            int_overflows: AtomicU64::new(0),
        }
    }

    /// Default shard count for a worker count: 4 shards per worker.
    pub fn shard_count_for(workers: usize) -> usize {
        workers.max(1).saturating_mul(4)
    }

    pub fn shard_count(&self) -> usize {
        self.shards.len()
    }

    fn shard_of(&self, key: &Value) -> usize {
        let mut h = DefaultHasher::new();
        key.hash(&mut h);
        (h.finish() & self.mask) as usize
    }

    /// Record one emitted pair. Concurrent callers welcome; per-key updates
    /// are applied atomically under the key's shard lock.
    pub fn emit(&self, key: Value, value: Value) -> Result<(), StoreError> {
        if self.closed.load(Ordering::Acquire) {
            return Err(StoreError::EmitAfterSnapshot);
        }
        let shard = &self.shards[self.shard_of(&key)];
        let mut new_cell = false;
        let mut new_stored = false;
        let mut diag = EvalDiag::default();
        {
            let mut map = shard.lock();
            match &self.mode {
                StoreMode::List => {
                    map.entry(key)
                        .or_insert_with(|| {
                            new_cell = true;
                            Accumulator::List(Vec::new())
                        })
                        .push_list(value);
                    new_stored = true;
                }
                StoreMode::Holder(combiner) => match map.entry(key) {
                    Entry::Vacant(e) => {
                        let acc = match combiner {
                            Combiner::Triple(t) => {
                                let mut h = t.initialize();
                                t.combine(&mut h, &value, &mut diag)?;
                                Accumulator::Holder(h)
                            }
                            Combiner::Count => Accumulator::Count(1),
                            Combiner::First => Accumulator::First(value),
                        };
                        e.insert(acc);
                        new_cell = true;
                        new_stored = true;
                    }
                    Entry::Occupied(mut e) => match (combiner, e.get_mut()) {
                        (Combiner::Triple(t), Accumulator::Holder(h)) => {
                            t.combine(h, &value, &mut diag)?;
                        }
                        (Combiner::Count, Accumulator::Count(n)) => *n += 1,
                        (Combiner::First, Accumulator::First(_)) => {}
                        _ => unreachable!("accumulator shape is fixed per store"),
                    },
                },
            }
        }
        self.pairs_emitted.fetch_add(1, Ordering::Relaxed);
        if new_cell {
            self.distinct_keys.fetch_add(1, Ordering::Relaxed);
        }
        let list_mode = matches!(self.mode, StoreMode::List);
        if list_mode || new_cell {
            self.cells_allocated.fetch_add(1, Ordering::Relaxed);
        }
        if new_stored {
            let stored = self.stored_values.fetch_add(1, Ordering::Relaxed) + 1;
            self.peak_stored_values.fetch_max(stored, Ordering::Relaxed);
        }
        if diag.int_overflows > 0 {
            self.int_overflows
                .fetch_add(diag.int_overflows, Ordering::Relaxed);
        }
        Ok(())
    }

    /// Close the store and drain every entry, sorted by key in the
    /// canonical [`Value`] order. Call once, after all mappers have
    /// finished; emits racing past this point fail instead of being lost.
    pub fn snapshot(&self) -> Vec<(Value, Accumulator)> {
        self.closed.store(true, Ordering::Release);
        let mut entries: Vec<(Value, Accumulator)> = Vec::new();
        for shard in &self.shards {
            let mut map = shard.lock();
            entries.extend(std::mem::take(&mut *map));
        }
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        entries
    }

    /// Readable at any time; exact once the store is quiescent.
    pub fn stats(&self) -> StoreStats {
        StoreStats {
            pairs_emitted: self.pairs_emitted.load(Ordering::Relaxed),
            cells_allocated: self.cells_allocated.load(Ordering::Relaxed),
            peak_stored_values: self.peak_stored_values.load(Ordering::Relaxed),
            distinct_keys: self.distinct_keys.load(Ordering::Relaxed),
        }
    }

    /// Integer wrap-arounds observed while combining.
    pub fn int_overflows(&self) -> u64 {
        self.int_overflows.load(Ordering::Relaxed)
    }
}

impl Accumulator {
    fn push_list(&mut self, value: Value) {
        match self {
            Accumulator::List(vs) => vs.push(value),
            _ => unreachable!("list mode stores list accumulators"),
        }
    }
}
