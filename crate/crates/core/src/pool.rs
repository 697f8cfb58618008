//! Work-stealing task pool for one batch of independent tasks.
//!
//! [`run_batch`] seeds tasks round-robin across per-worker FIFO deques,
//! spawns scoped worker threads, and lets idle workers steal from busy
//! ones so a slow task cannot strand the work queued behind it. The first
//! task error aborts the batch: remaining tasks are dropped unexecuted and
//! that error is returned.
//!
//! With `workers <= 1` (or a single task) everything runs inline on the
//! caller's thread in seed order — no threads, no deques — which is also
//! the path the engine uses for its sequential baseline.

use crossbeam::deque::{Steal, Stealer, Worker};
use parking_lot::Mutex;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PoolStats {
    /// Tasks that actually ran (equals the seeded count unless aborted).
    pub tasks_executed: u64,
    /// Tasks executed on a worker other than the one they were seeded on.
    pub steals: u64,
}

/// Run every task, in parallel across `workers` threads, returning the
/// first error if any task fails.
pub fn run_batch<T, E, F>(workers: usize, tasks: Vec<T>, f: F) -> Result<PoolStats, E>
where
    T: Send,
    E: Send,
    F: Fn(T) -> Result<(), E> + Sync,
{
    if workers <= 1 || tasks.len() <= 1 {
        let mut stats = PoolStats::default();
        for t in tasks {
            f(t)?;
            stats.tasks_executed += 1;
        }
        return Ok(stats);
    }

    let queues: Vec<Worker<T>> = (0..workers).map(|_| Worker::new_fifo()).collect();
    let stealers: Vec<Stealer<T>> = queues.iter().map(|q| q.stealer()).collect();
    for (i, t) in tasks.into_iter().enumerate() {
        queues[i % workers].push(t);
    }

    let executed = AtomicU64::new(0);
    let steals = AtomicU64::new(0);
    let abort = AtomicBool::new(false);
    let first_error: Mutex<Option<E>> = Mutex::new(None);

    let run_one = |task: T| {
        if let Err(e) = f(task) {
            let mut slot = first_error.lock();
            if slot.is_none() {
                *slot = Some(e);
            }
            abort.store(true, Ordering::Release);
        } else {
            executed.fetch_add(1, Ordering::Relaxed);
        }
    };

    std::thread::scope(|scope| {
        for (me, queue) in queues.into_iter().enumerate() {
            let stealers = &stealers;
            let steals = &steals;
            let abort = &abort;
            let run_one = &run_one;
            scope.spawn(move || loop {
                if abort.load(Ordering::Acquire) {
                    return;
                }
                if let Some(task) = queue.pop() {
                    run_one(task);
                    continue;
                }
                // Own queue empty: try every other worker once. A Retry
                // means a steal raced us, so the round is inconclusive and
                // we go again; Empty everywhere means the batch is drained.
                let mut contended = false;
                let mut stolen = None;
                for i in 1..stealers.len() {
                    match stealers[(me + i) % stealers.len()].steal() {
                        Steal::Success(task) => {
                            stolen = Some(task);
                            break;
                        }
                        Steal::Retry => contended = true,
                        Steal::Empty => {}
                    }
                }
                match stolen {
                    Some(task) => {
                        steals.fetch_add(1, Ordering::Relaxed);
                        run_one(task);
                    }
                    None if contended => std::hint::spin_loop(),
                    None => return,
                }
            });
        }
    });

    if let Some(e) = first_error.into_inner() {
        return Err(e);
    }
    Ok(PoolStats {
        tasks_executed: executed.load(Ordering::Relaxed),
        steals: steals.load(Ordering::Relaxed),
    })
}
