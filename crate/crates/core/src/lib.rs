//! mapfold — a shared-memory map/reduce engine with an optimizer that turns
//! reducers into incremental combiners.
//!
//! A job maps input splits to `(key, value)` pairs and aggregates per key.
//! Aggregation runs in one of two flows:
//!
//! * **reduce** — every emitted value is collected into a per-key list, and
//!   a reduce pass folds each list after the map phase completes.
//! * **combine** — when the reducer (written in the small kernel language of
//!   [`kernel`]) can be analyzed into an `initialize`/`combine`/`finalize`
//!   triple, each emission folds directly into a per-key holder during the
//!   map phase; the reduce pass collapses to a per-key finalize. This keeps
//!   intermediate memory proportional to the number of distinct keys instead
//!   of the number of emitted pairs.
//!
//! The [`optimizer`] derives that triple automatically and reports precisely
//! why a kernel is not eligible. [`runtime`] drives the phases over a
//! work-stealing pool, [`store`] is the concurrent intermediate collector,
//! and [`bench`] hosts seven classic benchmark workloads with independent
//! oracles used throughout the test suite.

pub mod bench;
pub mod kernel;
pub mod optimizer;
pub mod pool;
pub mod runtime;
pub mod store;
pub mod value;

pub use value::{Value, ValueTag};
