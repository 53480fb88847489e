//! De-amortized cuckoo hashing.
//!
//! A fixed-capacity dictionary over `u64` keys and values that stores each key in
//! one of two tables or in a short pending queue, and bounds the number of cuckoo
//! moves any single insertion performs. Every operation reports its exact logical
//! cost ([`metrics::OpMetrics`]), and [`harness`] turns those costs into
//! reproducible experiments against a reference map and a classical cuckoo baseline.

pub mod dictionary;
pub mod harness;
pub mod hashing;
pub mod metrics;
pub mod queue;
pub mod snapshot;

pub use dictionary::{CuckooDict, DictError, OpResult, Outcome, Parameters};
pub use hashing::{HashSeed, TableId};
pub use metrics::{AggregateStats, OpMetrics, OpType, StatsReport};
pub use queue::{PendingEntry, PendingQueue};
pub use snapshot::DictSnapshot;
