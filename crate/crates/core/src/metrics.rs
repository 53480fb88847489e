//! Deterministic cost accounting.
//!
//! Operations report logical probes (cell accesses) and cuckoo moves instead of
//! wall-clock time. [`AggregateStats`] collects them into per-operation-type
//! histograms, running maxima and a sampled queue-length trace.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

/// Default sampling interval of the queue-length trace, in recorded operations.
pub const DEFAULT_TRACE_EVERY: u64 = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpType {
    Insert,
    Lookup,
    Delete,
}

impl OpType {
    pub const ALL: [OpType; 3] = [OpType::Insert, OpType::Lookup, OpType::Delete];

    pub fn as_str(self) -> &'static str {
        match self {
            OpType::Insert => "insert",
            OpType::Lookup => "lookup",
            OpType::Delete => "delete",
        }
    }
}

/// Cost of a single operation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OpMetrics {
    /// Table cells and queue slots touched. A read-modify-write of one cell is one probe.
    pub probe_count: u32,
    /// Placements and evictions performed.
    pub move_count: u32,
    pub queue_len_after: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    Probes,
    Moves,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpTypeStats {
    pub count: u64,
    pub max_probes: u32,
    pub max_moves: u32,
    pub probes: BTreeMap<u32, u64>,
    pub moves: BTreeMap<u32, u64>,
}

impl OpTypeStats {
    fn record(&mut self, m: &OpMetrics) {
        self.count += 1;
        self.max_probes = self.max_probes.max(m.probe_count);
        self.max_moves = self.max_moves.max(m.move_count);
        *self.probes.entry(m.probe_count).or_default() += 1;
        *self.moves.entry(m.move_count).or_default() += 1;
    }

    fn merge(&mut self, other: &OpTypeStats) {
        self.count += other.count;
        self.max_probes = self.max_probes.max(other.max_probes);
        self.max_moves = self.max_moves.max(other.max_moves);
        for (&b, &c) in &other.probes {
            *self.probes.entry(b).or_default() += c;
        }
        for (&b, &c) in &other.moves {
            *self.moves.entry(b).or_default() += c;
        }
    }

    pub fn histogram(&self, metric: Metric) -> &BTreeMap<u32, u64> {
        match metric {
            Metric::Probes => &self.probes,
            Metric::Moves => &self.moves,
        }
    }

    pub fn max(&self, metric: Metric) -> u32 {
        match metric {
            Metric::Probes => self.max_probes,
            Metric::Moves => self.max_moves,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregateStats {
    pub insert: OpTypeStats,
    pub lookup: OpTypeStats,
    pub delete: OpTypeStats,
    pub max_queue_len: u32,
    pub trace_every: u64,
    /// Queue length after every `trace_every`-th recorded operation.
    pub queue_trace: Vec<u32>,
    pub rehash_count: u64,
    pub ops_recorded: u64,
}

impl Default for AggregateStats {
    fn default() -> Self {
        AggregateStats::with_trace_every(DEFAULT_TRACE_EVERY)
    }
}

impl AggregateStats {
    pub fn with_trace_every(trace_every: u64) -> Self {
        AggregateStats {
            insert: OpTypeStats::default(),
            lookup: OpTypeStats::default(),
            delete: OpTypeStats::default(),
            max_queue_len: 0,
            trace_every: trace_every.max(1),
            queue_trace: Vec::new(),
            rehash_count: 0,
            ops_recorded: 0,
        }
    }

    pub fn op(&self, op: OpType) -> &OpTypeStats {
        match op {
            OpType::Insert => &self.insert,
            OpType::Lookup => &self.lookup,
            OpType::Delete => &self.delete,
        }
    }

    fn op_mut(&mut self, op: OpType) -> &mut OpTypeStats {
        match op {
            OpType::Insert => &mut self.insert,
            OpType::Lookup => &mut self.lookup,
            OpType::Delete => &mut self.delete,
        }
    }

    pub fn record(&mut self, op: OpType, m: &OpMetrics) {
        self.op_mut(op).record(m);
        self.max_queue_len = self.max_queue_len.max(m.queue_len_after);
        if self.ops_recorded.is_multiple_of(self.trace_every) {
            self.queue_trace.push(m.queue_len_after);
        }
        self.ops_recorded += 1;
    }

    pub fn record_rehash(&mut self) {
        self.rehash_count += 1;
    }

    pub fn total_ops(&self) -> u64 {
        self.insert.count + self.lookup.count + self.delete.count
    }

    /// Combines stats from independent runs. Associative and commutative:
    /// histograms and counters add, maxima take the max, and queue traces
    /// combine position-wise by max.
    ///
    /// # Panics
    ///
    /// If the two sides sample the queue trace at different intervals.
    pub fn merge(&self, other: &AggregateStats) -> AggregateStats {
        assert_eq!(
            self.trace_every, other.trace_every,
            "cannot merge stats with different trace intervals"
        );
        let mut out = self.clone();
        for op in OpType::ALL {
            out.op_mut(op).merge(other.op(op));
        }
        out.max_queue_len = self.max_queue_len.max(other.max_queue_len);
        if other.queue_trace.len() > out.queue_trace.len() {
            out.queue_trace.resize(other.queue_trace.len(), 0);
        }
        for (dst, &src) in out.queue_trace.iter_mut().zip(&other.queue_trace) {
            *dst = (*dst).max(src);
        }
        out.rehash_count += other.rehash_count;
        out.ops_recorded += other.ops_recorded;
        out
    }

    pub fn export(&self) -> StatsReport {
        StatsReport {
            schema_version: STATS_SCHEMA_VERSION,
            stats: self.clone(),
        }
    }
}

pub const STATS_SCHEMA_VERSION: u32 = 1;

/// Serializable rendering of [`AggregateStats`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsReport {
    pub schema_version: u32,
    pub stats: AggregateStats,
}

impl StatsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("stats report serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    /// One row per (op type, bucket) of the chosen histogram, under an
    /// `op_type,bucket,count` header. Op types appear in insert, lookup, delete order
    /// and buckets ascend.
    pub fn to_csv(&self, metric: Metric) -> String {
        let mut out = String::from("op_type,bucket,count\n");
        for op in OpType::ALL {
            for (bucket, count) in self.stats.op(op).histogram(metric) {
                writeln!(out, "{},{},{}", op.as_str(), bucket, count).unwrap();
            }
        }
        out
    }
}
