//! Two-table cuckoo dictionary with a pending queue.
//!
//! [`CuckooDict::insert`] is the de-amortized insertion: the new element joins the
//! back of the queue and at most `move_budget` placements are performed, taking
//! elements from the queue front. [`CuckooDict::insert_amortized`] is the classical
//! insertion that follows the eviction path to the end; it is kept as the baseline.
//!
//! Every table cell and queue access goes through a [`ProbeCounter`], so the
//! reported [`OpMetrics`] are exact logical step counts:
//!
//! | operation            | probes                 | moves            |
//! |----------------------|------------------------|------------------|
//! | lookup               | [`LOOKUP_PROBES`] = 3  | 0                |
//! | delete               | [`DELETE_PROBES`] = 3  | 0                |
//! | insert (overwrite)   | 3                      | 0                |
//! | insert (new key)     | ≤ 2·L + 5              | ≤ L              |
//! | insert_amortized     | ≤ 3 + max_loop         | ≤ max_loop       |

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hashing::{reseed, HashSeed, TableHasher, TableId, GOLDEN};
use crate::metrics::OpMetrics;
use crate::queue::{PendingEntry, PendingQueue, QueueError};

pub const DEFAULT_EPSILON: f64 = 0.1;
pub const DEFAULT_MOVE_BUDGET: u32 = 3;
pub const DEFAULT_QUEUE_CONSTANT: f64 = 8.0;
pub const MAX_REHASH_ATTEMPTS: u32 = 16;

pub const LOOKUP_PROBES: u32 = 3;
pub const DELETE_PROBES: u32 = 3;

/// Upper bound on probes for a de-amortized insert with move budget `l`.
pub const fn insert_probe_bound(l: u32) -> u32 {
    2 * l + 5
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DictError {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("rehash failed after {attempts} attempts")]
    RehashFailed { attempts: u32 },
}

/// `ceil(x)`, except values within a relative 1e-9 of an integer snap to it, so
/// `(1 + 0.1) * 10` gives 11 rather than 12.
fn ceil_snapped(x: f64) -> usize {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r as usize
    } else {
        x.ceil() as usize
    }
}

fn default_move_budget() -> u32 {
    DEFAULT_MOVE_BUDGET
}

fn default_queue_constant() -> f64 {
    DEFAULT_QUEUE_CONSTANT
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Parameters {
    /// Maximum number of stored elements.
    pub capacity: usize,
    /// Table slack: each table has `ceil((1 + epsilon) * capacity)` slots.
    pub epsilon: f64,
    /// Cuckoo moves charged per insert (L).
    #[serde(default = "default_move_budget")]
    pub move_budget: u32,
    /// Queue threshold multiplier (C).
    #[serde(default = "default_queue_constant")]
    pub queue_constant: f64,
    #[serde(default)]
    pub seed: HashSeed,
}

impl Parameters {
    pub fn new(capacity: usize, epsilon: f64) -> Self {
        Parameters {
            capacity,
            epsilon,
            move_budget: DEFAULT_MOVE_BUDGET,
            queue_constant: DEFAULT_QUEUE_CONSTANT,
            seed: HashSeed::default(),
        }
    }

    pub fn with_move_budget(mut self, l: u32) -> Self {
        self.move_budget = l;
        self
    }

    pub fn with_queue_constant(mut self, c: f64) -> Self {
        self.queue_constant = c;
        self
    }

    pub fn with_seed(mut self, seed: HashSeed) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), DictError> {
        let bad = |msg: String| Err(DictError::InvalidParameters(msg));
        if self.capacity < 1 {
            return bad("capacity must be at least 1".into());
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if self.move_budget < 1 {
            return bad("move budget must be at least 1".into());
        }
        if !(self.queue_constant.is_finite() && self.queue_constant > 0.0) {
            return bad(format!(
                "queue constant must be positive, got {}",
                self.queue_constant
            ));
        }
        let slots = (1.0 + self.epsilon) * self.capacity as f64;
        if slots > (u32::MAX / 2) as f64 {
            return bad(format!("{slots} slots per table is too many"));
        }
        Ok(())
    }

    pub fn table_size(&self) -> usize {
        ceil_snapped((1.0 + self.epsilon) * self.capacity as f64)
    }

    pub fn total_slots(&self) -> usize {
        2 * self.table_size()
    }

    fn log2_capacity(&self) -> f64 {
        (self.capacity as f64).log2()
    }

    /// `ceil(C * log2(n))`, at least 1.
    pub fn queue_threshold(&self) -> usize {
        ceil_snapped(self.queue_constant * self.log2_capacity()).max(1)
    }

    /// Eviction path limit of the classical insertion, `ceil(3 * log2(n))`, at least 1.
    pub fn max_loop(&self) -> usize {
        ceil_snapped(3.0 * self.log2_capacity()).max(1)
    }

    /// `capacity / total_slots`.
    pub fn full_load_utilization(&self) -> f64 {
        self.capacity as f64 / self.total_slots() as f64
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
struct Slot {
    occupied: bool,
    key: u64,
    value: u64,
}

impl Slot {
    fn holds(&self, key: u64) -> bool {
        self.occupied && self.key == key
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Ok,
    NotFound,
    Full,
    RehashPerformed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpResult {
    pub outcome: Outcome,
    pub metrics: OpMetrics,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LookupResult {
    pub value: Option<u64>,
    pub metrics: OpMetrics,
}

/// Where a stored key currently lives.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Location {
    Table(TableId, usize),
    Queue,
}

/// The one place probes and moves are counted.
#[derive(Clone, Copy, Debug, Default)]
struct ProbeCounter {
    enabled: bool,
    probes: u32,
    moves: u32,
}

impl ProbeCounter {
    fn new(enabled: bool) -> Self {
        ProbeCounter {
            enabled,
            probes: 0,
            moves: 0,
        }
    }

    #[inline]
    fn probe(&mut self) {
        if self.enabled {
            self.probes += 1;
        }
    }

    #[inline]
    fn mv(&mut self) {
        if self.enabled {
            self.moves += 1;
        }
    }

    fn finish(&self, queue_len: usize) -> OpMetrics {
        if !self.enabled {
            return OpMetrics::default();
        }
        OpMetrics {
            probe_count: self.probes,
            move_count: self.moves,
            queue_len_after: queue_len as u32,
        }
    }
}

/// Worst metrics seen per operation type. Rehashing inserts are tracked apart.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorstCase {
    pub insert: OpMetrics,
    pub lookup: OpMetrics,
    pub delete: OpMetrics,
    pub rehashing_insert: OpMetrics,
}

fn raise(worst: &mut OpMetrics, m: &OpMetrics) {
    worst.probe_count = worst.probe_count.max(m.probe_count);
    worst.move_count = worst.move_count.max(m.move_count);
    worst.queue_len_after = worst.queue_len_after.max(m.queue_len_after);
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DictStats {
    pub count: usize,
    pub total_slots: usize,
    pub utilization: f64,
    pub queue_len: usize,
    pub max_queue_len: usize,
    pub rehash_count: u64,
    pub rehash_moves: u64,
    pub worst: WorstCase,
}

#[derive(Clone, Debug)]
pub struct CuckooDict {
    params: Parameters,
    table_size: usize,
    tables: [Vec<Slot>; 2],
    queue: PendingQueue,
    count: usize,
    seed: HashSeed,
    hasher: TableHasher,
    rehash_count: u64,
    rehash_moves: u64,
    failed_rehashes: u64,
    max_queue_len: usize,
    worst: WorstCase,
    metrics_enabled: bool,
    path: Vec<(TableId, usize)>,
}

impl CuckooDict {
    pub fn new(params: Parameters) -> Result<Self, DictError> {
        params.validate()?;
        let table_size = params.table_size();
        Ok(CuckooDict {
            table_size,
            tables: [
                vec![Slot::default(); table_size],
                vec![Slot::default(); table_size],
            ],
            queue: PendingQueue::new(params.queue_threshold()),
            count: 0,
            seed: params.seed,
            hasher: params.seed.hasher(),
            rehash_count: 0,
            rehash_moves: 0,
            failed_rehashes: 0,
            max_queue_len: 0,
            worst: WorstCase::default(),
            metrics_enabled: true,
            path: Vec::with_capacity(params.max_loop()),
            params,
        })
    }

    pub fn params(&self) -> &Parameters {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn table_size(&self) -> usize {
        self.table_size
    }

    pub fn seed(&self) -> &HashSeed {
        &self.seed
    }

    pub fn rehash_count(&self) -> u64 {
        self.rehash_count
    }

    pub fn queue(&self) -> &PendingQueue {
        &self.queue
    }

    pub fn metrics_enabled(&self) -> bool {
        self.metrics_enabled
    }

    /// With metrics off every operation reports zeroed [`OpMetrics`]. The data
    /// structure itself behaves identically.
    pub fn set_metrics_enabled(&mut self, enabled: bool) {
        self.metrics_enabled = enabled;
    }

    #[inline]
    fn home(&self, key: u64, table: TableId) -> usize {
        self.hasher.slot(key, table, self.table_size)
    }

    #[inline]
    fn cell(&self, c: &mut ProbeCounter, table: TableId, slot: usize) -> &Slot {
        c.probe();
        &self.tables[table.index()][slot]
    }

    #[inline]
    fn cell_mut(&mut self, c: &mut ProbeCounter, table: TableId, slot: usize) -> &mut Slot {
        c.probe();
        &mut self.tables[table.index()][slot]
    }

    fn finish(&mut self, c: &ProbeCounter) -> OpMetrics {
        self.max_queue_len = self.max_queue_len.max(self.queue.len());
        c.finish(self.queue.len())
    }

    /// Value for `key`, without metrics.
    pub fn get(&self, key: u64) -> Option<u64> {
        for table in TableId::BOTH {
            let slot = &self.tables[table.index()][self.home(key, table)];
            if slot.holds(key) {
                return Some(slot.value);
            }
        }
        self.queue.membership(key).map(|e| e.value)
    }

    pub fn contains(&self, key: u64) -> bool {
        self.get(key).is_some()
    }

    pub fn locate(&self, key: u64) -> Option<Location> {
        for table in TableId::BOTH {
            let slot = self.home(key, table);
            if self.tables[table.index()][slot].holds(key) {
                return Some(Location::Table(table, slot));
            }
        }
        self.queue.contains(key).then_some(Location::Queue)
    }

    /// Probes both home cells and the queue index, always all three.
    pub fn lookup(&mut self, key: u64) -> LookupResult {
        let mut c = ProbeCounter::new(self.metrics_enabled);
        let mut value = None;
        for table in TableId::BOTH {
            let slot = self.home(key, table);
            let cell = self.cell(&mut c, table, slot);
            if cell.holds(key) {
                value = Some(cell.value);
            }
        }
        c.probe();
        if let Some(e) = self.queue.membership(key) {
            value = Some(e.value);
        }
        let metrics = self.finish(&c);
        raise(&mut self.worst.lookup, &metrics);
        LookupResult { value, metrics }
    }

    /// Removes `key` from whichever of its three locations holds it.
    pub fn delete(&mut self, key: u64) -> OpResult {
        let mut c = ProbeCounter::new(self.metrics_enabled);
        let mut found = false;
        for table in TableId::BOTH {
            let slot = self.home(key, table);
            let cell = self.cell_mut(&mut c, table, slot);
            if cell.holds(key) {
                cell.occupied = false;
                found = true;
            }
        }
        c.probe();
        if self.queue.remove_key(key).is_some() {
            found = true;
        }
        if found {
            self.count -= 1;
        }
        let metrics = self.finish(&c);
        raise(&mut self.worst.delete, &metrics);
        OpResult {
            outcome: if found { Outcome::Ok } else { Outcome::NotFound },
            metrics,
        }
    }

    /// Overwrites `key` in place if it is stored anywhere. Three probes either way.
    fn overwrite(&mut self, c: &mut ProbeCounter, key: u64, value: u64) -> bool {
        let mut found = false;
        for table in TableId::BOTH {
            let slot = self.home(key, table);
            let cell = self.cell_mut(c, table, slot);
            if cell.holds(key) {
                cell.value = value;
                found = true;
            }
        }
        c.probe();
        if let Some(e) = self.queue.membership_mut(key) {
            e.value = value;
            found = true;
        }
        found
    }

    /// De-amortized insert. Work is capped at `move_budget` moves; unfinished
    /// placements wait in the queue. A queue overflow triggers [`Self::full_rehash`].
    ///
    /// On `Err(RehashFailed)` the dictionary is unchanged and `key` is not inserted.
    pub fn insert(&mut self, key: u64, value: u64) -> Result<OpResult, DictError> {
        let mut c = ProbeCounter::new(self.metrics_enabled);
        if self.overwrite(&mut c, key, value) {
            return Ok(self.insert_done(&c, Outcome::Ok));
        }
        if self.count == self.params.capacity {
            return Ok(self.insert_done(&c, Outcome::Full));
        }
        let entry = PendingEntry::new(key, value);
        c.probe();
        match self.queue.push_back(entry) {
            Ok(()) => {}
            Err(QueueError::Overflow) => {
                self.rehash_including(Some(entry))?;
                self.count += 1;
                return Ok(self.insert_done(&c, Outcome::RehashPerformed));
            }
            Err(QueueError::DuplicateKey(k)) => {
                unreachable!("key {k:#x} passed the membership check but is queued")
            }
        }
        self.count += 1;
        self.run_moves(&mut c);
        Ok(self.insert_done(&c, Outcome::Ok))
    }

    fn insert_done(&mut self, c: &ProbeCounter, outcome: Outcome) -> OpResult {
        let metrics = self.finish(c);
        match outcome {
            Outcome::RehashPerformed => raise(&mut self.worst.rehashing_insert, &metrics),
            _ => raise(&mut self.worst.insert, &metrics),
        }
        OpResult { outcome, metrics }
    }

    /// Spends up to `move_budget` moves placing queued elements, front first.
    fn run_moves(&mut self, c: &mut ProbeCounter) {
        let mut budget = self.params.move_budget;
        let mut hand: Option<PendingEntry> = None;
        while budget > 0 {
            let entry = match hand.take() {
                Some(e) => e,
                None => {
                    if self.queue.is_empty() {
                        break;
                    }
                    c.probe();
                    self.queue.pop_front().expect("queue is non-empty")
                }
            };
            let table = entry.preferred;
            let slot = self.home(entry.key, table);
            let cell = self.cell_mut(c, table, slot);
            let resident = *cell;
            *cell = Slot {
                occupied: true,
                key: entry.key,
                value: entry.value,
            };
            c.mv();
            budget -= 1;
            if resident.occupied {
                hand = Some(PendingEntry {
                    key: resident.key,
                    value: resident.value,
                    preferred: table.other(),
                });
            }
        }
        if let Some(e) = hand {
            c.probe();
            // One slot was freed by the pop that started this chain.
            self.queue
                .push_front(e)
                .expect("element in hand always fits back into the queue");
        }
    }

    /// Classical cuckoo insert: follow the eviction path up to `max_loop` steps,
    /// rehash if it is longer. The move count is the full path length.
    pub fn insert_amortized(&mut self, key: u64, value: u64) -> Result<OpResult, DictError> {
        let mut c = ProbeCounter::new(self.metrics_enabled);
        if self.overwrite(&mut c, key, value) {
            return Ok(self.insert_done(&c, Outcome::Ok));
        }
        if self.count == self.params.capacity {
            return Ok(self.insert_done(&c, Outcome::Full));
        }
        let mut path = std::mem::take(&mut self.path);
        path.clear();
        let mut hand = PendingEntry::new(key, value);
        let max_loop = self.params.max_loop();
        let mut placed = false;
        while path.len() < max_loop {
            let table = hand.preferred;
            let slot = self.home(hand.key, table);
            path.push((table, slot));
            let cell = self.cell_mut(&mut c, table, slot);
            let resident = std::mem::replace(
                cell,
                Slot {
                    occupied: true,
                    key: hand.key,
                    value: hand.value,
                },
            );
            c.mv();
            if !resident.occupied {
                placed = true;
                break;
            }
            hand = PendingEntry {
                key: resident.key,
                value: resident.value,
                preferred: table.other(),
            };
        }
        let outcome = if placed {
            self.count += 1;
            Outcome::Ok
        } else {
            match self.rehash_including(Some(hand)) {
                Ok(()) => {
                    self.count += 1;
                    Outcome::RehashPerformed
                }
                Err(err) => {
                    // Swaps are involutions: replaying them backwards restores the
                    // pre-insert tables and leaves the new element in hand.
                    for &(table, slot) in path.iter().rev() {
                        let cell = &mut self.tables[table.index()][slot];
                        let resident = *cell;
                        *cell = Slot {
                            occupied: true,
                            key: hand.key,
                            value: hand.value,
                        };
                        hand = PendingEntry {
                            key: resident.key,
                            value: resident.value,
                            preferred: hand.preferred,
                        };
                    }
                    debug_assert_eq!(hand.key, key);
                    self.path = path;
                    return Err(err);
                }
            }
        };
        self.path = path;
        Ok(self.insert_done(&c, outcome))
    }

    /// Rebuilds both tables under a fresh seed, emptying the queue.
    pub fn full_rehash(&mut self) -> Result<(), DictError> {
        self.rehash_including(None)
    }

    fn rehash_including(&mut self, extra: Option<PendingEntry>) -> Result<(), DictError> {
        let mut elements: Vec<(u64, u64)> = self.iter().collect();
        if let Some(e) = extra {
            elements.push((e.key, e.value));
        }
        let max_loop = self.params.max_loop();
        let mut seed = self.seed;
        for attempt in 1..=MAX_REHASH_ATTEMPTS {
            let entropy = (u128::from(self.failed_rehashes) << 96)
                ^ (u128::from(self.rehash_count) << 32)
                ^ u128::from(attempt)
                ^ (u128::from(GOLDEN) << 64);
            seed = reseed(&seed, entropy);
            let hasher = seed.hasher();
            if let Some((tables, moves)) = build_tables(&hasher, self.table_size, &elements, max_loop)
            {
                self.tables = tables;
                self.seed = seed;
                self.hasher = hasher;
                self.queue.clear();
                self.rehash_count += 1;
                self.rehash_moves += moves;
                return Ok(());
            }
        }
        self.failed_rehashes += 1;
        Err(DictError::RehashFailed {
            attempts: MAX_REHASH_ATTEMPTS,
        })
    }

    /// All stored `(key, value)` pairs: table 0, table 1, then the queue front to back.
    pub fn iter(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.tables
            .iter()
            .flat_map(|t| t.iter().filter(|s| s.occupied).map(|s| (s.key, s.value)))
            .chain(self.queue.iter().map(|e| (e.key, e.value)))
    }

    pub(crate) fn occupancy(&self, table: TableId) -> impl Iterator<Item = Option<(u64, u64)>> + '_ {
        self.tables[table.index()]
            .iter()
            .map(|s| s.occupied.then_some((s.key, s.value)))
    }

    pub fn snapshot_stats(&self) -> DictStats {
        let total_slots = 2 * self.table_size;
        DictStats {
            count: self.count,
            total_slots,
            utilization: self.count as f64 / total_slots as f64,
            queue_len: self.queue.len(),
            max_queue_len: self.max_queue_len,
            rehash_count: self.rehash_count,
            rehash_moves: self.rehash_moves,
            worst: self.worst,
        }
    }

    /// Verifies placement uniqueness, home-cell placement, the element count and
    /// the queue index. Linear time.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut seen = std::collections::HashSet::with_capacity(self.count);
        let mut stored = 0usize;
        for table in TableId::BOTH {
            for (slot, cell) in self.tables[table.index()].iter().enumerate() {
                if !cell.occupied {
                    continue;
                }
                stored += 1;
                let home = self.home(cell.key, table);
                if home != slot {
                    return Err(format!(
                        "key {:#x} sits in {table:?}[{slot}] but its home is {home}",
                        cell.key
                    ));
                }
                if !seen.insert(cell.key) {
                    return Err(format!("key {:#x} stored twice", cell.key));
                }
            }
        }
        self.queue.check_consistency()?;
        for e in self.queue.iter() {
            if !seen.insert(e.key) {
                return Err(format!("key {:#x} is both placed and queued", e.key));
            }
        }
        stored += self.queue.len();
        if stored != self.count {
            return Err(format!("count is {} but {stored} elements are stored", self.count));
        }
        if self.count > self.params.capacity {
            return Err(format!(
                "count {} exceeds capacity {}",
                self.count, self.params.capacity
            ));
        }
        Ok(())
    }
}

/// Places every element with the classical procedure. `None` if some path
/// exceeds `max_loop`. Returns the tables and the number of moves spent.
fn build_tables(
    hasher: &TableHasher,
    table_size: usize,
    elements: &[(u64, u64)],
    max_loop: usize,
) -> Option<([Vec<Slot>; 2], u64)> {
    let mut tables = [
        vec![Slot::default(); table_size],
        vec![Slot::default(); table_size],
    ];
    let mut moves = 0u64;
    for &(key, value) in elements {
        let mut hand = Slot {
            occupied: true,
            key,
            value,
        };
        let mut table = TableId::T0;
        let mut placed = false;
        for _ in 0..max_loop {
            let slot = hasher.slot(hand.key, table, table_size);
            hand = std::mem::replace(&mut tables[table.index()][slot], hand);
            moves += 1;
            if !hand.occupied {
                placed = true;
                break;
            }
            table = table.other();
        }
        if !placed {
            return None;
        }
    }
    Some((tables, moves))
}
