//! Bounded pending-operation queue.
//!
//! Holds elements that have not yet been placed in a table. Storage is a slab of
//! `threshold` nodes linked into a deque, allocated once at construction, so
//! every operation (including removal from the middle) is O(1) and nothing
//! allocates afterwards. A small open-addressing index maps keys to nodes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hashing::{fmix64, reduce, TableId};

const NIL: u32 = u32::MAX;
const INDEX_SALT: u64 = 0x5be0_cd19_137e_2179;

/// Slots in the key index per unit of queue threshold.
pub const INDEX_LOAD_INVERSE: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PendingEntry {
    pub key: u64,
    pub value: u64,
    /// Table the entry tries next.
    pub preferred: TableId,
}

impl PendingEntry {
    pub fn new(key: u64, value: u64) -> Self {
        PendingEntry {
            key,
            value,
            preferred: TableId::T0,
        }
    }
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum QueueError {
    /// Pushing would exceed the threshold; the queue is unchanged.
    #[error("pending queue overflow")]
    Overflow,
    /// The key is already queued. This is a caller bug.
    #[error("key {0:#x} is already queued")]
    DuplicateKey(u64),
}

#[derive(Clone, Debug)]
struct Node {
    entry: PendingEntry,
    prev: u32,
    next: u32,
}

/// Key -> node id, linear probing with backward-shift deletion.
#[derive(Clone, Debug)]
struct KeyIndex {
    keys: Vec<u64>,
    nodes: Vec<u32>,
}

impl KeyIndex {
    fn with_slots(slots: usize) -> Self {
        KeyIndex {
            keys: vec![0; slots],
            nodes: vec![NIL; slots],
        }
    }

    #[inline]
    fn home(&self, key: u64) -> usize {
        reduce(fmix64(key ^ INDEX_SALT), self.keys.len())
    }

    #[inline]
    fn next(&self, i: usize) -> usize {
        if i + 1 == self.keys.len() {
            0
        } else {
            i + 1
        }
    }

    fn find(&self, key: u64) -> Option<usize> {
        let mut i = self.home(key);
        loop {
            if self.nodes[i] == NIL {
                return None;
            }
            if self.keys[i] == key {
                return Some(i);
            }
            i = self.next(i);
        }
    }

    fn get(&self, key: u64) -> Option<u32> {
        self.find(key).map(|i| self.nodes[i])
    }

    /// Caller guarantees the key is absent and a free slot exists.
    fn insert(&mut self, key: u64, node: u32) {
        let mut i = self.home(key);
        while self.nodes[i] != NIL {
            i = self.next(i);
        }
        self.keys[i] = key;
        self.nodes[i] = node;
    }

    fn remove(&mut self, key: u64) -> Option<u32> {
        let mut hole = self.find(key)?;
        let node = self.nodes[hole];
        self.nodes[hole] = NIL;
        let len = self.keys.len();
        let mut i = self.next(hole);
        while self.nodes[i] != NIL {
            let home = self.home(self.keys[i]);
            // Shift back unless the entry's home lies cyclically in (hole, i].
            let dist_home = (i + len - home) % len;
            let dist_hole = (i + len - hole) % len;
            if dist_home >= dist_hole {
                self.keys[hole] = self.keys[i];
                self.nodes[hole] = self.nodes[i];
                self.nodes[i] = NIL;
                hole = i;
            }
            i = self.next(i);
        }
        Some(node)
    }

    fn len(&self) -> usize {
        self.nodes.iter().filter(|&&n| n != NIL).count()
    }
}

/// Bounded FIFO of pending entries with O(1) membership by key.
#[derive(Clone, Debug)]
pub struct PendingQueue {
    nodes: Vec<Node>,
    head: u32,
    tail: u32,
    free: u32,
    len: usize,
    threshold: usize,
    index: KeyIndex,
}

impl PendingQueue {
    /// # Panics
    ///
    /// If `threshold` is zero or does not fit the node id space.
    pub fn new(threshold: usize) -> Self {
        assert!(threshold >= 1, "queue threshold must be positive");
        assert!(threshold < NIL as usize, "queue threshold too large");
        let nodes = (0..threshold)
            .map(|i| Node {
                entry: PendingEntry::new(0, 0),
                prev: NIL,
                next: if i + 1 < threshold { (i + 1) as u32 } else { NIL },
            })
            .collect();
        PendingQueue {
            nodes,
            head: NIL,
            tail: NIL,
            free: 0,
            len: 0,
            threshold,
            index: KeyIndex::with_slots(INDEX_LOAD_INVERSE * threshold),
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn threshold(&self) -> usize {
        self.threshold
    }

    fn alloc(&mut self, entry: PendingEntry) -> Result<u32, QueueError> {
        if self.index.get(entry.key).is_some() {
            return Err(QueueError::DuplicateKey(entry.key));
        }
        if self.len == self.threshold {
            return Err(QueueError::Overflow);
        }
        let id = self.free;
        debug_assert_ne!(id, NIL);
        let node = &mut self.nodes[id as usize];
        self.free = node.next;
        node.entry = entry;
        self.index.insert(entry.key, id);
        self.len += 1;
        Ok(id)
    }

    pub fn push_back(&mut self, entry: PendingEntry) -> Result<(), QueueError> {
        let id = self.alloc(entry)?;
        let node = &mut self.nodes[id as usize];
        node.prev = self.tail;
        node.next = NIL;
        if self.tail == NIL {
            self.head = id;
        } else {
            self.nodes[self.tail as usize].next = id;
        }
        self.tail = id;
        Ok(())
    }

    pub fn push_front(&mut self, entry: PendingEntry) -> Result<(), QueueError> {
        let id = self.alloc(entry)?;
        let node = &mut self.nodes[id as usize];
        node.prev = NIL;
        node.next = self.head;
        if self.head == NIL {
            self.tail = id;
        } else {
            self.nodes[self.head as usize].prev = id;
        }
        self.head = id;
        Ok(())
    }

    fn unlink(&mut self, id: u32) -> PendingEntry {
        let Node { entry, prev, next } = self.nodes[id as usize].clone();
        if prev == NIL {
            self.head = next;
        } else {
            self.nodes[prev as usize].next = next;
        }
        if next == NIL {
            self.tail = prev;
        } else {
            self.nodes[next as usize].prev = prev;
        }
        let node = &mut self.nodes[id as usize];
        node.prev = NIL;
        node.next = self.free;
        self.free = id;
        self.len -= 1;
        entry
    }

    pub fn pop_front(&mut self) -> Option<PendingEntry> {
        if self.head == NIL {
            return None;
        }
        let entry = self.unlink(self.head);
        self.index.remove(entry.key);
        Some(entry)
    }

    /// Removes the entry for `key` wherever it sits. Returns it if it was queued.
    pub fn remove_key(&mut self, key: u64) -> Option<PendingEntry> {
        let id = self.index.remove(key)?;
        Some(self.unlink(id))
    }

    pub fn membership(&self, key: u64) -> Option<&PendingEntry> {
        self.index
            .get(key)
            .map(|id| &self.nodes[id as usize].entry)
    }

    pub fn membership_mut(&mut self, key: u64) -> Option<&mut PendingEntry> {
        self.index
            .get(key)
            .map(|id| &mut self.nodes[id as usize].entry)
    }

    pub fn contains(&self, key: u64) -> bool {
        self.index.get(key).is_some()
    }

    pub fn front(&self) -> Option<&PendingEntry> {
        (self.head != NIL).then(|| &self.nodes[self.head as usize].entry)
    }

    /// Entries front to back.
    pub fn iter(&self) -> Iter<'_> {
        Iter {
            queue: self,
            cursor: self.head,
        }
    }

    pub fn clear(&mut self) {
        while self.pop_front().is_some() {}
        debug_assert_eq!(self.index.len(), 0);
    }

    /// Checks that the index holds exactly the queued keys and the links agree
    /// with `len`. Linear time; meant for tests and self-checks.
    pub fn check_consistency(&self) -> Result<(), String> {
        let mut seen = 0usize;
        let mut prev = NIL;
        let mut cursor = self.head;
        while cursor != NIL {
            let node = &self.nodes[cursor as usize];
            if node.prev != prev {
                return Err(format!("broken back-link at node {cursor}"));
            }
            match self.index.get(node.entry.key) {
                Some(id) if id == cursor => {}
                other => {
                    return Err(format!(
                        "index maps key {:#x} to {:?}, expected node {cursor}",
                        node.entry.key, other
                    ))
                }
            }
            seen += 1;
            if seen > self.threshold {
                return Err("cycle in queue links".into());
            }
            prev = cursor;
            cursor = node.next;
        }
        if prev != self.tail {
            return Err("tail does not match last node".into());
        }
        if seen != self.len {
            return Err(format!("walked {seen} nodes but len is {}", self.len));
        }
        let indexed = self.index.len();
        if indexed != self.len {
            return Err(format!("index holds {indexed} keys but len is {}", self.len));
        }
        Ok(())
    }
}

pub struct Iter<'a> {
    queue: &'a PendingQueue,
    cursor: u32,
}

impl<'a> Iterator for Iter<'a> {
    type Item = &'a PendingEntry;

    fn next(&mut self) -> Option<Self::Item> {
        if self.cursor == NIL {
            return None;
        }
        let node = &self.queue.nodes[self.cursor as usize];
        self.cursor = node.next;
        Some(&node.entry)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(key: u64) -> PendingEntry {
        PendingEntry::new(key, key * 10)
    }

    #[test]
    fn push_back_then_pop() {
        let mut q = PendingQueue::new(4);
        q.push_back(e(1)).unwrap();
        assert_eq!(q.len(), 1);
        assert_eq!(q.membership(1), Some(&e(1)));
        assert_eq!(q.pop_front(), Some(e(1)));
        assert!(q.is_empty());
        assert_eq!(q.pop_front(), None);
    }

    #[test]
    fn overflow_leaves_queue_unchanged() {
        let mut q = PendingQueue::new(2);
        q.push_back(e(1)).unwrap();
        q.push_back(e(2)).unwrap();
        assert_eq!(q.push_back(e(3)), Err(QueueError::Overflow));
        assert_eq!(q.push_front(e(3)), Err(QueueError::Overflow));
        assert_eq!(q.len(), 2);
        assert!(!q.contains(3));
        q.check_consistency().unwrap();
    }

    #[test]
    fn duplicate_is_rejected() {
        let mut q = PendingQueue::new(3);
        q.push_back(e(7)).unwrap();
        assert_eq!(q.push_front(e(7)), Err(QueueError::DuplicateKey(7)));
        assert_eq!(q.len(), 1);
    }

    #[test]
    fn push_front_order() {
        let mut q = PendingQueue::new(3);
        q.push_front(e(1)).unwrap();
        assert_eq!(q.pop_front(), Some(e(1)));
        q.push_back(e(1)).unwrap();
        q.push_front(e(2)).unwrap();
        assert_eq!(q.pop_front(), Some(e(2)));
        assert_eq!(q.pop_front(), Some(e(1)));
    }

    #[test]
    fn remove_from_middle() {
        let mut q = PendingQueue::new(5);
        for k in 1..=4 {
            q.push_back(e(k)).unwrap();
        }
        assert_eq!(q.remove_key(2), Some(e(2)));
        assert_eq!(q.remove_key(2), None);
        assert!(q.membership(2).is_none());
        q.check_consistency().unwrap();
        let keys: Vec<u64> = q.iter().map(|p| p.key).collect();
        assert_eq!(keys, vec![1, 3, 4]);
        q.push_back(e(9)).unwrap();
        q.push_back(e(10)).unwrap();
        assert_eq!(q.push_back(e(11)), Err(QueueError::Overflow));
    }

    #[test]
    fn remove_on_empty() {
        let mut q = PendingQueue::new(1);
        assert_eq!(q.remove_key(5), None);
        assert!(q.membership(5).is_none());
    }

    #[test]
    fn fifo_order_for_hundred() {
        let mut q = PendingQueue::new(100);
        for k in 0..100 {
            q.push_back(e(k)).unwrap();
        }
        for k in 0..100 {
            assert_eq!(q.pop_front().unwrap().key, k);
        }
    }

    #[test]
    fn index_survives_colliding_keys() {
        // Tiny index: every key collides with several others.
        let mut q = PendingQueue::new(8);
        for k in 0..8 {
            q.push_back(e(k * 1_000_003)).unwrap();
        }
        for k in (0..8).step_by(2) {
            q.remove_key(k * 1_000_003).unwrap();
            q.check_consistency().unwrap();
        }
        for k in (1..8).step_by(2) {
            assert!(q.contains(k * 1_000_003));
        }
    }

    #[test]
    fn membership_mut_updates_value() {
        let mut q = PendingQueue::new(2);
        q.push_back(e(3)).unwrap();
        q.membership_mut(3).unwrap().value = 99;
        assert_eq!(q.pop_front().unwrap().value, 99);
    }
}
