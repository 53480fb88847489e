//! Reference map with the dictionary's observable semantics.

use std::collections::HashMap;

/// Result class of an insert, shared by the oracle and the implementations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InsertClass {
    Stored,
    Full,
}

#[derive(Clone, Debug, Default)]
pub struct ReferenceDict {
    capacity: usize,
    map: HashMap<u64, u64>,
}

impl ReferenceDict {
    pub fn new(capacity: usize) -> Self {
        ReferenceDict {
            capacity,
            map: HashMap::with_capacity(capacity),
        }
    }

    /// Overwrites existing keys; refuses new keys once `capacity` are stored.
    pub fn insert(&mut self, key: u64, value: u64) -> InsertClass {
        if let Some(v) = self.map.get_mut(&key) {
            *v = value;
            return InsertClass::Stored;
        }
        if self.map.len() == self.capacity {
            return InsertClass::Full;
        }
        self.map.insert(key, value);
        InsertClass::Stored
    }

    pub fn get(&self, key: u64) -> Option<u64> {
        self.map.get(&key).copied()
    }

    pub fn remove(&mut self, key: u64) -> bool {
        self.map.remove(&key).is_some()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.map.iter().map(|(&k, &v)| (k, v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn capacity_and_overwrite() {
        let mut r = ReferenceDict::new(1);
        assert_eq!(r.insert(1, 1), InsertClass::Stored);
        assert_eq!(r.insert(2, 2), InsertClass::Full);
        assert_eq!(r.insert(1, 5), InsertClass::Stored);
        assert_eq!(r.get(1), Some(5));
        assert!(r.remove(1));
        assert!(!r.remove(1));
        assert!(r.is_empty());
    }
}
