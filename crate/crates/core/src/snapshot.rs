//! JSON state snapshots for debugging and cross-run comparison.
//!
//! A snapshot does not contain the elements. It records the parameters, the
//! counters and SHA-256 digests of the occupancy bitmaps and of the full slot
//! contents, which is enough to tell whether two runs ended in the same state.
//! The digest inputs are documented in `docs/formats.md`.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dictionary::{CuckooDict, Parameters};
use crate::hashing::{HashSeed, TableId};

pub const SNAPSHOT_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableDigest {
    pub occupied: usize,
    /// SHA-256 of the occupancy bitmap, one bit per slot, LSB first, zero padded.
    pub bitmap_sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DictSnapshot {
    pub format_version: u32,
    pub parameters: Parameters,
    pub table_size: usize,
    pub queue_threshold: usize,
    pub seed: HashSeed,
    pub count: usize,
    pub queue_len: usize,
    pub rehash_count: u64,
    pub table0: TableDigest,
    pub table1: TableDigest,
    /// SHA-256 over every slot of both tables and then every queue entry.
    pub content_sha256: String,
}

#[derive(Debug, thiserror::Error)]
pub enum SnapshotError {
    #[error("malformed snapshot: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported snapshot format version {0}")]
    Version(u32),
    #[error("inconsistent snapshot: {0}")]
    Inconsistent(String),
}

fn table_digest(dict: &CuckooDict, table: TableId) -> TableDigest {
    let mut bits = vec![0u8; dict.table_size().div_ceil(8)];
    let mut occupied = 0;
    for (i, slot) in dict.occupancy(table).enumerate() {
        if slot.is_some() {
            bits[i / 8] |= 1 << (i % 8);
            occupied += 1;
        }
    }
    TableDigest {
        occupied,
        bitmap_sha256: hex::encode(Sha256::digest(&bits)),
    }
}

fn content_digest(dict: &CuckooDict) -> String {
    let mut h = Sha256::new();
    for table in TableId::BOTH {
        for slot in dict.occupancy(table) {
            match slot {
                Some((k, v)) => {
                    h.update([1u8]);
                    h.update(k.to_le_bytes());
                    h.update(v.to_le_bytes());
                }
                None => h.update([0u8]),
            }
        }
    }
    for e in dict.queue().iter() {
        h.update(e.key.to_le_bytes());
        h.update(e.value.to_le_bytes());
        h.update([e.preferred.index() as u8]);
    }
    hex::encode(h.finalize())
}

impl DictSnapshot {
    pub fn capture(dict: &CuckooDict) -> Self {
        DictSnapshot {
            format_version: SNAPSHOT_FORMAT_VERSION,
            parameters: *dict.params(),
            table_size: dict.table_size(),
            queue_threshold: dict.queue().threshold(),
            seed: *dict.seed(),
            count: dict.len(),
            queue_len: dict.queue().len(),
            rehash_count: dict.rehash_count(),
            table0: table_digest(dict, TableId::T0),
            table1: table_digest(dict, TableId::T1),
            content_sha256: content_digest(dict),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("snapshot serializes")
    }

    /// Parses and sanity-checks a snapshot.
    pub fn from_json(s: &str) -> Result<Self, SnapshotError> {
        let snap: DictSnapshot = serde_json::from_str(s)?;
        if snap.format_version != SNAPSHOT_FORMAT_VERSION {
            return Err(SnapshotError::Version(snap.format_version));
        }
        let placed = snap.table0.occupied.checked_add(snap.table1.occupied);
        if placed.and_then(|p| p.checked_add(snap.queue_len)) != Some(snap.count) {
            return Err(SnapshotError::Inconsistent(
                "count differs from occupied slots plus queue length".into(),
            ));
        }
        if snap.table0.occupied > snap.table_size || snap.table1.occupied > snap.table_size {
            return Err(SnapshotError::Inconsistent("more occupied slots than slots".into()));
        }
        if snap.queue_len > snap.queue_threshold {
            return Err(SnapshotError::Inconsistent("queue longer than its threshold".into()));
        }
        for digest in [
            &snap.table0.bitmap_sha256,
            &snap.table1.bitmap_sha256,
            &snap.content_sha256,
        ] {
            if digest.len() != 64 || hex::decode(digest).is_err() {
                return Err(SnapshotError::Inconsistent(format!("bad digest {digest:?}")));
            }
        }
        Ok(snap)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_sensitivity() {
        let mut d = CuckooDict::new(Parameters::new(64, 0.2)).unwrap();
        for k in 0..40 {
            d.insert(k, k * 3).unwrap();
        }
        let snap = DictSnapshot::capture(&d);
        assert_eq!(snap.count, 40);
        let back = DictSnapshot::from_json(&snap.to_json()).unwrap();
        assert_eq!(back, snap);

        d.insert(5, 999).unwrap();
        let changed = DictSnapshot::capture(&d);
        assert_eq!(changed.table0, snap.table0);
        assert_ne!(changed.content_sha256, snap.content_sha256);
    }

    #[test]
    fn rejects_inconsistent_counts() {
        let d = CuckooDict::new(Parameters::new(8, 0.2)).unwrap();
        let mut snap = DictSnapshot::capture(&d);
        snap.count = 3;
        assert!(matches!(
            DictSnapshot::from_json(&snap.to_json()),
            Err(SnapshotError::Inconsistent(_))
        ));
        assert!(DictSnapshot::from_json("{").is_err());
    }
}
