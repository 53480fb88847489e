//! Seeded hash functions mapping 64-bit keys to cells of the two tables.
//!
//! The family is a keyed two-round mixer built from the SplitMix64 finalizer
//! (`fmix64` below). Everything here is bit-exact and documented in
//! `docs/hashing.md`; any change to a constant changes every experiment.
//!
//! For a seed with 128-bit material `m`, `lo = m as u64`, `hi = (m >> 64) as u64`:
//!
//! ```text
//! a[t] = fmix64(lo ^ TABLE_TWEAK[t])
//! b[t] = fmix64(hi ^ TABLE_TWEAK[t] ^ GOLDEN)
//! hash(key, t) = fmix64(fmix64(key ^ a[t]) + b[t])      (wrapping add)
//! slot = (hash * table_size) >> 64                       (128-bit product)
//! ```

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// Per-table tweaks: table 0, table 1, byte-string key reduction.
pub const TABLE_TWEAK: [u64; 3] = [
    0x243f_6a88_85a3_08d3,
    0x1319_8a2e_0370_7344,
    0xa409_3822_299f_31d0,
];

const TRIAL_TWEAK: u64 = 0x082e_fa98_ec4e_6c89;

/// SplitMix64 finalizer. A bijection on `u64`.
#[inline]
pub fn fmix64(mut z: u64) -> u64 {
    z ^= z >> 30;
    z = z.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Reduce a 64-bit hash into `[0, range)` by multiply-shift.
#[inline]
pub fn reduce(hash: u64, range: usize) -> usize {
    ((u128::from(hash) * range as u128) >> 64) as usize
}

/// Which of the two cuckoo tables a cell lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TableId {
    T0,
    T1,
}

impl TableId {
    pub const BOTH: [TableId; 2] = [TableId::T0, TableId::T1];

    #[inline]
    pub fn index(self) -> usize {
        match self {
            TableId::T0 => 0,
            TableId::T1 => 1,
        }
    }

    #[inline]
    pub fn other(self) -> TableId {
        match self {
            TableId::T0 => TableId::T1,
            TableId::T1 => TableId::T0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CellIndex {
    pub table: TableId,
    pub slot: usize,
}

/// Seed for the hash family. Equal seeds give identical hash functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct HashSeed {
    pub material: u128,
    pub generation: u64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SeedParseError {
    #[error("seed string is empty")]
    Empty,
    #[error("seed has {0} hex digits, at most 32 are allowed")]
    TooLong(usize),
    #[error("invalid hex digit {ch:?} at position {pos}")]
    InvalidDigit { pos: usize, ch: char },
}

impl HashSeed {
    pub const fn new(material: u128) -> Self {
        HashSeed {
            material,
            generation: 0,
        }
    }

    #[inline]
    fn halves(&self) -> (u64, u64) {
        (self.material as u64, (self.material >> 64) as u64)
    }

    /// Parses seed material from hexadecimal.
    ///
    /// Accepts 1 to 32 hex digits (either case) with an optional `0x` prefix and
    /// surrounding whitespace, read as a big-endian 128-bit integer. So `"ff"` and
    /// `"0x00ff"` both give material `255`. The generation is always 0.
    pub fn from_hex(s: &str) -> Result<Self, SeedParseError> {
        let s = s.trim();
        let digits = s
            .strip_prefix("0x")
            .or_else(|| s.strip_prefix("0X"))
            .unwrap_or(s);
        if digits.is_empty() {
            return Err(SeedParseError::Empty);
        }
        let mut material: u128 = 0;
        let mut n = 0usize;
        for (pos, ch) in digits.chars().enumerate() {
            let d = ch
                .to_digit(16)
                .ok_or(SeedParseError::InvalidDigit { pos, ch })?;
            n += 1;
            if n > 32 {
                return Err(SeedParseError::TooLong(digits.chars().count()));
            }
            material = (material << 4) | u128::from(d);
        }
        Ok(HashSeed::new(material))
    }

    /// 32 lowercase hex digits, zero padded. Round-trips through [`HashSeed::from_hex`].
    pub fn to_hex(&self) -> String {
        format!("{:032x}", self.material)
    }

    /// Independent seed for the `index`-th trial of an experiment, generation 0.
    pub fn for_trial(&self, index: u64) -> HashSeed {
        let (lo, hi) = self.halves();
        let lo = fmix64(lo ^ fmix64(index ^ TRIAL_TWEAK));
        let hi = fmix64(hi ^ fmix64(index.wrapping_add(GOLDEN)));
        HashSeed::new((u128::from(hi) << 64) | u128::from(lo))
    }

    pub fn hasher(&self) -> TableHasher {
        TableHasher::new(self)
    }
}

impl fmt::Display for HashSeed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.to_hex(), self.generation)
    }
}

impl FromStr for HashSeed {
    type Err = SeedParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        HashSeed::from_hex(s)
    }
}

#[derive(Serialize, Deserialize)]
struct SeedRepr {
    material: String,
    generation: u64,
}

impl Serialize for HashSeed {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        SeedRepr {
            material: self.to_hex(),
            generation: self.generation,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for HashSeed {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = SeedRepr::deserialize(deserializer)?;
        let mut seed = HashSeed::from_hex(&repr.material).map_err(serde::de::Error::custom)?;
        seed.generation = repr.generation;
        Ok(seed)
    }
}

/// Precomputed sub-keys for one seed. Cheap to copy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TableHasher {
    a: [u64; 3],
    b: [u64; 3],
}

impl TableHasher {
    pub fn new(seed: &HashSeed) -> Self {
        let (lo, hi) = seed.halves();
        let mut a = [0; 3];
        let mut b = [0; 3];
        for i in 0..3 {
            a[i] = fmix64(lo ^ TABLE_TWEAK[i]);
            b[i] = fmix64(hi ^ TABLE_TWEAK[i] ^ GOLDEN);
        }
        TableHasher { a, b }
    }

    #[inline]
    pub fn hash(&self, key: u64, table: TableId) -> u64 {
        let t = table.index();
        fmix64(fmix64(key ^ self.a[t]).wrapping_add(self.b[t]))
    }

    #[inline]
    pub fn slot(&self, key: u64, table: TableId, table_size: usize) -> usize {
        reduce(self.hash(key, table), table_size)
    }

    /// Reduces an arbitrary byte string to a 64-bit key.
    ///
    /// Bytes are consumed as little-endian 8-byte words, the last word zero-padded:
    /// `s = a[2] ^ (len * GOLDEN)`, then `s = fmix64(s ^ word) + b[2]` per word,
    /// and the key is `fmix64(s ^ len)`.
    pub fn key_from_bytes(&self, bytes: &[u8]) -> u64 {
        let len = bytes.len() as u64;
        let mut state = self.a[2] ^ len.wrapping_mul(GOLDEN);
        for chunk in bytes.chunks(8) {
            let mut word = [0u8; 8];
            word[..chunk.len()].copy_from_slice(chunk);
            state = fmix64(state ^ u64::from_le_bytes(word)).wrapping_add(self.b[2]);
        }
        fmix64(state ^ len)
    }
}

/// Maps `key` to its cell in `table`. Total and deterministic.
///
/// # Panics
///
/// If `table_size` is zero.
pub fn hash_cell(key: u64, seed: &HashSeed, table: TableId, table_size: usize) -> CellIndex {
    assert!(table_size >= 1, "table_size must be positive");
    CellIndex {
        table,
        slot: TableHasher::new(seed).slot(key, table, table_size),
    }
}

/// Fresh seed derived from `seed` and `entropy`, with the generation bumped by one.
///
/// Each half of the new material is a bijection of the matching entropy half, so
/// two reseeds of the same seed with different entropy never share material.
pub fn reseed(seed: &HashSeed, entropy: u128) -> HashSeed {
    let (lo, hi) = seed.halves();
    let generation = seed.generation + 1;
    let e_lo = entropy as u64;
    let e_hi = (entropy >> 64) as u64;
    let new_lo = fmix64(lo ^ fmix64(e_lo ^ generation));
    let new_hi = fmix64(hi ^ fmix64(e_hi ^ generation.rotate_left(32) ^ GOLDEN));
    HashSeed {
        material: (u128::from(new_hi) << 64) | u128::from(new_lo),
        generation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_slot_table() {
        let seed = HashSeed::new(0xdead_beef);
        for key in [0u64, 1, u64::MAX, 12345] {
            assert_eq!(hash_cell(key, &seed, TableId::T0, 1).slot, 0);
            assert_eq!(hash_cell(key, &seed, TableId::T1, 1).slot, 0);
        }
    }

    #[test]
    fn deterministic() {
        let seed = HashSeed::new(42);
        let a = hash_cell(987_654_321, &seed, TableId::T0, 1 << 10);
        let b = hash_cell(987_654_321, &seed, TableId::T0, 1 << 10);
        assert_eq!(a, b);
        assert_eq!(a.table, TableId::T0);
    }

    #[test]
    fn fmix_known_values() {
        // SplitMix64 outputs for state increments of GOLDEN starting at 0.
        assert_eq!(fmix64(GOLDEN), 0xe220_a839_7b1d_cdaf);
        assert_eq!(fmix64(GOLDEN.wrapping_mul(2)), 0x6e78_9e6a_a1b9_65f4);
        assert_eq!(fmix64(0), 0);
    }

    #[test]
    fn reseed_increments_generation() {
        let s = HashSeed::new(7);
        let r = reseed(&s, 1);
        assert_eq!(r.generation, 1);
        assert_eq!(reseed(&r, 1).generation, 2);
    }

    #[test]
    fn reseed_distinct_entropy_distinct_material() {
        let s = HashSeed::new(7);
        assert_ne!(reseed(&s, 1).material, reseed(&s, 2).material);
        assert_ne!(reseed(&s, 1 << 64).material, reseed(&s, 2 << 64).material);
    }

    #[test]
    fn reseed_changes_most_slots() {
        let s = HashSeed::new(0x1234_5678);
        let r = reseed(&s, 99);
        let (old, new) = (s.hasher(), r.hasher());
        let disagreements = (0..1000u64)
            .filter(|&k| old.slot(k, TableId::T0, 1 << 16) != new.slot(k, TableId::T0, 1 << 16))
            .count();
        assert!(disagreements > 900, "only {disagreements} of 1000 keys moved");
        let probe_differs = (0..100u64)
            .any(|k| old.hash(k, TableId::T0) != new.hash(k, TableId::T0));
        assert!(probe_differs);
    }

    #[test]
    fn hex_parsing() {
        assert_eq!(HashSeed::from_hex("ff").unwrap().material, 255);
        assert_eq!(HashSeed::from_hex(" 0x00FF\n").unwrap().material, 255);
        assert_eq!(
            HashSeed::from_hex("ffffffffffffffffffffffffffffffff").unwrap().material,
            u128::MAX
        );
        assert_eq!(HashSeed::from_hex(""), Err(SeedParseError::Empty));
        assert_eq!(HashSeed::from_hex("0x"), Err(SeedParseError::Empty));
        assert_eq!(
            HashSeed::from_hex("1ffffffffffffffffffffffffffffffff"),
            Err(SeedParseError::TooLong(33))
        );
        assert_eq!(
            HashSeed::from_hex("12g4"),
            Err(SeedParseError::InvalidDigit { pos: 2, ch: 'g' })
        );
        let s = HashSeed::new(0xabc);
        assert_eq!(HashSeed::from_hex(&s.to_hex()).unwrap(), s);
    }

    #[test]
    fn seed_serde_roundtrip() {
        let mut s = HashSeed::new(0x0123_4567_89ab_cdef_0011_2233_4455_6677);
        s.generation = 9;
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(
            json,
            r#"{"material":"0123456789abcdef0011223344556677","generation":9}"#
        );
        assert_eq!(serde_json::from_str::<HashSeed>(&json).unwrap(), s);
    }

    #[test]
    fn byte_keys_depend_on_every_byte() {
        let h = HashSeed::new(5).hasher();
        let base = h.key_from_bytes(b"hello world!");
        assert_ne!(base, h.key_from_bytes(b"hello world?"));
        assert_ne!(base, h.key_from_bytes(b"hello world!\0"));
        assert_ne!(h.key_from_bytes(b""), h.key_from_bytes(b"\0"));
        assert_eq!(base, h.key_from_bytes(b"hello world!"));
    }

    #[test]
    fn trial_seeds_differ() {
        let base = HashSeed::new(1);
        assert_ne!(base.for_trial(0), base.for_trial(1));
        assert_eq!(base.for_trial(3), base.for_trial(3));
        assert_eq!(base.for_trial(3).generation, 0);
    }
}
