//! Declarative workloads and their deterministic expansion into operations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dictionary::Parameters;
use crate::harness::HarnessError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpMix {
    pub insert: u8,
    pub lookup: u8,
    pub delete: u8,
}

impl OpMix {
    pub const FILL: OpMix = OpMix {
        insert: 100,
        lookup: 0,
        delete: 0,
    };

    pub fn new(insert: u8, lookup: u8, delete: u8) -> Self {
        OpMix {
            insert,
            lookup,
            delete,
        }
    }

    pub fn total(&self) -> u32 {
        u32::from(self.insert) + u32::from(self.lookup) + u32::from(self.delete)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeyDistribution {
    /// Keys drawn uniformly from `[0, key_space)`.
    UniformRandom,
    /// Inserts use fresh keys 0, 1, 2, ...; lookups and deletes pick a uniformly
    /// random key among those issued so far.
    Sequential,
    /// Operations come verbatim from `replay`.
    AdversarialReplay,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum Op {
    Insert { key: u64, value: u64 },
    Lookup { key: u64 },
    Delete { key: u64 },
}

impl Op {
    pub fn key(&self) -> u64 {
        match *self {
            Op::Insert { key, .. } | Op::Lookup { key } | Op::Delete { key } => key,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadSpec {
    pub n_ops: u64,
    pub op_mix: OpMix,
    pub key_distribution: KeyDistribution,
    /// Key universe for `uniform_random`; defaults to twice the capacity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key_space: Option<u64>,
    pub rng_seed: u64,
    pub dictionary_params: Parameters,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub replay: Vec<Op>,
    /// Index of the first replayed operation that belongs to the attack phase.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attack_start: Option<u64>,
}

impl WorkloadSpec {
    pub fn new(n_ops: u64, op_mix: OpMix, rng_seed: u64, params: Parameters) -> Self {
        WorkloadSpec {
            n_ops,
            op_mix,
            key_distribution: KeyDistribution::UniformRandom,
            key_space: None,
            rng_seed,
            dictionary_params: params,
            replay: Vec::new(),
            attack_start: None,
        }
    }

    /// `capacity` inserts of distinct keys: fills the dictionary exactly.
    pub fn fill(params: Parameters, rng_seed: u64) -> Self {
        WorkloadSpec {
            key_distribution: KeyDistribution::Sequential,
            ..WorkloadSpec::new(params.capacity as u64, OpMix::FILL, rng_seed, params)
        }
    }

    pub fn key_space(&self) -> u64 {
        self.key_space
            .unwrap_or(2 * self.dictionary_params.capacity as u64)
            .max(1)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::InvalidWorkload(m));
        if self.op_mix.total() != 100 {
            return bad(format!(
                "op_mix percentages sum to {}, expected 100",
                self.op_mix.total()
            ));
        }
        if self.key_space == Some(0) {
            return bad("key_space must be positive".into());
        }
        if self.key_distribution == KeyDistribution::AdversarialReplay {
            if self.replay.len() as u64 != self.n_ops {
                return bad(format!(
                    "n_ops is {} but replay holds {} operations",
                    self.n_ops,
                    self.replay.len()
                ));
            }
        } else if !self.replay.is_empty() {
            return bad("replay operations given for a generated workload".into());
        }
        if let Some(start) = self.attack_start {
            if start > self.n_ops {
                return bad(format!("attack_start {start} is past n_ops {}", self.n_ops));
            }
        }
        self.dictionary_params
            .validate()
            .or_else(|e| bad(e.to_string()))
    }

    /// The operation sequence. A pure function of the workload.
    pub fn ops(&self) -> OpStream<'_> {
        OpStream {
            workload: self,
            rng: ChaCha8Rng::seed_from_u64(self.rng_seed),
            issued: 0,
            emitted: 0,
        }
    }
}

pub struct OpStream<'a> {
    workload: &'a WorkloadSpec,
    rng: ChaCha8Rng,
    issued: u64,
    emitted: u64,
}

impl Iterator for OpStream<'_> {
    type Item = Op;

    fn next(&mut self) -> Option<Op> {
        if self.emitted >= self.workload.n_ops {
            return None;
        }
        let i = self.emitted;
        self.emitted += 1;
        if self.workload.key_distribution == KeyDistribution::AdversarialReplay {
            return self.workload.replay.get(i as usize).copied();
        }
        let mix = self.workload.op_mix;
        let roll = self.rng.random_range(0..100u32);
        let is_insert = roll < u32::from(mix.insert);
        let is_lookup = !is_insert && roll < u32::from(mix.insert) + u32::from(mix.lookup);
        let key = match self.workload.key_distribution {
            KeyDistribution::UniformRandom => self.rng.random_range(0..self.workload.key_space()),
            KeyDistribution::Sequential if is_insert => {
                self.issued += 1;
                self.issued - 1
            }
            KeyDistribution::Sequential => self.rng.random_range(0..self.issued.max(1)),
            KeyDistribution::AdversarialReplay => unreachable!(),
        };
        Some(if is_insert {
            Op::Insert {
                key,
                value: self.rng.random(),
            }
        } else if is_lookup {
            Op::Lookup { key }
        } else {
            Op::Delete { key }
        })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.workload.n_ops - self.emitted) as usize;
        (left, Some(left))
    }
}
