#![allow(dead_code)]

use std::collections::VecDeque;

use deamort::queue::QueueError;
use deamort::{PendingEntry, PendingQueue, TableId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Drives a [`PendingQueue`] and a `VecDeque` model with the same random
/// operations and compares them after every step. Keys come from a small space
/// so duplicates, hits and misses all occur.
pub fn queue_model_run(n_ops: u64, threshold: usize, rng_seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut q = PendingQueue::new(threshold);
    let mut model: VecDeque<PendingEntry> = VecDeque::new();
    let key_space = (threshold as u64) * 3 + 1;

    for step in 0..n_ops {
        let key = rng.random_range(0..key_space);
        let entry = PendingEntry {
            key,
            value: rng.random(),
            preferred: if rng.random() { TableId::T0 } else { TableId::T1 },
        };
        let expect_push = if model.iter().any(|e| e.key == key) {
            Err(QueueError::DuplicateKey(key))
        } else if model.len() == threshold {
            Err(QueueError::Overflow)
        } else {
            Ok(())
        };
        match rng.random_range(0..6) {
            0 => {
                let got = q.push_back(entry);
                if got != expect_push {
                    return Err(format!("step {step}: push_back {got:?} vs {expect_push:?}"));
                }
                if got.is_ok() {
                    model.push_back(entry);
                }
            }
            1 => {
                let got = q.push_front(entry);
                if got != expect_push {
                    return Err(format!("step {step}: push_front {got:?} vs {expect_push:?}"));
                }
                if got.is_ok() {
                    model.push_front(entry);
                }
            }
            2 => {
                let (got, want) = (q.pop_front(), model.pop_front());
                if got != want {
                    return Err(format!("step {step}: pop_front {got:?} vs {want:?}"));
                }
            }
            3 => {
                let want = model
                    .iter()
                    .position(|e| e.key == key)
                    .and_then(|i| model.remove(i));
                let got = q.remove_key(key);
                if got != want {
                    return Err(format!("step {step}: remove_key {got:?} vs {want:?}"));
                }
            }
            4 => {
                let want = model.iter().find(|e| e.key == key);
                if q.membership(key) != want {
                    return Err(format!("step {step}: membership of {key}"));
                }
                if q.contains(key) != want.is_some() {
                    return Err(format!("step {step}: contains({key})"));
                }
            }
            _ => {
                if q.front() != model.front() {
                    return Err(format!("step {step}: front"));
                }
            }
        }
        if q.len() != model.len() {
            return Err(format!("step {step}: len {} vs {}", q.len(), model.len()));
        }
        if step % 1024 == 0 {
            if !q.iter().eq(model.iter()) {
                return Err(format!("step {step}: order differs"));
            }
            q.check_consistency()
                .map_err(|e| format!("step {step}: {e}"))?;
        }
    }
    if !q.iter().copied().eq(model.iter().copied()) {
        return Err("final order differs".into());
    }
    q.check_consistency()
}
