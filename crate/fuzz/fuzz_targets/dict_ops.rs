#![no_main]

use std::collections::HashMap;

use deamort::{CuckooDict, HashSeed, Outcome, Parameters};
use libfuzzer_sys::fuzz_target;

// Byte 0: capacity, byte 1: move budget and mode, then 3 bytes per operation.
fuzz_target!(|data: &[u8]| {
    let [cap, mode, rest @ ..] = data else {
        return;
    };
    let amortized = mode & 0x80 != 0;
    let params = Parameters::new(usize::from(cap % 64) + 1, 0.1)
        .with_move_budget(u32::from(mode % 4) + 1)
        .with_seed(HashSeed::new((u128::from(*cap) << 64) | u128::from(*mode)));
    let mut dict = CuckooDict::new(params).unwrap();
    let mut model: HashMap<u64, u64> = HashMap::new();
    for op in rest.chunks_exact(3) {
        let key = u64::from(op[1] % 96);
        let value = u64::from(op[2]);
        match op[0] % 3 {
            0 => {
                let r = if amortized {
                    dict.insert_amortized(key, value)
                } else {
                    dict.insert(key, value)
                }
                .unwrap();
                if model.contains_key(&key) || model.len() < params.capacity {
                    assert_ne!(r.outcome, Outcome::Full);
                    model.insert(key, value);
                } else {
                    assert_eq!(r.outcome, Outcome::Full);
                }
            }
            1 => assert_eq!(dict.get(key), model.get(&key).copied()),
            _ => {
                let found = dict.delete(key).outcome == Outcome::Ok;
                assert_eq!(found, model.remove(&key).is_some());
            }
        }
        dict.check_invariants().unwrap();
    }
    assert_eq!(dict.len(), model.len());
});
