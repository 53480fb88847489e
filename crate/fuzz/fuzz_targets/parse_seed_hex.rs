#![no_main]

use deamort::HashSeed;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(seed) = HashSeed::from_hex(text) {
        assert_eq!(HashSeed::from_hex(&seed.to_hex()).unwrap(), seed);
    }
});
