#![no_main]

use deamort::DictSnapshot;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(snap) = DictSnapshot::from_json(text) {
        assert_eq!(DictSnapshot::from_json(&snap.to_json()).unwrap(), snap);
    }
});
