#![no_main]

use deamort::harness::config::ConfigFormat;
use deamort::harness::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    for format in [ConfigFormat::Json, ConfigFormat::Toml] {
        if let Ok(cfg) = RunConfig::parse(text, format) {
            cfg.seed().expect("parse validates the seed");
        }
    }
});
