#![no_main]

use deamort::metrics::Metric;
use deamort::StatsReport;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(report) = StatsReport::from_json(text) {
        let _ = report.to_csv(Metric::Moves);
        let _ = report.to_csv(Metric::Probes);
        assert_eq!(StatsReport::from_json(&report.to_json()).unwrap(), report);
    }
});
