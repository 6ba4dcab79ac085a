#![no_main]

use ipg_core::bench::RunRecord;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(rec) = RunRecord::from_json(data) {
        let text = rec.to_json();
        RunRecord::from_json(&text).expect("written record parses");
    }
});
