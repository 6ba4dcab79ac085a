//! Instance files: parsing must not panic, and anything accepted must
//! survive a write and re-read.

#![no_main]

use ipg_core::instance::Instance;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if data.len() > 64 * 1024 {
        return;
    }
    if let Ok(inst) = Instance::from_json(data) {
        let text = inst.to_json();
        let again = Instance::from_json(&text).expect("written instance parses");
        assert_eq!(again.to_json(), text);
    }
});
