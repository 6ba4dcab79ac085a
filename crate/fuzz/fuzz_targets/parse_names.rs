#![no_main]

use ipg_core::bench::{SolveMethod, Suite};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(m) = data.parse::<SolveMethod>() {
        assert_eq!(m.name().parse::<SolveMethod>().ok(), Some(m));
    }
    if let Ok(s) = data.parse::<Suite>() {
        assert_eq!(s.name().parse::<Suite>().ok(), Some(s));
    }
});
