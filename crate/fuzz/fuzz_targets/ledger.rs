#![no_main]

use libfuzzer_sys::fuzz_target;
use voforge_core::graph::SessionLedger;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(l) = SessionLedger::parse(text) {
        assert_eq!(SessionLedger::parse(&l.to_string()).as_ref(), Ok(&l));
    }
});
