#![no_main]

use libfuzzer_sys::fuzz_target;
use voforge_core::runtime::Trace;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(t) = Trace::parse(text) {
        assert_eq!(Trace::parse(&t.to_string()).as_ref(), Ok(&t));
    }
});
