#![no_main]

use libfuzzer_sys::fuzz_target;
use voforge_core::lang::{parse_policies, render_policies};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(defs) = parse_policies(text) {
        let again = parse_policies(&render_policies(&defs)).expect("rendered policies must parse");
        assert_eq!(again, defs);
    }
});
