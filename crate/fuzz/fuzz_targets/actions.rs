#![no_main]

use libfuzzer_sys::fuzz_target;
use voforge_core::lang::{parse_actions, render_actions};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(actions) = parse_actions(text) {
        let again = parse_actions(&render_actions(&actions)).expect("rendered actions must parse");
        assert_eq!(again, actions);
    }
});
