#![no_main]

use libfuzzer_sys::fuzz_target;
use voforge_core::{parse_bundle, render, typecheck};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(b) = parse_bundle(text) else { return };
    let _ = typecheck(&b);
    let out = render(&b);
    let again = parse_bundle(&out).expect("rendered bundle must parse");
    assert_eq!(again, b);
    assert_eq!(render(&again), out);
});
