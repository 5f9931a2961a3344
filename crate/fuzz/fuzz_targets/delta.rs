#![no_main]

use libfuzzer_sys::fuzz_target;
use voforge_core::graph::{patch, GraphDelta, LabelledGraph};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(d) = GraphDelta::parse(text) {
        assert_eq!(GraphDelta::parse(&d.to_string()).as_ref(), Ok(&d));
        let _ = patch(&LabelledGraph::default(), &d);
    }
});
