#![no_main]

use keel::trees::STree;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(t) = STree::from_json(data) {
        assert_eq!(STree::from_json(&t.to_json()).unwrap(), t);
        let _ = t.layout();
    }
});
