#![no_main]

use keel::rational::{format_q, parse_q};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(x) = parse_q(data) {
        assert_eq!(parse_q(&format_q(&x)).unwrap(), x);
    }
});
