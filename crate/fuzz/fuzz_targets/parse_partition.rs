#![no_main]

use keel::trees::Partition2;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Some((&n, rest)) = data.split_first() else { return };
    let Ok(s) = std::str::from_utf8(rest) else { return };
    let n = n as usize % 70;
    if let Ok(p) = Partition2::parse(s, n) {
        assert_eq!(Partition2::parse(&p.to_string(), n).unwrap(), p);
    }
});
