#![no_main]

use keel::cohft::Potential;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(phi) = Potential::from_json_str(data) {
        assert_eq!(Potential::from_json_str(&phi.to_json_string()).unwrap(), phi);
    }
});
