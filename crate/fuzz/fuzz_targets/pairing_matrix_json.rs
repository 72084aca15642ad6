#![no_main]

use keel::intersect::{PairingMatrix, PairingMatrixJson};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    let Ok(j) = serde_json::from_str::<PairingMatrixJson>(data) else { return };
    if let Ok(m) = PairingMatrix::from_json(&j) {
        assert_eq!(PairingMatrix::from_json(&m.to_json()).unwrap(), m);
    }
});
