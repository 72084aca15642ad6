#![no_main]

use keel::keelring::RingElementJson;
use keel::RingElement;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    // normal forms need the relation echelon for n, which is only cheap for small n
    let Ok(j) = serde_json::from_str::<RingElementJson>(data) else { return };
    if j.n > 7 || j.terms.len() > 64 {
        return;
    }
    if let Ok(x) = RingElement::try_from(&j) {
        assert_eq!(RingElement::from_json(&x.to_json()).unwrap(), x);
    }
});
