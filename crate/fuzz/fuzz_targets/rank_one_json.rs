#![no_main]

use keel::cohft::{RankOneJson, RankOneTheory};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    let Ok(j) = serde_json::from_str::<RankOneJson>(data) else { return };
    let small = match &j {
        RankOneJson::Coordinates { cn } => cn.len() <= 3,
        RankOneJson::Twist { sa } => sa.len() <= 3,
        RankOneJson::Classes { classes } => classes.len() <= 3 && classes.iter().all(|c| c.n <= 6),
    };
    if small {
        let _ = RankOneTheory::from_json(&j, 5);
    }
});
