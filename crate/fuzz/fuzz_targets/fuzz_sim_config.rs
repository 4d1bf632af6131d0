#![no_main]

use libfuzzer_sys::fuzz_target;
use shruti::network::sim::SimConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(config) = serde_json::from_str::<SimConfig>(text) else {
        return;
    };
    // Validation must classify, never panic; running the simulation itself is
    // out of scope here (unbounded work).
    let _ = config.validate();
});
