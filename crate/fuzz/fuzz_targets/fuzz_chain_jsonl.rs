#![no_main]

use libfuzzer_sys::fuzz_target;
use shruti::ledger::{verify_chain, Chain, ChainPolicy};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(chain) = Chain::load(text) else { return };
    // A chain that loads must verify without panicking under every policy
    // over its registry, and must survive a save/load cycle unchanged.
    let k = chain.registry().len();
    for m in 1..=k {
        let _ = verify_chain(&chain, ChainPolicy::new(k, m).unwrap());
    }
    let reloaded = Chain::load(&chain.save()).expect("saved chains load");
    assert_eq!(reloaded, chain);
});
