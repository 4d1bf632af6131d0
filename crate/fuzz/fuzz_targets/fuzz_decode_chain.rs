#![no_main]

use libfuzzer_sys::fuzz_target;
use shruti::patha::{correct, decode, encode, localize_errors, spec_for, structure, Recitation};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(recitation) = serde_json::from_str::<Recitation>(text) else {
        return;
    };
    // None of the codec entry points may panic on an arbitrary chain.
    let _ = structure(&recitation);
    let _ = localize_errors(&recitation);
    let _ = correct(&recitation);
    if let Ok(verse) = decode(&recitation) {
        // Decodable chains round-trip through their canonical re-encoding.
        let reencoded = encode(&verse, &spec_for(recitation.kind));
        let again = decode(&reencoded).expect("canonical encodings decode");
        assert_eq!(again, verse);
    }
});
