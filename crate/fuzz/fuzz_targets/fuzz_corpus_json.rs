#![no_main]

use libfuzzer_sys::fuzz_target;
use shruti::corpus::{semantic_digest, Corpus, TokenLookup};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(corpus) = serde_json::from_str::<Corpus>(text) else {
        return;
    };
    // Anything that deserializes must survive the rest of the pipeline.
    let _ = TokenLookup::from_verses(&corpus.verses);
    for verse in &corpus.verses {
        let _ = semantic_digest(verse);
    }
    let reserialized = serde_json::to_string(&corpus).expect("corpora serialize");
    let reparsed: Corpus = serde_json::from_str(&reserialized).expect("round trip");
    assert_eq!(reparsed, corpus);
});
