#![no_main]

use std::sync::OnceLock;

use libfuzzer_sys::fuzz_target;
use shruti::corpus::{Corpus, Token, Tone, Verse};
use shruti::patha::{parse_recitation_file, render_recitation_file, structure};

fn corpus() -> &'static Corpus {
    static CORPUS: OnceLock<Corpus> = OnceLock::new();
    CORPUS.get_or_init(|| {
        let tones = [
            vec![Tone::Mid],
            vec![Tone::High, Tone::Low],
            vec![Tone::Low],
            vec![Tone::Mid, Tone::High],
        ];
        let tokens: Vec<Token> = ["agni", "soma", "vayu", "indra"]
            .iter()
            .zip(tones)
            .enumerate()
            .map(|(i, (s, t))| Token::new(s.to_string(), i as u64 + 1, t).unwrap())
            .collect();
        let verses = vec![
            Verse::new("v1".into(), tokens.clone()).unwrap(),
            Verse::new("v2".into(), tokens[..2].to_vec()).unwrap(),
        ];
        Corpus::new(0, verses).unwrap()
    })
}

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(recitations) = parse_recitation_file(text, corpus()) else {
        return;
    };
    // Ill-shaped lines parse into chains that fail the structure check; only
    // structurally sound parses are obliged to render and parse back
    // unchanged.
    if recitations.iter().all(|rec| structure(rec).is_ok()) {
        let rendered = render_recitation_file(&recitations).expect("sound chains render");
        let reparsed = parse_recitation_file(&rendered, corpus()).expect("round trip");
        assert_eq!(reparsed, recitations);
    }
});
