//! Regenerates the fuzz corpus seeds from real artifacts, so every fuzz
//! target starts from inputs that exercise the deep paths rather than the
//! reject-early ones.
//!
//! Usage: cargo run -p shruti --example gen_fuzz_seeds [fuzz/corpus]

use std::fs;
use std::path::Path;

use shruti::corpus::{Corpus, Token, Tone, Verse};
use shruti::ledger::{Chain, SchemeRegistry};
use shruti::patha::{encode, render_recitation_file, spec_for, PathaKind};

fn reference_corpus() -> Corpus {
    // Mirrors the corpus baked into the fuzz_recitation_text target.
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
}

fn write(root: &Path, target: &str, name: &str, bytes: &[u8]) {
    let dir = root.join(target);
    fs::create_dir_all(&dir).unwrap_or_else(|e| panic!("create {}: {e}", dir.display()));
    let path = dir.join(name);
    fs::write(&path, bytes).unwrap_or_else(|e| panic!("write {}: {e}", path.display()));
    println!("{}", path.display());
}

fn main() {
    let root = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "fuzz/corpus".into());
    let root = Path::new(&root);
    let corpus = reference_corpus();

    write(
        root,
        "fuzz_corpus_json",
        "reference.json",
        serde_json::to_string_pretty(&corpus).unwrap().as_bytes(),
    );
    let tiny = Corpus::new(
        7,
        vec![Verse::new(
            "w".into(),
            vec![Token::new("om".into(), 99, vec![Tone::High]).unwrap()],
        )
        .unwrap()],
    )
    .unwrap();
    write(
        root,
        "fuzz_corpus_json",
        "tiny.json",
        serde_json::to_string(&tiny).unwrap().as_bytes(),
    );

    let recitations = vec![
        encode(corpus.get("v1").unwrap(), &spec_for(PathaKind::Jata)),
        encode(corpus.get("v1").unwrap(), &spec_for(PathaKind::Ghana)),
        encode(corpus.get("v2").unwrap(), &spec_for(PathaKind::Ratha)),
    ];
    write(
        root,
        "fuzz_recitation_text",
        "rendered.txt",
        render_recitation_file(&recitations).unwrap().as_bytes(),
    );

    for name in ["escalation.json", "no_fault.json", "substitution.json"] {
        let bundled = Path::new("configs").join(name);
        match fs::read(&bundled) {
            Ok(bytes) => write(root, "fuzz_sim_config", name, &bytes),
            Err(e) => eprintln!("skipping {}: {e}", bundled.display()),
        }
    }

    let mut chain = Chain::new(SchemeRegistry::standard(3).unwrap());
    chain.append(b"{\"event\":\"genesis-next\"}");
    chain.append(b"plain bytes");
    write(
        root,
        "fuzz_chain_jsonl",
        "three_blocks.jsonl",
        chain.save().as_bytes(),
    );
    let mut mixed = Chain::new(SchemeRegistry::from_ids(["sha256:t1", "toy:fnv16"]).unwrap());
    mixed.append(b"weak scheme present");
    write(
        root,
        "fuzz_chain_jsonl",
        "with_toy_scheme.jsonl",
        mixed.save().as_bytes(),
    );

    write(
        root,
        "fuzz_decode_chain",
        "jata_v1.json",
        serde_json::to_string(&encode(
            corpus.get("v1").unwrap(),
            &spec_for(PathaKind::Jata),
        ))
        .unwrap()
        .as_bytes(),
    );
    write(
        root,
        "fuzz_decode_chain",
        "ghana_v2.json",
        serde_json::to_string(&encode(
            corpus.get("v2").unwrap(),
            &spec_for(PathaKind::Ghana),
        ))
        .unwrap()
        .as_bytes(),
    );
}
