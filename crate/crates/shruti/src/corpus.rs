//! Verses, tokens, tone tags, semantic digests, and the deterministic
//! synthetic corpus generator.
//!
//! A token carries three channels: the written `surface`, a `lemma_id`
//! standing in for its meaning class, and a short sequence of [`Tone`] tags
//! standing in for its pitch contour. The semantic digest of a verse hashes
//! the *multiset* of lemma ids — word order does not affect it, so a check
//! against the digest survives any order-preserving-in-meaning rearrangement
//! while still catching word replacement.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Upper bound on the number of tone tags a single token may carry.
pub const MAX_TONES: usize = 8;

/// A pitch accent tag. Three symbols are enough to give every token a
/// non-trivial contour that the inversion transform can act on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tone {
    High,
    Low,
    Mid,
}

impl Tone {
    /// One-letter code used in the compact recitation text form.
    pub fn letter(self) -> char {
        match self {
            Tone::High => 'h',
            Tone::Low => 'l',
            Tone::Mid => 'm',
        }
    }

    pub fn from_letter(c: char) -> Option<Tone> {
        match c {
            'h' => Some(Tone::High),
            'l' => Some(Tone::Low),
            'm' => Some(Tone::Mid),
            _ => None,
        }
    }

    /// Pitch mirror: high and low swap, mid is its own mirror.
    pub fn invert(self) -> Tone {
        match self {
            Tone::High => Tone::Low,
            Tone::Low => Tone::High,
            Tone::Mid => Tone::Mid,
        }
    }

    /// Cyclic corruption used by the `tone_flip` fault: always changes the tag.
    pub fn flip(self) -> Tone {
        match self {
            Tone::High => Tone::Low,
            Tone::Low => Tone::Mid,
            Tone::Mid => Tone::High,
        }
    }
}

/// Contour a token takes when recited on a reversed template leg: the tag
/// sequence runs backwards and every tag is pitch-mirrored. Applying the
/// transform twice returns the original contour.
pub fn invert_tones(tones: &[Tone]) -> Vec<Tone> {
    tones.iter().rev().map(|t| t.invert()).collect()
}

/// Render a contour as its letter string, e.g. `[High, Low]` → `"hl"`.
pub fn tone_letters(tones: &[Tone]) -> String {
    tones.iter().map(|t| t.letter()).collect()
}

/// Parse a letter string back into a contour. Empty or over-long strings and
/// unknown letters are rejected.
pub fn tones_from_letters(s: &str) -> Option<Vec<Tone>> {
    if s.is_empty() || s.chars().count() > MAX_TONES {
        return None;
    }
    s.chars().map(Tone::from_letter).collect()
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CorpusError {
    #[error("token surface must be non-empty")]
    EmptySurface,
    #[error("token surface {surface:?} contains a separator character")]
    SurfaceSeparator { surface: String },
    #[error("token has {len} tone tags; expected between 1 and {MAX_TONES}")]
    ToneCount { len: usize },
    #[error("verse id must be non-empty and free of whitespace and '/'")]
    BadVerseId { id: String },
    #[error("verse {id:?} has no tokens")]
    EmptyVerse { id: String },
    #[error("verse id {id:?} appears more than once")]
    DuplicateVerseId { id: String },
    #[error("surface {surface:?} maps to two different tokens in this corpus")]
    AmbiguousSurface { surface: String },
    #[error("verse count must be ≥ 1")]
    ZeroVerseCount,
    #[error("length range [{min}, {max}] is invalid; need 1 ≤ min ≤ max")]
    BadLengthRange { min: usize, max: usize },
}

/// One word of a verse. Ordering is lexicographic by surface first, which is
/// what deterministic tie-breaking in consensus relies on.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawToken")]
pub struct Token {
    pub surface: String,
    #[serde(rename = "lemma")]
    pub lemma_id: u64,
    pub tones: Vec<Tone>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawToken {
    surface: String,
    lemma: u64,
    tones: Vec<Tone>,
}

impl TryFrom<RawToken> for Token {
    type Error = CorpusError;

    fn try_from(raw: RawToken) -> Result<Self, Self::Error> {
        Token::new(raw.surface, raw.lemma, raw.tones)
    }
}

impl Token {
    pub fn new(surface: String, lemma_id: u64, tones: Vec<Tone>) -> Result<Token, CorpusError> {
        if surface.is_empty() {
            return Err(CorpusError::EmptySurface);
        }
        if surface.contains('/') || surface.chars().any(char::is_whitespace) {
            return Err(CorpusError::SurfaceSeparator { surface });
        }
        if tones.is_empty() || tones.len() > MAX_TONES {
            return Err(CorpusError::ToneCount { len: tones.len() });
        }
        Ok(Token {
            surface,
            lemma_id,
            tones,
        })
    }
}

/// The protected artifact: an ordered token sequence with a stable id.
/// Positions are 1-based everywhere in this crate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawVerse")]
pub struct Verse {
    #[serde(rename = "id")]
    pub verse_id: String,
    pub tokens: Vec<Token>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVerse {
    id: String,
    tokens: Vec<Token>,
}

impl TryFrom<RawVerse> for Verse {
    type Error = CorpusError;

    fn try_from(raw: RawVerse) -> Result<Self, Self::Error> {
        Verse::new(raw.id, raw.tokens)
    }
}

impl Verse {
    pub fn new(verse_id: String, tokens: Vec<Token>) -> Result<Verse, CorpusError> {
        if verse_id.is_empty()
            || verse_id.contains('/')
            || verse_id.chars().any(char::is_whitespace)
        {
            return Err(CorpusError::BadVerseId { id: verse_id });
        }
        if tokens.is_empty() {
            return Err(CorpusError::EmptyVerse { id: verse_id });
        }
        Ok(Verse { verse_id, tokens })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// A set of verses under one generation seed. The seed is carried in the
/// serialized form so corpus files are self-describing.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawCorpus")]
pub struct Corpus {
    pub seed: u64,
    pub verses: Vec<Verse>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCorpus {
    seed: u64,
    verses: Vec<Verse>,
}

impl TryFrom<RawCorpus> for Corpus {
    type Error = CorpusError;

    fn try_from(raw: RawCorpus) -> Result<Self, Self::Error> {
        Corpus::new(raw.seed, raw.verses)
    }
}

impl Corpus {
    pub fn new(seed: u64, verses: Vec<Verse>) -> Result<Corpus, CorpusError> {
        let mut seen = std::collections::BTreeSet::new();
        for v in &verses {
            if !seen.insert(v.verse_id.as_str()) {
                return Err(CorpusError::DuplicateVerseId {
                    id: v.verse_id.clone(),
                });
            }
        }
        Ok(Corpus { seed, verses })
    }

    pub fn get(&self, verse_id: &str) -> Option<&Verse> {
        self.verses.iter().find(|v| v.verse_id == verse_id)
    }
}

/// Surface → token map derived from a corpus, used when parsing recitation
/// text back into occurrence chains. Construction fails if two verses use the
/// same surface for different tokens, since parsing would then be ambiguous.
#[derive(Clone, Debug, Default)]
pub struct TokenLookup {
    by_surface: BTreeMap<String, Token>,
}

impl TokenLookup {
    pub fn from_verses<'a, I: IntoIterator<Item = &'a Verse>>(
        verses: I,
    ) -> Result<TokenLookup, CorpusError> {
        let mut by_surface = BTreeMap::new();
        for verse in verses {
            for token in &verse.tokens {
                match by_surface.get(&token.surface) {
                    None => {
                        by_surface.insert(token.surface.clone(), token.clone());
                    }
                    Some(existing) if existing == token => {}
                    Some(_) => {
                        return Err(CorpusError::AmbiguousSurface {
                            surface: token.surface.clone(),
                        });
                    }
                }
            }
        }
        Ok(TokenLookup { by_surface })
    }

    pub fn get(&self, surface: &str) -> Option<&Token> {
        self.by_surface.get(surface)
    }

    pub fn tokens(&self) -> impl Iterator<Item = &Token> {
        self.by_surface.values()
    }
}

/// Order-invariant digest of a verse's lemma multiset, hex-serialized.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SemanticDigest(pub [u8; 32]);

impl fmt::Display for SemanticDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

impl fmt::Debug for SemanticDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SemanticDigest({})", self)
    }
}

impl FromStr for SemanticDigest {
    type Err = hex::FromHexError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut value = [0u8; 32];
        hex::decode_to_slice(s, &mut value)?;
        Ok(SemanticDigest(value))
    }
}

impl Serialize for SemanticDigest {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for SemanticDigest {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Digest scheme: SHA-256 over a domain tag, the big-endian lemma count, and
/// the lemmas sorted ascending (each big-endian u64). Sorting is what makes
/// the digest a function of the multiset rather than the sequence.
pub fn semantic_digest(verse: &Verse) -> SemanticDigest {
    let mut lemmas: Vec<u64> = verse.tokens.iter().map(|t| t.lemma_id).collect();
    lemmas.sort_unstable();
    let mut hasher = Sha256::new();
    hasher.update(b"shruti.semantic.v1\x00");
    hasher.update((lemmas.len() as u64).to_be_bytes());
    for lemma in lemmas {
        hasher.update(lemma.to_be_bytes());
    }
    SemanticDigest(hasher.finalize().into())
}

const CONSONANTS: [&str; 16] = [
    "k", "g", "c", "j", "t", "d", "n", "p", "b", "m", "y", "r", "l", "v", "s", "h",
];
const VOWELS: [&str; 5] = ["a", "i", "u", "e", "o"];

/// Vocabulary entry `i`: a syllable-like surface, lemma id `i`, and a fixed
/// random contour. Tokens are drawn whole from the vocabulary, so a surface
/// always denotes the same token within one generated corpus.
fn vocabulary(rng: &mut ChaCha8Rng, size: usize) -> Vec<Token> {
    (0..size)
        .map(|i| {
            let mut surface = format!("{}{}", CONSONANTS[i % 16], VOWELS[(i / 16) % VOWELS.len()]);
            if i >= 80 {
                surface.push_str(&(i / 80).to_string());
            }
            let tones = (0..rng.gen_range(1..=3))
                .map(|_| match rng.gen_range(0..3) {
                    0 => Tone::High,
                    1 => Tone::Low,
                    _ => Tone::Mid,
                })
                .collect();
            Token::new(surface, i as u64, tones).expect("generated surfaces are valid")
        })
        .collect()
}

/// Deterministic synthetic corpus: `verse_count` verses with lengths drawn
/// uniformly from the inclusive range, over a vocabulary of
/// `max(80, 4 × max_len)` distinct tokens.
pub fn make_corpus(
    seed: u64,
    verse_count: usize,
    length_range: (usize, usize),
) -> Result<Vec<Verse>, CorpusError> {
    let (min_len, max_len) = length_range;
    if verse_count == 0 {
        return Err(CorpusError::ZeroVerseCount);
    }
    if min_len < 1 || max_len < min_len {
        return Err(CorpusError::BadLengthRange {
            min: min_len,
            max: max_len,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab = vocabulary(&mut rng, 80.max(4 * max_len));
    let verses = (0..verse_count)
        .map(|i| {
            let len = rng.gen_range(min_len..=max_len);
            let tokens = (0..len)
                .map(|_| vocab[rng.gen_range(0..vocab.len())].clone())
                .collect();
            Verse::new(format!("v{:04}", i + 1), tokens).expect("generated ids are valid")
        })
        .collect();
    Ok(verses)
}
