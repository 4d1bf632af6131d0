//! Three-layer verification and the fault model used to attack it.
//!
//! The layers check progressively deeper channels of a recitation:
//!
//! 1. **Textual** — do all occurrences of each canonical position carry the
//!    same token, and does the chain follow the patha's layout?
//! 2. **Phonetic** — does every occurrence's recited contour equal its own
//!    token's base tones under the slot's plain/inverted transform? An
//!    attacker who fixes the text must also fix the per-slot pronunciation.
//! 3. **Semantic** — does the verse the chain decodes to (after majority
//!    correction, if needed) still hash to the digest registered for it?
//!
//! Each layer sees attacks the others miss; [`verify_full`] runs all three
//! and reports per-layer diagnostics even when an early layer already failed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::corpus::{semantic_digest, SemanticDigest, Token, Tone};
use crate::patha::{
    correct, decode, encode, localize_errors, realize_tones, spec_for, structure, DecodeError,
    LocalizedError, Occurrence, Recitation, StructureError,
};

/// A corruption applied to a stored recitation copy. Location parameters are
/// chain indices except for [`VerseEdit`] positions, which are 1-based verse
/// positions. Replacement material left as `None` is synthesized
/// deterministically from the injection seed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Fault {
    /// Replace the token carried by one occurrence (slot-correct tones).
    SubstituteOccurrence {
        index: usize,
        replacement: Option<Token>,
    },
    /// Drop one occurrence from the chain.
    DeleteOccurrence { index: usize },
    /// Insert a spurious occurrence before `index`.
    InsertOccurrence { index: usize, token: Option<Token> },
    /// Swap the material of two neighbouring occurrences.
    TransposeAdjacent { index: usize },
    /// Corrupt one occurrence's recited contour, leaving its text alone.
    ToneFlip { index: usize },
    /// Re-encode a modified verse as a fully self-consistent chain.
    ConsistentForgery { edit: VerseEdit },
}

impl Fault {
    /// The taxonomy name, as accepted in simulation configs.
    pub fn kind_name(&self) -> &'static str {
        match self {
            Fault::SubstituteOccurrence { .. } => "substitute_occurrence",
            Fault::DeleteOccurrence { .. } => "delete_occurrence",
            Fault::InsertOccurrence { .. } => "insert_occurrence",
            Fault::TransposeAdjacent { .. } => "transpose_adjacent",
            Fault::ToneFlip { .. } => "tone_flip",
            Fault::ConsistentForgery { .. } => "consistent_forgery",
        }
    }
}

/// The verse-level rewrite a consistent forgery re-encodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VerseEdit {
    /// Swap out the whole token at a position.
    ReplaceToken { position: usize, token: Token },
    /// Change only the meaning class at a position; text and tones stay.
    SetLemma { position: usize, lemma: u64 },
    /// Rearrange the verse: new position `i` takes the token from old
    /// position `order[i-1]`. Preserves the lemma multiset.
    Reorder { order: Vec<usize> },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FaultError {
    #[error("index {index} out of bounds for a chain of {len} occurrences")]
    OutOfBounds { index: usize, len: usize },
    #[error("verse position {position} out of bounds for a verse of {len} tokens")]
    PositionOutOfBounds { position: usize, len: usize },
    #[error("reorder must be a permutation of 1..={len}")]
    BadPermutation { len: usize },
    #[error("consistent forgery needs a decodable base recitation: {0}")]
    UndecodableBase(#[from] DecodeError),
}

fn synth_token(rng: &mut ChaCha8Rng) -> Token {
    let surface = format!("z{:08x}", rng.gen::<u32>());
    let tones = (0..rng.gen_range(1..=3))
        .map(|_| match rng.gen_range(0..3) {
            0 => Tone::High,
            1 => Tone::Low,
            _ => Tone::Mid,
        })
        .collect();
    Token::new(surface, rng.gen_range(1_000_000..2_000_000), tones)
        .expect("synthesized surfaces are valid")
}

/// Apply one fault to a copy. Pure: the input chain is never mutated, and the
/// output depends only on `(recitation, fault, seed)`.
pub fn inject(recitation: &Recitation, fault: &Fault, seed: u64) -> Result<Recitation, FaultError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = recitation.clone();
    let len = out.chain.len();
    let bounds = |index: usize| {
        if index < len {
            Ok(())
        } else {
            Err(FaultError::OutOfBounds { index, len })
        }
    };
    // Slot inversion flags, when the chain is structurally sound. Faults on
    // already-broken chains fall back to plain contours.
    let inversions: Option<Vec<bool>> = structure(recitation)
        .ok()
        .map(|(_, l)| l.iter().map(|s| s.inverted).collect());

    match fault {
        Fault::SubstituteOccurrence { index, replacement } => {
            bounds(*index)?;
            let mut token = replacement.clone().unwrap_or_else(|| synth_token(&mut rng));
            if token == out.chain[*index].token {
                token.lemma_id = token.lemma_id.wrapping_add(1);
            }
            let inverted = inversions.as_ref().map(|inv| inv[*index]).unwrap_or(false);
            out.chain[*index].realized_tones = realize_tones(&token.tones, inverted);
            out.chain[*index].token = token;
        }
        Fault::DeleteOccurrence { index } => {
            bounds(*index)?;
            out.chain.remove(*index);
        }
        Fault::InsertOccurrence { index, token } => {
            if *index > len {
                return Err(FaultError::OutOfBounds { index: *index, len });
            }
            let token = token.clone().unwrap_or_else(|| synth_token(&mut rng));
            let neighbour = len
                .checked_sub(1)
                .map(|last| out.chain[(*index).min(last)].clone());
            let realized_tones = token.tones.clone();
            out.chain.insert(
                *index,
                Occurrence {
                    canonical_pos: neighbour.as_ref().map_or(1, |o| o.canonical_pos),
                    group_index: neighbour.as_ref().map_or(0, |o| o.group_index),
                    slot: neighbour.as_ref().map_or(0, |o| o.slot),
                    token,
                    realized_tones,
                },
            );
        }
        Fault::TransposeAdjacent { index } => {
            bounds(index + 1)?;
            let (a, b) = (index, index + 1);
            let tmp_token = out.chain[*a].token.clone();
            let tmp_tones = out.chain[*a].realized_tones.clone();
            out.chain[*a].token = out.chain[b].token.clone();
            out.chain[*a].realized_tones = out.chain[b].realized_tones.clone();
            out.chain[b].token = tmp_token;
            out.chain[b].realized_tones = tmp_tones;
        }
        Fault::ToneFlip { index } => {
            bounds(*index)?;
            out.chain[*index].realized_tones = out.chain[*index]
                .realized_tones
                .iter()
                .map(|t| t.flip())
                .collect();
        }
        Fault::ConsistentForgery { edit } => {
            let mut verse = decode(recitation)?;
            let n = verse.len();
            let position_bounds = |position: usize| {
                if (1..=n).contains(&position) {
                    Ok(())
                } else {
                    Err(FaultError::PositionOutOfBounds { position, len: n })
                }
            };
            match edit {
                VerseEdit::ReplaceToken { position, token } => {
                    position_bounds(*position)?;
                    verse.tokens[position - 1] = token.clone();
                }
                VerseEdit::SetLemma { position, lemma } => {
                    position_bounds(*position)?;
                    verse.tokens[position - 1].lemma_id = *lemma;
                }
                VerseEdit::Reorder { order } => {
                    let mut seen = vec![false; n];
                    if order.len() != n
                        || !order.iter().all(|&p| {
                            (1..=n).contains(&p) && !std::mem::replace(&mut seen[p - 1], true)
                        })
                    {
                        return Err(FaultError::BadPermutation { len: n });
                    }
                    verse.tokens = order.iter().map(|&p| verse.tokens[p - 1].clone()).collect();
                }
            }
            out = encode(&verse, &spec_for(recitation.kind));
        }
    }
    Ok(out)
}

/// Textual layer result: structure plus occurrence-wise agreement.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TextualReport {
    pub passed: bool,
    pub structure_error: Option<StructureError>,
    pub flagged: Vec<LocalizedError>,
}

pub fn verify_textual(recitation: &Recitation) -> TextualReport {
    match localize_errors(recitation) {
        Ok(flagged) => TextualReport {
            passed: flagged.is_empty(),
            structure_error: None,
            flagged,
        },
        Err(e) => TextualReport {
            passed: false,
            structure_error: Some(e),
            flagged: Vec::new(),
        },
    }
}

/// Phonetic layer result: chain indices whose recited contour deviates from
/// their own token's slot-transformed base tones.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhoneticReport {
    pub passed: bool,
    pub structure_error: Option<StructureError>,
    pub mismatches: Vec<usize>,
}

pub fn verify_phonetic(recitation: &Recitation) -> PhoneticReport {
    let layout = match structure(recitation) {
        Ok((_, layout)) => layout,
        Err(e) => {
            return PhoneticReport {
                passed: false,
                structure_error: Some(e),
                mismatches: Vec::new(),
            }
        }
    };
    let mismatches: Vec<usize> = layout
        .iter()
        .zip(&recitation.chain)
        .enumerate()
        .filter(|(_, (ls, occ))| occ.realized_tones != realize_tones(&occ.token.tones, ls.inverted))
        .map(|(idx, _)| idx)
        .collect();
    PhoneticReport {
        passed: mismatches.is_empty(),
        structure_error: None,
        mismatches,
    }
}

/// Semantic layer result. `undecodable` marks chains that could not be
/// brought to a clean decode even by majority correction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SemanticReport {
    pub passed: bool,
    pub undecodable: bool,
    /// Occurrences majority-corrected on the way to the decoded verse.
    pub repaired: usize,
    pub digest: Option<SemanticDigest>,
}

pub fn verify_semantic(recitation: &Recitation, registered: &SemanticDigest) -> SemanticReport {
    let corrected = match correct(recitation) {
        Ok(pair) => pair,
        Err(_) => {
            return SemanticReport {
                passed: false,
                undecodable: true,
                repaired: 0,
                digest: None,
            }
        }
    };
    let (clean, repaired) = corrected;
    match decode(&clean) {
        Ok(verse) => {
            let digest = semantic_digest(&verse);
            SemanticReport {
                passed: digest == *registered,
                undecodable: false,
                repaired,
                digest: Some(digest),
            }
        }
        Err(_) => SemanticReport {
            passed: false,
            undecodable: true,
            repaired,
            digest: None,
        },
    }
}

/// All three layers, run unconditionally for full diagnostics.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerificationReport {
    pub textual: TextualReport,
    pub phonetic: PhoneticReport,
    pub semantic: SemanticReport,
    pub overall: bool,
}

pub fn verify_full(recitation: &Recitation, registered: &SemanticDigest) -> VerificationReport {
    let textual = verify_textual(recitation);
    let phonetic = verify_phonetic(recitation);
    let semantic = verify_semantic(recitation, registered);
    let overall = textual.passed && phonetic.passed && semantic.passed;
    VerificationReport {
        textual,
        phonetic,
        semantic,
        overall,
    }
}
