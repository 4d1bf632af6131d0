//! Occurrence-chain codec: expansion of a verse under a window program, the
//! inverse decode, and the two textual-redundancy consumers — error
//! localization and majority correction.
//!
//! Decoding never guesses: if two occurrences of the same canonical position
//! disagree, [`decode`] fails with a conflict and the caller must either
//! localize or explicitly [`correct`] by strict majority first.

use thiserror::Error;

use crate::corpus::{CorpusError, Token, Verse};
use crate::patha::{realize_tones, LayoutSlot, Occurrence, PathaKind, PathaSpec, Recitation};

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum StructureError {
    #[error("chain length {len} matches no verse length under the {kind} patha")]
    Length { kind: PathaKind, len: usize },
    #[error(
        "chain metadata does not follow the {kind} layout for any verse of chain length {len}"
    )]
    Layout { kind: PathaKind, len: usize },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DecodeError {
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error("occurrences of canonical position {canonical_pos} carry different tokens")]
    Conflict { canonical_pos: usize },
    #[error("decoded verse is malformed: {0}")]
    InvalidVerse(#[from] CorpusError),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CorrectError {
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error("no strict majority at canonical position {canonical_pos}")]
    Uncorrectable { canonical_pos: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// Part of a position whose occurrences admit no strict majority.
    Conflicting,
    /// Outvoted by a strict majority; `correct` would rewrite it.
    Correctable,
}

/// One suspicious occurrence found by [`localize_errors`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LocalizedError {
    pub chain_index: usize,
    pub canonical_pos: usize,
    pub verdict: Verdict,
}

/// Expand a verse into its occurrence chain. Total: every verse of length
/// ≥ 1 encodes under every shipped spec.
pub fn encode(verse: &Verse, spec: &PathaSpec) -> Recitation {
    let chain = spec
        .layout(verse.len())
        .into_iter()
        .map(|ls| {
            let token = verse.tokens[ls.canonical_pos - 1].clone();
            let realized_tones = realize_tones(&token.tones, ls.inverted);
            Occurrence {
                canonical_pos: ls.canonical_pos,
                group_index: ls.group_index,
                slot: ls.slot,
                token,
                realized_tones,
            }
        })
        .collect();
    Recitation {
        verse_id: verse.verse_id.clone(),
        kind: spec.kind,
        chain,
    }
}

/// Determine the verse length a chain realizes and return the expected
/// layout. Fails if the chain length fits no verse or the occurrence metadata
/// does not line up with the layout for any length candidate.
pub fn structure(recitation: &Recitation) -> Result<(usize, Vec<LayoutSlot>), StructureError> {
    let spec = crate::patha::spec_for(recitation.kind);
    structure_with(recitation, &spec)
}

fn structure_with(
    recitation: &Recitation,
    spec: &PathaSpec,
) -> Result<(usize, Vec<LayoutSlot>), StructureError> {
    let len = recitation.chain.len();
    let candidates = spec.verse_lengths_for_chain(len);
    if candidates.is_empty() {
        return Err(StructureError::Length {
            kind: spec.kind,
            len,
        });
    }
    for n in candidates {
        let layout = spec.layout(n);
        let matches = layout.iter().zip(&recitation.chain).all(|(ls, occ)| {
            ls.canonical_pos == occ.canonical_pos
                && ls.group_index == occ.group_index
                && ls.slot == occ.slot
        });
        if matches {
            return Ok((n, layout));
        }
    }
    Err(StructureError::Layout {
        kind: spec.kind,
        len,
    })
}

/// Collapse a chain back to its verse. Every canonical position must be
/// carried consistently by all of its occurrences.
pub fn decode(recitation: &Recitation) -> Result<Verse, DecodeError> {
    let (n, layout) = structure(recitation)?;
    let mut tokens: Vec<Option<&Token>> = vec![None; n];
    for (ls, occ) in layout.iter().zip(&recitation.chain) {
        match tokens[ls.canonical_pos - 1] {
            None => tokens[ls.canonical_pos - 1] = Some(&occ.token),
            Some(existing) if *existing == occ.token => {}
            Some(_) => {
                return Err(DecodeError::Conflict {
                    canonical_pos: ls.canonical_pos,
                })
            }
        }
    }
    let tokens = tokens
        .into_iter()
        .map(|t| t.expect("layout covers every position").clone())
        .collect();
    Ok(Verse::new(recitation.verse_id.clone(), tokens)?)
}

/// Gathered votes for one canonical position: which chain indices carry it
/// and what each carries.
fn position_votes<'a>(
    layout: &[LayoutSlot],
    recitation: &'a Recitation,
    n: usize,
) -> Vec<Vec<(usize, &'a Token)>> {
    let mut per_position: Vec<Vec<(usize, &Token)>> = vec![Vec::new(); n];
    for (idx, (ls, occ)) in layout.iter().zip(&recitation.chain).enumerate() {
        per_position[ls.canonical_pos - 1].push((idx, &occ.token));
    }
    per_position
}

/// Token held by a strict majority of the votes, if any.
fn strict_majority<'a>(votes: &[(usize, &'a Token)]) -> Option<&'a Token> {
    for &(_, candidate) in votes {
        let count = votes.iter().filter(|(_, t)| *t == candidate).count();
        if 2 * count > votes.len() {
            return Some(candidate);
        }
    }
    None
}

/// Flag occurrences that disagree with their canonical position. Positions
/// where all occurrences agree yield no entries; a strict-majority position
/// flags only its minority; a tied position flags every occurrence.
pub fn localize_errors(recitation: &Recitation) -> Result<Vec<LocalizedError>, StructureError> {
    let (n, layout) = structure(recitation)?;
    let mut flagged = Vec::new();
    for (pos0, votes) in position_votes(&layout, recitation, n).iter().enumerate() {
        let canonical_pos = pos0 + 1;
        if votes.iter().all(|(_, t)| *t == votes[0].1) {
            continue;
        }
        match strict_majority(votes) {
            Some(majority) => {
                for &(idx, token) in votes {
                    if token != majority {
                        flagged.push(LocalizedError {
                            chain_index: idx,
                            canonical_pos,
                            verdict: Verdict::Correctable,
                        });
                    }
                }
            }
            None => {
                for &(idx, _) in votes {
                    flagged.push(LocalizedError {
                        chain_index: idx,
                        canonical_pos,
                        verdict: Verdict::Conflicting,
                    });
                }
            }
        }
    }
    flagged.sort_by_key(|e| e.chain_index);
    Ok(flagged)
}

/// Rewrite every outvoted occurrence to its position's strict-majority token
/// (with slot-correct tones) and report how many were repaired. Fails if any
/// position lacks a strict majority.
pub fn correct(recitation: &Recitation) -> Result<(Recitation, usize), CorrectError> {
    let (n, layout) = structure(recitation)?;
    let mut majorities: Vec<Token> = Vec::with_capacity(n);
    for (pos0, votes) in position_votes(&layout, recitation, n).iter().enumerate() {
        match strict_majority(votes) {
            Some(t) => majorities.push(t.clone()),
            None => {
                return Err(CorrectError::Uncorrectable {
                    canonical_pos: pos0 + 1,
                })
            }
        }
    }
    let mut repaired = 0;
    let mut out = recitation.clone();
    for (ls, occ) in layout.iter().zip(&mut out.chain) {
        let majority = &majorities[ls.canonical_pos - 1];
        if occ.token != *majority {
            occ.token = majority.clone();
            occ.realized_tones = realize_tones(&majority.tones, ls.inverted);
            repaired += 1;
        }
    }
    Ok((out, repaired))
}
