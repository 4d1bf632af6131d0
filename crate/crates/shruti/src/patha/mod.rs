//! The eight recitation patterns, modeled as declarative window programs.
//!
//! A patha walks a verse in overlapping windows of `window` consecutive
//! positions, one group per start position 1, 2, …, n−1. Within a group the
//! `template` lists which window-relative positions are recited and in what
//! order; when fewer than `window` positions remain near the end of the verse
//! a `terminal` pattern for that remaining count applies instead. Each
//! relative index appears at least twice per pattern, so every canonical
//! position is recited redundantly — that redundancy is what the integrity
//! layers consume.
//!
//! Two patterns are fixed by tradition and reproduced exactly: jata recites
//! pairs forward-reverse-forward (`1 2 2 1 1 2 / 2 3 3 2 2 3 / …`) and ghana
//! extends each group to the triple (`12/21/123/321/123/23/32/234/…`). The
//! other six kinds ship as house patterns obeying the same structural rules.

mod codec;
mod text;

pub use codec::{
    correct, decode, encode, localize_errors, structure, CorrectError, DecodeError, LocalizedError,
    StructureError, Verdict,
};
pub use text::{
    parse_recitation_file, parse_text, render_recitation_file, render_text, TextError,
    SENTINEL_LEMMA,
};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{invert_tones, Token, Tone};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PathaKind {
    Jata,
    Mala,
    Sikha,
    Rekha,
    Dhvaja,
    Danda,
    Ratha,
    Ghana,
}

impl PathaKind {
    pub const ALL: [PathaKind; 8] = [
        PathaKind::Jata,
        PathaKind::Mala,
        PathaKind::Sikha,
        PathaKind::Rekha,
        PathaKind::Dhvaja,
        PathaKind::Danda,
        PathaKind::Ratha,
        PathaKind::Ghana,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PathaKind::Jata => "jata",
            PathaKind::Mala => "mala",
            PathaKind::Sikha => "sikha",
            PathaKind::Rekha => "rekha",
            PathaKind::Dhvaja => "dhvaja",
            PathaKind::Danda => "danda",
            PathaKind::Ratha => "ratha",
            PathaKind::Ghana => "ghana",
        }
    }
}

impl fmt::Display for PathaKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error(
    "unknown patha {got:?}; expected one of jata, mala, sikha, rekha, dhvaja, danda, ratha, ghana"
)]
pub struct UnknownPatha {
    pub got: String,
}

impl FromStr for PathaKind {
    type Err = UnknownPatha;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PathaKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| UnknownPatha { got: s.to_string() })
    }
}

/// Window program for one patha kind.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathaSpec {
    pub kind: PathaKind,
    /// Number of consecutive canonical positions covered by a full group.
    pub window: usize,
    /// Recitation order of window-relative positions for a full group.
    pub template: Vec<usize>,
    /// Patterns for the final short group when only `r < window` positions
    /// remain, keyed by `r`. `terminal[&1]` doubles as the whole encoding of a
    /// single-token verse.
    pub terminal: BTreeMap<usize, Vec<usize>>,
}

/// Where one occurrence of the chain sits: which canonical position it claims,
/// which group and template slot produced it, and whether that slot lies on a
/// reversed leg of the pattern (pitch contour must then be inverted).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LayoutSlot {
    pub canonical_pos: usize,
    pub group_index: usize,
    pub slot: usize,
    pub inverted: bool,
}

impl PathaSpec {
    fn pattern_for(&self, remaining: usize) -> &[usize] {
        if remaining >= self.window {
            &self.template
        } else {
            &self.terminal[&remaining]
        }
    }

    /// Group sizes for a verse of length `n`, in group order.
    pub fn group_sizes(&self, n: usize) -> Vec<usize> {
        if n == 1 {
            return vec![self.terminal[&1].len()];
        }
        (1..n)
            .map(|start| self.pattern_for((n - start + 1).min(self.window)).len())
            .collect()
    }

    /// Total chain length for a verse of length `n`.
    pub fn chain_len(&self, n: usize) -> usize {
        self.group_sizes(n).iter().sum()
    }

    /// The full occurrence layout for a verse of length `n ≥ 1`.
    pub fn layout(&self, n: usize) -> Vec<LayoutSlot> {
        let mut slots = Vec::with_capacity(self.chain_len(n));
        let starts: Vec<usize> = if n == 1 { vec![1] } else { (1..n).collect() };
        for (group_index, &start) in starts.iter().enumerate() {
            let remaining = if n == 1 {
                1
            } else {
                (n - start + 1).min(self.window)
            };
            let pattern = self.pattern_for(remaining);
            for (slot, &rel) in pattern.iter().enumerate() {
                slots.push(LayoutSlot {
                    canonical_pos: start + rel,
                    group_index,
                    slot,
                    inverted: slot > 0 && pattern[slot] < pattern[slot - 1],
                });
            }
        }
        slots
    }

    /// All verse lengths whose chains have exactly `len` occurrences. Usually
    /// zero or one candidate; the short degenerate chains (n = 1 vs n = 2) can
    /// collide and are told apart by layout metadata.
    pub fn verse_lengths_for_chain(&self, len: usize) -> Vec<usize> {
        let mut out = Vec::new();
        for n in 1.. {
            let l = self.chain_len(n);
            // Chain length grows with n beyond the degenerate cases; stop once
            // past the target with a full-window group in place.
            if l == len {
                out.push(n);
            }
            if l > len && n > self.window {
                break;
            }
        }
        out
    }

    /// Check the structural rules every shipped spec obeys. Exposed for tests
    /// and for anyone defining additional window programs.
    pub fn validate(&self) -> Result<(), String> {
        if self.window < 2 {
            return Err("window must be ≥ 2".into());
        }
        let check = |pattern: &[usize], width: usize, what: &str| -> Result<(), String> {
            if pattern.first() != Some(&0) {
                return Err(format!("{what} must start at relative index 0"));
            }
            let mut counts = vec![0usize; width];
            for &rel in pattern {
                if rel >= width {
                    return Err(format!("{what} index {rel} out of range [0, {width})"));
                }
                counts[rel] += 1;
            }
            if counts.iter().any(|&c| c < 2) {
                return Err(format!("{what} must recite every index at least twice"));
            }
            Ok(())
        };
        check(&self.template, self.window, "template")?;
        for r in 1..self.window {
            let pattern = self
                .terminal
                .get(&r)
                .ok_or_else(|| format!("missing terminal pattern for {r} remaining"))?;
            check(pattern, r, &format!("terminal[{r}]"))?;
        }
        Ok(())
    }
}

/// The shipped window program for each of the eight kinds. Jata and ghana
/// follow the traditional listings; the rest are house patterns.
pub fn spec_for(kind: PathaKind) -> PathaSpec {
    let single = vec![0, 0, 0, 0, 0, 0];
    let pair = vec![0, 1, 1, 0, 0, 1];
    let (window, template, mut terminal): (usize, Vec<usize>, BTreeMap<usize, Vec<usize>>) =
        match kind {
            // 1 2 2 1 1 2 — forward, reverse, forward over each pair.
            PathaKind::Jata => (2, pair.clone(), BTreeMap::new()),
            // 1 2 1 2 — the pair recited twice, garland-style.
            PathaKind::Mala => (2, vec![0, 1, 0, 1], BTreeMap::new()),
            // 1 2 2 1 1 2 2 1 — the jata pattern with a trailing crest.
            PathaKind::Sikha => (2, vec![0, 1, 1, 0, 0, 1, 1, 0], BTreeMap::new()),
            // 1 2 3 3 2 1 1 2 3 — forward, reverse, forward over each triple.
            PathaKind::Rekha => (
                3,
                vec![0, 1, 2, 2, 1, 0, 0, 1, 2],
                BTreeMap::from([(2, pair.clone())]),
            ),
            // 1 2 1 2 2 1 — doubled pair with a reversed tail.
            PathaKind::Dhvaja => (2, vec![0, 1, 0, 1, 1, 0], BTreeMap::new()),
            // 1 2 3 2 1 1 2 3 — staff stroke: up, down, up again.
            PathaKind::Danda => (
                3,
                vec![0, 1, 2, 1, 0, 0, 1, 2],
                BTreeMap::from([(2, pair.clone())]),
            ),
            // 1 2 3 4 4 3 2 1 1 2 3 4 — the chariot runs the widest window.
            PathaKind::Ratha => (
                4,
                vec![0, 1, 2, 3, 3, 2, 1, 0, 0, 1, 2, 3],
                BTreeMap::from([(3, vec![0, 1, 2, 2, 1, 0, 0, 1, 2]), (2, pair.clone())]),
            ),
            // 12/21/123/321/123 — pair forward/reverse, then the triple bell.
            PathaKind::Ghana => (
                3,
                vec![0, 1, 1, 0, 0, 1, 2, 2, 1, 0, 0, 1, 2],
                BTreeMap::from([(2, pair)]),
            ),
        };
    terminal.insert(1, single);
    PathaSpec {
        kind,
        window,
        template,
        terminal,
    }
}

/// Contour an occurrence should carry: the token's base tones, mirrored when
/// the slot lies on a reversed leg.
pub fn realize_tones(base: &[Tone], inverted: bool) -> Vec<Tone> {
    if inverted {
        invert_tones(base)
    } else {
        base.to_vec()
    }
}

/// One recited appearance of a canonical position.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Occurrence {
    /// 1-based verse position this occurrence claims to realize.
    pub canonical_pos: usize,
    pub group_index: usize,
    pub slot: usize,
    pub token: Token,
    /// Tones as actually recited; equals `realize_tones(token.tones, inverted)`
    /// on a faithful chain.
    pub realized_tones: Vec<Tone>,
}

/// A verse expanded under one patha: the redundant occurrence chain.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Recitation {
    pub verse_id: String,
    pub kind: PathaKind,
    pub chain: Vec<Occurrence>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_shipped_specs_validate() {
        for kind in PathaKind::ALL {
            let spec = spec_for(kind);
            assert_eq!(spec.kind, kind);
            spec.validate().unwrap_or_else(|e| panic!("{kind}: {e}"));
        }
    }

    #[test]
    fn spec_validation_rejects_broken_programs() {
        let mut spec = spec_for(PathaKind::Jata);
        spec.template = vec![1, 0, 0, 1];
        assert!(spec.validate().is_err()); // must start at 0
        spec.template = vec![0, 1, 1];
        assert!(spec.validate().is_err()); // index 0 recited once
        spec.template = vec![0, 2, 2, 0];
        assert!(spec.validate().is_err()); // index out of window
        spec.template = vec![0, 1, 1, 0];
        spec.terminal.clear();
        assert!(spec.validate().is_err()); // missing terminal for r = 1
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in PathaKind::ALL {
            assert_eq!(kind.name().parse::<PathaKind>().unwrap(), kind);
        }
        let err = "krama".parse::<PathaKind>().unwrap_err();
        let msg = err.to_string();
        for kind in PathaKind::ALL {
            assert!(msg.contains(kind.name()), "{msg} missing {kind}");
        }
    }

    #[test]
    fn jata_positions_match_the_traditional_listing() {
        // 1 2 2 1 1 2 / 2 3 3 2 2 3 / 3 4 4 3 3 4 / 4 5 5 4 4 5
        let spec = spec_for(PathaKind::Jata);
        let positions: Vec<usize> = spec.layout(5).iter().map(|s| s.canonical_pos).collect();
        assert_eq!(
            positions,
            vec![1, 2, 2, 1, 1, 2, 2, 3, 3, 2, 2, 3, 3, 4, 4, 3, 3, 4, 4, 5, 5, 4, 4, 5]
        );
    }

    #[test]
    fn ghana_positions_match_the_traditional_listing() {
        // 12/21/123/321/123/23/32/234/432/234/34/43/345/543/345/45/54/45
        let spec = spec_for(PathaKind::Ghana);
        let positions: Vec<usize> = spec.layout(5).iter().map(|s| s.canonical_pos).collect();
        assert_eq!(
            positions,
            vec![
                1, 2, 2, 1, 1, 2, 3, 3, 2, 1, 1, 2, 3, //
                2, 3, 3, 2, 2, 3, 4, 4, 3, 2, 2, 3, 4, //
                3, 4, 4, 3, 3, 4, 5, 5, 4, 3, 3, 4, 5, //
                4, 5, 5, 4, 4, 5
            ]
        );
    }

    #[test]
    fn chain_length_closed_forms() {
        let jata = spec_for(PathaKind::Jata);
        for n in 2..=40 {
            assert_eq!(jata.chain_len(n), 6 * (n - 1));
        }
        let ghana = spec_for(PathaKind::Ghana);
        for n in 3..=40 {
            assert_eq!(ghana.chain_len(n), 13 * (n - 2) + 6);
        }
        assert_eq!(ghana.chain_len(2), 6);
        for kind in PathaKind::ALL {
            assert_eq!(spec_for(kind).chain_len(1), 6);
        }
    }

    #[test]
    fn every_canonical_position_is_recited_at_least_twice() {
        for kind in PathaKind::ALL {
            let spec = spec_for(kind);
            for n in 1..=12 {
                let mut counts = vec![0usize; n + 1];
                for slot in spec.layout(n) {
                    assert!((1..=n).contains(&slot.canonical_pos));
                    counts[slot.canonical_pos] += 1;
                }
                for pos in 1..=n {
                    assert!(
                        counts[pos] >= 2,
                        "{kind}, n={n}: position {pos} recited {} time(s)",
                        counts[pos]
                    );
                }
            }
        }
    }

    #[test]
    fn layout_group_metadata_is_consistent() {
        for kind in PathaKind::ALL {
            let spec = spec_for(kind);
            for n in 1..=10 {
                let layout = spec.layout(n);
                assert_eq!(layout.len(), spec.chain_len(n));
                let sizes = spec.group_sizes(n);
                let mut cursor = 0;
                for (g, size) in sizes.iter().enumerate() {
                    for slot in 0..*size {
                        assert_eq!(layout[cursor].group_index, g);
                        assert_eq!(layout[cursor].slot, slot);
                        cursor += 1;
                    }
                }
                assert_eq!(cursor, layout.len());
            }
        }
    }

    #[test]
    fn every_template_has_an_inverted_slot() {
        // Each pattern contains at least one reversed leg, so the phonetic
        // channel is non-trivial for every kind.
        for kind in PathaKind::ALL {
            let spec = spec_for(kind);
            let layout = spec.layout(spec.window + 2);
            assert!(
                layout.iter().any(|s| s.inverted),
                "{kind} has no inverted slot"
            );
        }
    }

    #[test]
    fn inverted_slots_follow_template_descents() {
        let spec = spec_for(PathaKind::Jata);
        let inv: Vec<bool> = spec.layout(3).iter().map(|s| s.inverted).collect();
        // Template 0 1 1 0 0 1: descents at slots 3 (1→0) only; slot 2 repeats.
        assert_eq!(
            inv,
            vec![false, false, false, true, false, false, false, false, false, true, false, false]
        );
    }

    #[test]
    fn verse_lengths_for_chain_is_exact() {
        for kind in PathaKind::ALL {
            let spec = spec_for(kind);
            for n in 1..=30 {
                let len = spec.chain_len(n);
                assert!(
                    spec.verse_lengths_for_chain(len).contains(&n),
                    "{kind}: n={n} not found for its own chain length {len}"
                );
            }
            assert!(spec.verse_lengths_for_chain(7).is_empty(), "{kind}");
            assert!(spec.verse_lengths_for_chain(0).is_empty(), "{kind}");
        }
    }
}
