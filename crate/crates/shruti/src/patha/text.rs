//! The recitation text form: occurrences joined by `/` within a group,
//! groups joined by ` // `, e.g. jata of `[a,b,c]`:
//!
//! ```text
//! a/b/b/a/a/b // b/c/c/b/b/c
//! ```
//!
//! A faithful occurrence renders as its bare surface. An occurrence whose
//! recited contour differs from what its slot prescribes renders annotated as
//! `surface^hlm` (tone letters after a caret), so tone-level faults survive
//! the round trip. Parsing resolves surfaces through a [`TokenLookup`];
//! surfaces outside the lookup become sentinel tokens that can never verify,
//! which turns silent hand edits into reportable integrity failures instead
//! of parse failures.
//!
//! Recitation files hold one verse per line: `verse_id<TAB>kind<TAB>text`.

use thiserror::Error;

use crate::corpus::{tone_letters, tones_from_letters, Corpus, Token, TokenLookup, Tone, Verse};
use crate::patha::codec::{structure, StructureError};
use crate::patha::{
    realize_tones, spec_for, Occurrence, PathaKind, PathaSpec, Recitation, UnknownPatha,
};

/// Lemma id of sentinel tokens standing in for surfaces the lookup does not
/// know. No generated corpus reaches it.
pub const SENTINEL_LEMMA: u64 = u64::MAX;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TextError {
    #[error("empty occurrence in group {group}")]
    EmptyOccurrence { group: usize },
    #[error("occurrence {text:?} is not a valid token surface")]
    BadSurface { text: String },
    #[error("invalid verse id {id:?}")]
    BadVerseId { id: String },
    #[error("expected `verse_id<TAB>kind<TAB>text`")]
    BadLineShape,
    #[error("corpus cannot back a surface lookup: {message}")]
    AmbiguousCorpus { message: String },
    #[error(transparent)]
    UnknownKind(#[from] UnknownPatha),
    #[error("line {line}: {source}")]
    InLine {
        line: usize,
        #[source]
        source: Box<TextError>,
    },
}

/// Split a rendered occurrence into surface and explicit tone annotation, if
/// the text ends in a well-formed `^hlm…` suffix.
fn split_annotation(text: &str) -> Option<(&str, Vec<Tone>)> {
    let caret = text.rfind('^')?;
    let (surface, suffix) = (&text[..caret], &text[caret + 1..]);
    if surface.is_empty() {
        return None;
    }
    Some((surface, tones_from_letters(suffix)?))
}

/// Render one chain in text form. The chain must be structurally valid — the
/// layout determines both the group boundaries and each slot's expected
/// contour.
pub fn render_text(recitation: &Recitation) -> Result<String, StructureError> {
    let (_, layout) = structure(recitation)?;
    let mut groups: Vec<Vec<String>> = Vec::new();
    for (ls, occ) in layout.iter().zip(&recitation.chain) {
        if ls.group_index == groups.len() {
            groups.push(Vec::new());
        }
        let expected = realize_tones(&occ.token.tones, ls.inverted);
        let faithful = occ.realized_tones == expected;
        // A surface that itself ends in a valid annotation suffix must render
        // annotated, otherwise parsing would strip part of the surface.
        let bare_is_safe = split_annotation(&occ.token.surface).is_none();
        let rendered = if faithful && bare_is_safe {
            occ.token.surface.clone()
        } else {
            format!(
                "{}^{}",
                occ.token.surface,
                tone_letters(&occ.realized_tones)
            )
        };
        groups
            .last_mut()
            .expect("group pushed above")
            .push(rendered);
    }
    Ok(groups
        .iter()
        .map(|g| g.join("/"))
        .collect::<Vec<_>>()
        .join(" // "))
}

fn valid_verse_id(id: &str) -> bool {
    !id.is_empty() && !id.contains('/') && !id.chars().any(char::is_whitespace)
}

/// Parse one verse's text form back into an occurrence chain.
///
/// `expected_n` disambiguates the degenerate chains that fit several verse
/// lengths (a six-fold repetition of one surface reads equally as a
/// single-token verse or a repeated pair); callers holding the corpus should
/// pass the known verse length. Text whose group shape fits no verse length
/// still parses — into a chain that fails the structure check, so
/// verification reports it as an integrity failure rather than a file error.
pub fn parse_text(
    kind: PathaKind,
    verse_id: &str,
    text: &str,
    lookup: &TokenLookup,
    expected_n: Option<usize>,
) -> Result<Recitation, TextError> {
    if !valid_verse_id(verse_id) {
        return Err(TextError::BadVerseId {
            id: verse_id.to_string(),
        });
    }
    let spec = spec_for(kind);
    let mut groups: Vec<Vec<(Token, Option<Vec<Tone>>)>> = Vec::new();
    for (g, group_text) in text.split(" // ").enumerate() {
        let mut group = Vec::new();
        for occ_text in group_text.split('/') {
            if occ_text.is_empty() {
                return Err(TextError::EmptyOccurrence { group: g });
            }
            let (surface, annotation) = match split_annotation(occ_text) {
                Some((s, tones)) => (s, Some(tones)),
                None => (occ_text, None),
            };
            let token = match lookup.get(surface) {
                Some(t) => t.clone(),
                None => Token::new(surface.to_string(), SENTINEL_LEMMA, vec![Tone::Mid]).map_err(
                    |_| TextError::BadSurface {
                        text: occ_text.to_string(),
                    },
                )?,
            };
            group.push((token, annotation));
        }
        groups.push(group);
    }

    let sizes: Vec<usize> = groups.iter().map(Vec::len).collect();
    let total = sizes.iter().sum();
    let shape_fits = |n: usize| spec.group_sizes(n) == sizes;
    let n = match expected_n {
        Some(n) if shape_fits(n) => Some(n),
        Some(_) => None,
        None => pick_consistent_length(
            &spec.verse_lengths_for_chain(total),
            &spec,
            &groups,
            shape_fits,
        ),
    };

    let chain = match n {
        Some(n) => spec
            .layout(n)
            .into_iter()
            .zip(groups.into_iter().flatten())
            .map(|(ls, (token, annotation))| {
                let realized_tones =
                    annotation.unwrap_or_else(|| realize_tones(&token.tones, ls.inverted));
                Occurrence {
                    canonical_pos: ls.canonical_pos,
                    group_index: ls.group_index,
                    slot: ls.slot,
                    token,
                    realized_tones,
                }
            })
            .collect(),
        // Shape fits no verse length: keep the occurrences with placeholder
        // metadata. The result always fails the structure check.
        None => groups
            .into_iter()
            .enumerate()
            .flat_map(|(g, group)| {
                group
                    .into_iter()
                    .enumerate()
                    .map(move |(slot, (token, annotation))| {
                        let realized_tones = annotation.unwrap_or_else(|| token.tones.clone());
                        Occurrence {
                            canonical_pos: 1,
                            group_index: g,
                            slot,
                            token,
                            realized_tones,
                        }
                    })
            })
            .collect(),
    };
    Ok(Recitation {
        verse_id: verse_id.to_string(),
        kind,
        chain,
    })
}

/// Among length candidates whose group shape matches, prefer one whose
/// occurrences are position-consistent; break remaining ties toward the
/// smallest length.
fn pick_consistent_length(
    candidates: &[usize],
    spec: &PathaSpec,
    groups: &[Vec<(Token, Option<Vec<Tone>>)>],
    shape_fits: impl Fn(usize) -> bool,
) -> Option<usize> {
    let fitting: Vec<usize> = candidates
        .iter()
        .copied()
        .filter(|&n| shape_fits(n))
        .collect();
    let flat: Vec<&Token> = groups.iter().flatten().map(|(t, _)| t).collect();
    fitting
        .iter()
        .copied()
        .find(|&n| {
            let layout = spec.layout(n);
            let mut per_pos: Vec<Option<&Token>> = vec![None; n];
            layout
                .iter()
                .zip(&flat)
                .all(|(ls, &tok)| match per_pos[ls.canonical_pos - 1] {
                    None => {
                        per_pos[ls.canonical_pos - 1] = Some(tok);
                        true
                    }
                    Some(existing) => existing == tok,
                })
        })
        .or_else(|| fitting.first().copied())
}

/// Render a set of chains as a recitation file, one line per chain.
pub fn render_recitation_file(recitations: &[Recitation]) -> Result<String, StructureError> {
    let mut out = String::new();
    for rec in recitations {
        out.push_str(&rec.verse_id);
        out.push('\t');
        out.push_str(rec.kind.name());
        out.push('\t');
        out.push_str(&render_text(rec)?);
        out.push('\n');
    }
    Ok(out)
}

/// Parse a recitation file against a corpus. The corpus provides both the
/// surface lookup and the expected verse lengths; lines naming verses the
/// corpus does not contain still parse (their surfaces resolve to sentinels).
pub fn parse_recitation_file(input: &str, corpus: &Corpus) -> Result<Vec<Recitation>, TextError> {
    let lookup =
        TokenLookup::from_verses(&corpus.verses).map_err(|e| TextError::AmbiguousCorpus {
            message: e.to_string(),
        })?;
    parse_recitation_file_with(input, &lookup, |id| corpus.get(id).map(Verse::len))
}

fn parse_recitation_file_with(
    input: &str,
    lookup: &TokenLookup,
    expected_n: impl Fn(&str) -> Option<usize>,
) -> Result<Vec<Recitation>, TextError> {
    let mut out = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let at = |e: TextError| TextError::InLine {
            line: idx + 1,
            source: Box::new(e),
        };
        let mut fields = line.splitn(3, '\t');
        let (verse_id, kind_name, text) = match (fields.next(), fields.next(), fields.next()) {
            (Some(a), Some(b), Some(c)) => (a, b, c),
            _ => return Err(at(TextError::BadLineShape)),
        };
        let kind: PathaKind = kind_name
            .parse()
            .map_err(|e: UnknownPatha| at(TextError::UnknownKind(e)))?;
        let rec = parse_text(kind, verse_id, text, lookup, expected_n(verse_id)).map_err(at)?;
        out.push(rec);
    }
    Ok(out)
}
