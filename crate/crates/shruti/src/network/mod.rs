//! The recitation society: groups of reciters, each group drilling one
//! patha, with plurality consensus inside a group and weighted voting across
//! groups.
//!
//! Consensus runs in two layers. Inside a group, members holding the same
//! patha vote occurrence by occurrence; a lone corrupted copy is simply
//! outvoted. Across groups, each group's agreed chain is decoded back to a
//! candidate verse and the candidates vote per position, so even a fully
//! captured group — every member holding the same self-consistent forgery —
//! is outvoted by the others. Neither layer knows the ground truth; both only
//! compare peers, which is what makes the capture-threshold experiments in
//! [`sim`] meaningful.
//!
//! Weights are carried in thousandths ([`MilliWeight`]) so scholar
//! multipliers like 1.5 stay exact in integer arithmetic.

pub mod sim;

use std::collections::{BTreeMap, BTreeSet};

use serde_json::json;
use thiserror::Error;

use crate::corpus::{semantic_digest, SemanticDigest, Token, Tone, Verse};
use crate::ledger::{canonical_event, Chain};
use crate::patha::{correct, decode, encode, spec_for, Occurrence, PathaKind, Recitation};

/// Voting weight in thousandths: `1500` is a weight of 1.5.
pub type MilliWeight = u64;

/// The weight of an ordinary reciter.
pub const UNIT_WEIGHT: MilliWeight = 1000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GroupError {
    #[error("group {group_id:?} has no reciters")]
    EmptyGroup { group_id: String },
    #[error("reciter {reciter_id:?} must carry positive weight")]
    ZeroWeight { reciter_id: String },
    #[error(
        "group {group_id:?}: reciter {reciter_id:?} holds a {found} copy in a {expected} group"
    )]
    KindMismatch {
        group_id: String,
        reciter_id: String,
        expected: PathaKind,
        found: PathaKind,
    },
    #[error("group {group_id:?} holds no copy of verse {verse_id:?}")]
    NoValidCopies { group_id: String, verse_id: String },
    #[error("{weights} weights supplied for {groups} groups")]
    WeightCount { weights: usize, groups: usize },
    #[error("consensus needs at least one group")]
    NoGroups,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AdmitError {
    #[error("verse {verse_id:?} is already registered")]
    DuplicateVerse { verse_id: String },
    #[error("no group is named {group_id:?}")]
    UnknownGroup { group_id: String },
    #[error("admission threshold must be a fraction strictly between 0 and 1")]
    BadThreshold,
    #[error(transparent)]
    Group(#[from] GroupError),
}

/// One member of a group, holding a private copy of every verse the group
/// has admitted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reciter {
    pub reciter_id: String,
    pub weight: MilliWeight,
    /// verse_id → this member's (possibly faulted) copy.
    pub copies: BTreeMap<String, Recitation>,
}

impl Reciter {
    pub fn new(reciter_id: impl Into<String>, weight: MilliWeight) -> Result<Reciter, GroupError> {
        let reciter_id = reciter_id.into();
        if weight == 0 {
            return Err(GroupError::ZeroWeight { reciter_id });
        }
        Ok(Reciter {
            reciter_id,
            weight,
            copies: BTreeMap::new(),
        })
    }
}

/// A recitation group: one patha, several reciters, and the semantic digests
/// the group has registered for its admitted verses.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Group {
    pub group_id: String,
    pub kind: PathaKind,
    pub reciters: Vec<Reciter>,
    pub registered: BTreeMap<String, SemanticDigest>,
}

impl Group {
    pub fn new(
        group_id: impl Into<String>,
        kind: PathaKind,
        reciters: Vec<Reciter>,
    ) -> Result<Group, GroupError> {
        let group_id = group_id.into();
        if reciters.is_empty() {
            return Err(GroupError::EmptyGroup { group_id });
        }
        Ok(Group {
            group_id,
            kind,
            reciters,
            registered: BTreeMap::new(),
        })
    }

    /// Combined voting weight of the membership.
    pub fn weight(&self) -> MilliWeight {
        self.reciters.iter().map(|r| r.weight).sum()
    }

    /// Hand every member the same copy and register the verse's digest —
    /// the distribution step after an admission.
    pub fn distribute(&mut self, recitation: &Recitation, digest: SemanticDigest) {
        for reciter in &mut self.reciters {
            reciter
                .copies
                .insert(recitation.verse_id.clone(), recitation.clone());
        }
        self.registered.insert(recitation.verse_id.clone(), digest);
    }
}

/// One member's disagreements with the group consensus.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dissent {
    pub reciter_id: String,
    /// Chain indices where this member's copy lost the vote.
    pub indices: Vec<usize>,
}

/// What an intra-group round observed. A clean report means every
/// participating copy agreed everywhere.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntraReport {
    pub group_id: String,
    /// Members excluded before voting: wrong chain length for the plurality.
    pub structurally_deviant: Vec<String>,
    pub dissenters: Vec<Dissent>,
    /// Chain indices where no occurrence held a strict weight plurality.
    pub tie_indices: Vec<usize>,
    /// The chain-length vote itself was tied.
    pub length_tie: bool,
}

impl IntraReport {
    pub fn clean(&self) -> bool {
        self.structurally_deviant.is_empty()
            && self.dissenters.is_empty()
            && self.tie_indices.is_empty()
            && !self.length_tie
    }
}

/// Occurrence-wise weighted plurality among one group's copies of a verse.
///
/// Copies first vote on chain length; members off the plurality length are
/// flagged structurally deviant and excluded, because positional voting
/// across misaligned chains is meaningless. The survivors then vote per
/// chain index on the occurrence material — token and recited contour
/// together, so tone corruption is outvoted the same way text corruption is.
/// All ties resolve to the lexicographically smallest candidate and are
/// recorded in the report.
pub fn intra_group_consensus(
    group: &Group,
    verse_id: &str,
) -> Result<(Recitation, IntraReport), GroupError> {
    if group.reciters.is_empty() {
        return Err(GroupError::EmptyGroup {
            group_id: group.group_id.clone(),
        });
    }
    let mut holders: Vec<(&Reciter, &Recitation)> = Vec::new();
    for reciter in &group.reciters {
        if let Some(copy) = reciter.copies.get(verse_id) {
            if copy.kind != group.kind {
                return Err(GroupError::KindMismatch {
                    group_id: group.group_id.clone(),
                    reciter_id: reciter.reciter_id.clone(),
                    expected: group.kind,
                    found: copy.kind,
                });
            }
            holders.push((reciter, copy));
        }
    }
    if holders.is_empty() {
        return Err(GroupError::NoValidCopies {
            group_id: group.group_id.clone(),
            verse_id: verse_id.to_string(),
        });
    }

    let mut length_votes: BTreeMap<usize, MilliWeight> = BTreeMap::new();
    for (reciter, copy) in &holders {
        *length_votes.entry(copy.chain.len()).or_default() += reciter.weight;
    }
    let top_weight = *length_votes.values().max().expect("holders is non-empty");
    let length_tie = length_votes.values().filter(|&&w| w == top_weight).count() > 1;
    // BTreeMap iterates lengths ascending, so a tie lands on the smallest.
    let consensus_len = *length_votes
        .iter()
        .find(|(_, &w)| w == top_weight)
        .expect("top weight came from this map")
        .0;

    let structurally_deviant: Vec<String> = holders
        .iter()
        .filter(|(_, copy)| copy.chain.len() != consensus_len)
        .map(|(r, _)| r.reciter_id.clone())
        .collect();
    let voters: Vec<&(&Reciter, &Recitation)> = holders
        .iter()
        .filter(|(_, copy)| copy.chain.len() == consensus_len)
        .collect();

    let mut chain: Vec<Occurrence> = Vec::with_capacity(consensus_len);
    let mut tie_indices = Vec::new();
    let mut dissent: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for index in 0..consensus_len {
        let mut votes: BTreeMap<(&Token, &[Tone]), MilliWeight> = BTreeMap::new();
        for (reciter, copy) in &voters {
            let occ = &copy.chain[index];
            *votes
                .entry((&occ.token, occ.realized_tones.as_slice()))
                .or_default() += reciter.weight;
        }
        let best = *votes.values().max().expect("voters is non-empty");
        if votes.values().filter(|&&w| w == best).count() > 1 {
            tie_indices.push(index);
        }
        let winner = votes
            .iter()
            .find(|(_, &w)| w == best)
            .expect("best weight came from this map")
            .0
             .0
            .clone();
        let winner_tones = votes
            .iter()
            .find(|(_, &w)| w == best)
            .expect("best weight came from this map")
            .0
             .1
            .to_vec();
        let template = voters
            .iter()
            .find(|(_, copy)| {
                copy.chain[index].token == winner
                    && copy.chain[index].realized_tones == winner_tones
            })
            .expect("the winning vote was cast by some voter");
        chain.push(template.1.chain[index].clone());
        for (reciter, copy) in &voters {
            let occ = &copy.chain[index];
            if occ.token != winner || occ.realized_tones != winner_tones {
                dissent.entry(&reciter.reciter_id).or_default().push(index);
            }
        }
    }

    let dissenters = group
        .reciters
        .iter()
        .filter_map(|r| {
            dissent.get(r.reciter_id.as_str()).map(|indices| Dissent {
                reciter_id: r.reciter_id.clone(),
                indices: indices.clone(),
            })
        })
        .collect();
    let recitation = Recitation {
        verse_id: verse_id.to_string(),
        kind: group.kind,
        chain,
    };
    let report = IntraReport {
        group_id: group.group_id.clone(),
        structurally_deviant,
        dissenters,
        tie_indices,
        length_tie,
    };
    Ok((recitation, report))
}

/// What the inter-group round concluded for one verse.
///
/// `canonical` is `None` only when voting could not resolve — a tie on verse
/// length or at some position — and in that case `tie` is set and
/// `unresolved_positions` says where. The flag lists name groups, and note
/// that under majority capture they name the *honest* minority: flags locate
/// disagreement, not guilt.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConsensusOutcome {
    pub canonical: Option<Verse>,
    /// Groups that produced no decodable candidate at all.
    pub structurally_failed: Vec<String>,
    /// Groups whose candidate lost the vote somewhere.
    pub outvoted: Vec<String>,
    /// Groups whose candidate's semantic digest differs from the canonical
    /// verse's.
    pub digest_mismatch: Vec<String>,
    pub unresolved_positions: Vec<usize>,
    pub tie: bool,
    pub intra: Vec<IntraReport>,
}

impl ConsensusOutcome {
    /// Did this round observe any disagreement at all?
    pub fn flagged(&self) -> bool {
        !self.structurally_failed.is_empty()
            || !self.outvoted.is_empty()
            || !self.digest_mismatch.is_empty()
            || !self.unresolved_positions.is_empty()
            || self.tie
    }
}

/// Position-wise weighted vote across groups.
///
/// Each group first reaches internal consensus, then repairs and decodes its
/// agreed chain into a candidate verse; candidates vote per canonical
/// position by group weight. Groups are weighted by `weights` (parallel to
/// `groups`), not by their own membership, so the caller controls the
/// trust distribution.
pub fn inter_group_consensus(
    groups: &[Group],
    verse_id: &str,
    weights: &[MilliWeight],
) -> Result<ConsensusOutcome, GroupError> {
    if groups.is_empty() {
        return Err(GroupError::NoGroups);
    }
    if weights.len() != groups.len() {
        return Err(GroupError::WeightCount {
            weights: weights.len(),
            groups: groups.len(),
        });
    }

    let mut intra = Vec::new();
    let mut structurally_failed = Vec::new();
    let mut candidates: Vec<(usize, Verse)> = Vec::new();
    for (g, group) in groups.iter().enumerate() {
        let recitation = match intra_group_consensus(group, verse_id) {
            Ok((recitation, report)) => {
                intra.push(report);
                recitation
            }
            Err(GroupError::NoValidCopies { .. }) => {
                structurally_failed.push(group.group_id.clone());
                continue;
            }
            Err(other) => return Err(other),
        };
        let candidate = correct(&recitation)
            .ok()
            .and_then(|(repaired, _)| decode(&repaired).ok());
        match candidate {
            Some(candidate) => candidates.push((g, candidate)),
            None => structurally_failed.push(group.group_id.clone()),
        }
    }

    let mut outcome = ConsensusOutcome {
        canonical: None,
        structurally_failed,
        outvoted: Vec::new(),
        digest_mismatch: Vec::new(),
        unresolved_positions: Vec::new(),
        tie: false,
        intra,
    };
    if candidates.is_empty() {
        return Ok(outcome);
    }

    let mut length_votes: BTreeMap<usize, MilliWeight> = BTreeMap::new();
    for (g, candidate) in &candidates {
        *length_votes.entry(candidate.len()).or_default() += weights[*g];
    }
    let top_weight = *length_votes
        .values()
        .max()
        .expect("candidates is non-empty");
    if length_votes.values().filter(|&&w| w == top_weight).count() > 1 {
        outcome.tie = true;
        return Ok(outcome);
    }
    let consensus_len = *length_votes
        .iter()
        .find(|(_, &w)| w == top_weight)
        .expect("top weight came from this map")
        .0;

    let mut outvoted: BTreeSet<String> = candidates
        .iter()
        .filter(|(_, c)| c.len() != consensus_len)
        .map(|(g, _)| groups[*g].group_id.clone())
        .collect();
    let voters: Vec<&(usize, Verse)> = candidates
        .iter()
        .filter(|(_, c)| c.len() == consensus_len)
        .collect();

    let mut tokens: Vec<Token> = Vec::with_capacity(consensus_len);
    for position in 0..consensus_len {
        let mut votes: BTreeMap<&Token, MilliWeight> = BTreeMap::new();
        for (g, candidate) in &voters {
            *votes.entry(&candidate.tokens[position]).or_default() += weights[*g];
        }
        let best = *votes.values().max().expect("voters is non-empty");
        if votes.values().filter(|&&w| w == best).count() > 1 {
            outcome.tie = true;
            outcome.unresolved_positions.push(position);
            continue;
        }
        let winner = (*votes
            .iter()
            .find(|(_, &w)| w == best)
            .expect("best weight came from this map")
            .0)
            .clone();
        for (g, candidate) in &voters {
            if candidate.tokens[position] != winner {
                outvoted.insert(groups[*g].group_id.clone());
            }
        }
        tokens.push(winner);
    }
    outcome.outvoted = outvoted.into_iter().collect();
    if !outcome.unresolved_positions.is_empty() {
        return Ok(outcome);
    }

    let canonical = Verse::new(verse_id.to_string(), tokens)
        .expect("winning tokens came from validated verses");
    let canonical_digest = semantic_digest(&canonical);
    for (g, candidate) in &candidates {
        if semantic_digest(candidate) != canonical_digest {
            let id = groups[*g].group_id.clone();
            if !outcome.digest_mismatch.contains(&id) {
                outcome.digest_mismatch.push(id);
            }
        }
    }
    outcome.canonical = Some(canonical);
    Ok(outcome)
}

/// Admission threshold as a fraction: accept when approval weight is
/// *strictly* greater than `num/den` of the total.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AdmissionPolicy {
    pub num: u32,
    pub den: u32,
}

impl AdmissionPolicy {
    pub fn new(num: u32, den: u32) -> Result<AdmissionPolicy, AdmitError> {
        if num == 0 || den == 0 || num >= den {
            return Err(AdmitError::BadThreshold);
        }
        Ok(AdmissionPolicy { num, den })
    }
}

impl Default for AdmissionPolicy {
    /// The conventional supermajority: more than two thirds.
    fn default() -> AdmissionPolicy {
        AdmissionPolicy { num: 2, den: 3 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdmissionOutcome {
    pub accepted: bool,
    pub approval_weight: MilliWeight,
    pub total_weight: MilliWeight,
}

/// Put a new verse to the groups. Groups named in `approvals` vote their
/// combined membership weight in favour; the verse is admitted when that
/// clears the policy threshold. On acceptance every group encodes the verse
/// under its own patha, hands each member a copy, registers the semantic
/// digest, and the admission is appended to the ledger.
pub fn admit_verse(
    groups: &mut [Group],
    verse: &Verse,
    proposer: &str,
    approvals: &BTreeSet<String>,
    policy: AdmissionPolicy,
    ledger: &mut Chain,
) -> Result<AdmissionOutcome, AdmitError> {
    if groups.is_empty() {
        return Err(AdmitError::Group(GroupError::NoGroups));
    }
    let known: BTreeSet<&str> = groups.iter().map(|g| g.group_id.as_str()).collect();
    if !known.contains(proposer) {
        return Err(AdmitError::UnknownGroup {
            group_id: proposer.to_string(),
        });
    }
    if let Some(unknown) = approvals.iter().find(|id| !known.contains(id.as_str())) {
        return Err(AdmitError::UnknownGroup {
            group_id: unknown.clone(),
        });
    }
    if groups
        .iter()
        .any(|g| g.registered.contains_key(&verse.verse_id))
    {
        return Err(AdmitError::DuplicateVerse {
            verse_id: verse.verse_id.clone(),
        });
    }

    let total_weight: MilliWeight = groups.iter().map(Group::weight).sum();
    let approval_weight: MilliWeight = groups
        .iter()
        .filter(|g| approvals.contains(&g.group_id))
        .map(|g| g.weight())
        .sum();
    let accepted = u128::from(approval_weight) * u128::from(policy.den)
        > u128::from(policy.num) * u128::from(total_weight);
    if accepted {
        let digest = semantic_digest(verse);
        for group in groups.iter_mut() {
            let recitation = encode(verse, &spec_for(group.kind));
            group.distribute(&recitation, digest);
        }
        ledger.append(&canonical_event(&json!({
            "event": "admit_verse",
            "verse_id": verse.verse_id,
            "digest": digest.to_string(),
            "proposer": proposer,
            "approval_weight": approval_weight,
            "total_weight": total_weight,
        })));
    }
    Ok(AdmissionOutcome {
        accepted,
        approval_weight,
        total_weight,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::make_corpus;
    use crate::integrity::{inject, verify_full, Fault, VerseEdit};
    use crate::ledger::SchemeRegistry;

    fn verse(tokens: &[(&str, u64)]) -> Verse {
        Verse::new(
            "v1".to_string(),
            tokens
                .iter()
                .map(|(s, l)| Token::new(s.to_string(), *l, vec![Tone::High, Tone::Mid]).unwrap())
                .collect(),
        )
        .unwrap()
    }

    fn uniform_group(group_id: &str, kind: PathaKind, members: usize, verse: &Verse) -> Group {
        let recitation = encode(verse, &spec_for(kind));
        let mut group = Group::new(
            group_id,
            kind,
            (0..members)
                .map(|i| Reciter::new(format!("{group_id}:r{i}"), UNIT_WEIGHT).unwrap())
                .collect(),
        )
        .unwrap();
        group.distribute(&recitation, semantic_digest(verse));
        group
    }

    fn corrupt(group: &mut Group, member: usize, fault: &Fault, seed: u64) {
        let copy = group.reciters[member].copies.get("v1").unwrap();
        let faulted = inject(copy, fault, seed).unwrap();
        group.reciters[member]
            .copies
            .insert("v1".to_string(), faulted);
    }

    /// Capture the whole group: every member now holds the same forged copy.
    fn capture(group: &mut Group, edit: VerseEdit, seed: u64) {
        let truth = group.reciters[0].copies.get("v1").unwrap().clone();
        let forged = inject(&truth, &Fault::ConsistentForgery { edit }, seed).unwrap();
        for member in 0..group.reciters.len() {
            group.reciters[member]
                .copies
                .insert("v1".to_string(), forged.clone());
        }
    }

    fn eight_groups(verse: &Verse, members: usize) -> Vec<Group> {
        PathaKind::ALL
            .iter()
            .map(|&kind| uniform_group(kind.name(), kind, members, verse))
            .collect()
    }

    #[test]
    fn identical_copies_agree_without_dissent() {
        let v = verse(&[("agni", 1), ("soma", 2), ("vayu", 3)]);
        let group = uniform_group("g", PathaKind::Jata, 5, &v);
        let (consensus, report) = intra_group_consensus(&group, "v1").unwrap();
        assert_eq!(consensus, encode(&v, &spec_for(PathaKind::Jata)));
        assert!(report.clean(), "{report:?}");
    }

    #[test]
    fn single_corrupted_copy_is_outvoted_and_named() {
        let v = verse(&[("agni", 1), ("soma", 2), ("vayu", 3)]);
        let mut group = uniform_group("g", PathaKind::Jata, 5, &v);
        corrupt(
            &mut group,
            2,
            &Fault::SubstituteOccurrence {
                index: 3,
                replacement: None,
            },
            9,
        );
        let (consensus, report) = intra_group_consensus(&group, "v1").unwrap();
        assert_eq!(consensus, encode(&v, &spec_for(PathaKind::Jata)));
        assert_eq!(
            report.dissenters,
            vec![Dissent {
                reciter_id: "g:r2".to_string(),
                indices: vec![3]
            }]
        );
        assert!(report.tie_indices.is_empty());
        assert!(report.structurally_deviant.is_empty());
    }

    #[test]
    fn tone_corruption_is_repaired_by_the_group() {
        let v = verse(&[("agni", 1), ("soma", 2), ("vayu", 3)]);
        let mut group = uniform_group("g", PathaKind::Ghana, 3, &v);
        corrupt(&mut group, 0, &Fault::ToneFlip { index: 7 }, 0);
        let (consensus, report) = intra_group_consensus(&group, "v1").unwrap();
        assert_eq!(consensus, encode(&v, &spec_for(PathaKind::Ghana)));
        assert_eq!(report.dissenters[0].indices, vec![7]);
    }

    #[test]
    fn weighted_scholar_can_capture_the_group() {
        let v = verse(&[("agni", 1), ("soma", 2), ("vayu", 3)]);
        let truth = encode(&v, &spec_for(PathaKind::Jata));
        let forged = inject(
            &truth,
            &Fault::ConsistentForgery {
                edit: VerseEdit::Reorder {
                    order: vec![2, 1, 3],
                },
            },
            0,
        )
        .unwrap();
        let mut group = Group::new(
            "g",
            PathaKind::Jata,
            vec![
                Reciter::new("honest-a", UNIT_WEIGHT).unwrap(),
                Reciter::new("honest-b", UNIT_WEIGHT).unwrap(),
                Reciter::new("scholar", 3 * UNIT_WEIGHT).unwrap(),
            ],
        )
        .unwrap();
        group
            .registered
            .insert("v1".to_string(), semantic_digest(&v));
        for reciter in &mut group.reciters {
            let copy = if reciter.reciter_id == "scholar" {
                &forged
            } else {
                &truth
            };
            reciter.copies.insert("v1".to_string(), copy.clone());
        }
        let (consensus, report) = intra_group_consensus(&group, "v1").unwrap();
        // 3000 beats 2000: the forgery becomes the group's official chain,
        // and the honest pair go on record as the dissenters.
        assert_eq!(consensus, forged);
        let ids: Vec<&str> = report
            .dissenters
            .iter()
            .map(|d| d.reciter_id.as_str())
            .collect();
        assert_eq!(ids, vec!["honest-a", "honest-b"]);
        assert!(!report.dissenters[0].indices.is_empty());
    }

    #[test]
    fn length_plurality_excludes_misshapen_copies() {
        let v = verse(&[("agni", 1), ("soma", 2), ("vayu", 3)]);
        let mut group = uniform_group("g", PathaKind::Jata, 3, &v);
        corrupt(&mut group, 1, &Fault::DeleteOccurrence { index: 5 }, 0);
        let (consensus, report) = intra_group_consensus(&group, "v1").unwrap();
        assert_eq!(consensus, encode(&v, &spec_for(PathaKind::Jata)));
        assert_eq!(report.structurally_deviant, vec!["g:r1".to_string()]);
        assert!(report.dissenters.is_empty());
    }

    #[test]
    fn even_split_records_a_tie_and_resolves_deterministically() {
        let v = verse(&[("agni", 1), ("soma", 2)]);
        let mut group = uniform_group("g", PathaKind::Mala, 2, &v);
        let zeta = Token::new("zeta".to_string(), 99, vec![Tone::Low]).unwrap();
        corrupt(
            &mut group,
            1,
            &Fault::SubstituteOccurrence {
                index: 0,
                replacement: Some(zeta.clone()),
            },
            0,
        );
        let (consensus, report) = intra_group_consensus(&group, "v1").unwrap();
        assert_eq!(report.tie_indices, vec![0]);
        // "agni" sorts before "zeta", so the honest token happens to win.
        assert_eq!(consensus.chain[0].token.surface, "agni");
        // Whoever lost the resolution is still recorded as dissenting.
        assert_eq!(report.dissenters.len(), 1);
    }

    #[test]
    fn missing_verse_is_no_valid_copies() {
        let v = verse(&[("agni", 1), ("soma", 2)]);
        let group = uniform_group("g", PathaKind::Jata, 3, &v);
        assert_eq!(
            intra_group_consensus(&group, "v999").unwrap_err(),
            GroupError::NoValidCopies {
                group_id: "g".to_string(),
                verse_id: "v999".to_string()
            }
        );
    }

    #[test]
    fn wrong_kind_copies_violate_the_group_invariant() {
        let v = verse(&[("agni", 1), ("soma", 2)]);
        let mut group = uniform_group("g", PathaKind::Jata, 2, &v);
        let stray = encode(&v, &spec_for(PathaKind::Ghana));
        group.reciters[1].copies.insert("v1".to_string(), stray);
        assert!(matches!(
            intra_group_consensus(&group, "v1"),
            Err(GroupError::KindMismatch { .. })
        ));
    }

    #[test]
    fn minority_corruption_never_survives_intra_consensus() {
        // Exhaustive at small scale: equal-weight groups of 2..=5, every
        // faulty subset holding strictly less than half the weight, a shared
        // wrong token at every chain index. The honest majority must win
        // every single time.
        let v = verse(&[("agni", 1), ("soma", 2), ("vayu", 3), ("mitra", 4)]);
        let truth = encode(&v, &spec_for(PathaKind::Jata));
        let wrong = Token::new("zzz".to_string(), 77, vec![Tone::Low]).unwrap();
        for members in 2..=5usize {
            for mask in 0u32..(1 << members) {
                let faulty = mask.count_ones() as usize;
                if faulty == 0 || 2 * faulty >= members {
                    continue;
                }
                for index in 0..truth.chain.len() {
                    let mut group = uniform_group("g", PathaKind::Jata, members, &v);
                    for member in 0..members {
                        if mask & (1 << member) != 0 {
                            corrupt(
                                &mut group,
                                member,
                                &Fault::SubstituteOccurrence {
                                    index,
                                    replacement: Some(wrong.clone()),
                                },
                                0,
                            );
                        }
                    }
                    let (consensus, report) = intra_group_consensus(&group, "v1").unwrap();
                    assert_eq!(
                        consensus, truth,
                        "members={members} mask={mask:b} index={index}"
                    );
                    assert_eq!(report.dissenters.len(), faulty);
                    assert!(report.tie_indices.is_empty());
                }
            }
        }
    }

    #[test]
    fn majority_corruption_captures_intra_consensus() {
        // The dual bound: an identical corruption holding a strict weight
        // majority becomes the consensus.
        let v = verse(&[("agni", 1), ("soma", 2), ("vayu", 3)]);
        let wrong = Token::new("zzz".to_string(), 77, vec![Tone::Low]).unwrap();
        for members in 2..=5usize {
            for mask in 0u32..(1 << members) {
                let faulty = mask.count_ones() as usize;
                if 2 * faulty <= members {
                    continue;
                }
                let mut group = uniform_group("g", PathaKind::Jata, members, &v);
                for member in 0..members {
                    if mask & (1 << member) != 0 {
                        corrupt(
                            &mut group,
                            member,
                            &Fault::SubstituteOccurrence {
                                index: 2,
                                replacement: Some(wrong.clone()),
                            },
                            0,
                        );
                    }
                }
                let (consensus, _) = intra_group_consensus(&group, "v1").unwrap();
                assert_eq!(
                    consensus.chain[2].token, wrong,
                    "members={members} mask={mask:b}"
                );
            }
        }
    }

    #[test]
    fn eight_honest_groups_recover_ground_truth() {
        let v = verse(&[("agni", 1), ("soma", 2), ("vayu", 3), ("mitra", 4)]);
        let groups = eight_groups(&v, 2);
        let weights = vec![UNIT_WEIGHT; groups.len()];
        let outcome = inter_group_consensus(&groups, "v1", &weights).unwrap();
        assert_eq!(outcome.canonical.as_ref(), Some(&v));
        assert!(!outcome.flagged(), "{outcome:?}");
        assert!(outcome.intra.iter().all(IntraReport::clean));
    }

    #[test]
    fn one_captured_group_is_outvoted_and_flagged() {
        let v = verse(&[("agni", 1), ("soma", 2), ("vayu", 3), ("mitra", 4)]);
        let mut groups = eight_groups(&v, 3);
        capture(
            &mut groups[5],
            VerseEdit::SetLemma {
                position: 2,
                lemma: 777,
            },
            1,
        );
        let weights = vec![UNIT_WEIGHT; groups.len()];
        let outcome = inter_group_consensus(&groups, "v1", &weights).unwrap();
        assert_eq!(outcome.canonical.as_ref(), Some(&v));
        let captured = groups[5].group_id.clone();
        assert_eq!(outcome.outvoted, vec![captured.clone()]);
        assert_eq!(outcome.digest_mismatch, vec![captured]);
        // Inside the captured group everyone agrees; only the cross-group
        // layer sees anything wrong.
        assert!(outcome.intra.iter().all(IntraReport::clean));
    }

    #[test]
    fn majority_capture_flips_the_canonical_verse() {
        let v = verse(&[("agni", 1), ("soma", 2), ("vayu", 3), ("mitra", 4)]);
        let mut groups = eight_groups(&v, 3);
        let edit = VerseEdit::Reorder {
            order: vec![2, 1, 4, 3],
        };
        for g in 0..5 {
            capture(&mut groups[g], edit.clone(), 1);
        }
        let weights = vec![UNIT_WEIGHT; groups.len()];
        let outcome = inter_group_consensus(&groups, "v1", &weights).unwrap();
        let forged = outcome.canonical.clone().unwrap();
        assert_ne!(forged, v);
        assert_eq!(forged.tokens[0], v.tokens[1]);
        // The flags accuse the honest minority — capture inverts blame.
        let mut honest: Vec<String> = groups[5..].iter().map(|g| g.group_id.clone()).collect();
        honest.sort();
        assert_eq!(outcome.outvoted, honest);
        // A reorder keeps the lemma multiset, so digests all agree: the
        // forgery is semantically silent end to end.
        assert!(outcome.digest_mismatch.is_empty());
        // Every copy still passes individual verification.
        for group in &groups {
            for reciter in &group.reciters {
                let copy = reciter.copies.get("v1").unwrap();
                assert!(verify_full(copy, &group.registered["v1"]).overall);
            }
        }
    }

    #[test]
    fn minority_capture_is_defeated() {
        let v = verse(&[("agni", 1), ("soma", 2), ("vayu", 3), ("mitra", 4)]);
        let mut groups = eight_groups(&v, 3);
        let edit = VerseEdit::Reorder {
            order: vec![2, 1, 4, 3],
        };
        for g in 0..3 {
            capture(&mut groups[g], edit.clone(), 1);
        }
        let weights = vec![UNIT_WEIGHT; groups.len()];
        let outcome = inter_group_consensus(&groups, "v1", &weights).unwrap();
        assert_eq!(outcome.canonical.as_ref(), Some(&v));
        let mut captured: Vec<String> = groups[..3].iter().map(|g| g.group_id.clone()).collect();
        captured.sort();
        assert_eq!(outcome.outvoted, captured);
    }

    #[test]
    fn weighted_minority_of_groups_can_still_capture() {
        // Two groups out of eight, but carrying over half the total weight.
        let v = verse(&[("agni", 1), ("soma", 2), ("vayu", 3), ("mitra", 4)]);
        let mut groups = eight_groups(&v, 3);
        let edit = VerseEdit::Reorder {
            order: vec![2, 1, 4, 3],
        };
        capture(&mut groups[0], edit.clone(), 1);
        capture(&mut groups[1], edit, 1);
        let mut weights = vec![UNIT_WEIGHT; groups.len()];
        weights[0] = 4 * UNIT_WEIGHT;
        weights[1] = 4 * UNIT_WEIGHT;
        let outcome = inter_group_consensus(&groups, "v1", &weights).unwrap();
        assert_ne!(outcome.canonical.as_ref(), Some(&v));
    }

    #[test]
    fn structurally_broken_group_is_reported_not_fatal() {
        let v = verse(&[("agni", 1), ("soma", 2), ("vayu", 3)]);
        let mut groups = eight_groups(&v, 2);
        // Both members lose an occurrence at the same index: the group's
        // consensus chain has an impossible length and cannot decode.
        corrupt(&mut groups[2], 0, &Fault::DeleteOccurrence { index: 1 }, 0);
        corrupt(&mut groups[2], 1, &Fault::DeleteOccurrence { index: 1 }, 0);
        let weights = vec![UNIT_WEIGHT; groups.len()];
        let outcome = inter_group_consensus(&groups, "v1", &weights).unwrap();
        assert_eq!(outcome.canonical.as_ref(), Some(&v));
        assert_eq!(
            outcome.structurally_failed,
            vec![groups[2].group_id.clone()]
        );
    }

    #[test]
    fn two_group_disagreement_is_an_unresolved_tie() {
        let v = verse(&[("agni", 1), ("soma", 2), ("vayu", 3)]);
        let mut groups: Vec<Group> = vec![
            uniform_group("jata", PathaKind::Jata, 2, &v),
            uniform_group("mala", PathaKind::Mala, 2, &v),
        ];
        capture(
            &mut groups[1],
            VerseEdit::ReplaceToken {
                position: 1,
                token: Token::new("zzz".to_string(), 77, vec![Tone::Low]).unwrap(),
            },
            0,
        );
        let outcome = inter_group_consensus(&groups, "v1", &[UNIT_WEIGHT, UNIT_WEIGHT]).unwrap();
        assert!(outcome.canonical.is_none());
        assert!(outcome.tie);
        assert_eq!(outcome.unresolved_positions, vec![0]);
    }

    #[test]
    fn group_weight_parameter_is_validated() {
        let v = verse(&[("agni", 1), ("soma", 2)]);
        let groups = eight_groups(&v, 2);
        assert_eq!(
            inter_group_consensus(&groups, "v1", &[UNIT_WEIGHT; 3]).unwrap_err(),
            GroupError::WeightCount {
                weights: 3,
                groups: 8
            }
        );
        assert_eq!(
            inter_group_consensus(&[], "v1", &[]).unwrap_err(),
            GroupError::NoGroups
        );
    }

    fn fresh_society() -> (Vec<Group>, Chain) {
        let groups: Vec<Group> = PathaKind::ALL
            .iter()
            .map(|&kind| {
                Group::new(
                    kind.name(),
                    kind,
                    vec![Reciter::new(format!("{}:r0", kind.name()), UNIT_WEIGHT).unwrap()],
                )
                .unwrap()
            })
            .collect();
        let ledger = Chain::new(SchemeRegistry::standard(3).unwrap());
        (groups, ledger)
    }

    fn ids(names: &[&str]) -> BTreeSet<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn admission_thresholds_match_the_arithmetic() {
        let v = verse(&[("agni", 1), ("soma", 2), ("vayu", 3)]);
        let all: Vec<&str> = PathaKind::ALL.iter().map(|k| k.name()).collect();

        // 5 of 8 equal weights is 0.625: under the strict > 2/3 rule, rejected.
        let (mut groups, mut ledger) = fresh_society();
        let five = ids(&all[..5]);
        let outcome = admit_verse(
            &mut groups,
            &v,
            "jata",
            &five,
            AdmissionPolicy::default(),
            &mut ledger,
        )
        .unwrap();
        assert!(!outcome.accepted);
        assert_eq!(outcome.approval_weight, 5 * UNIT_WEIGHT);
        assert_eq!(outcome.total_weight, 8 * UNIT_WEIGHT);
        assert!(groups.iter().all(|g| g.registered.is_empty()));
        assert_eq!(ledger.blocks().len(), 1, "rejection appends nothing");

        // 6 of 8 is 0.75: accepted.
        let six = ids(&all[..6]);
        let outcome = admit_verse(
            &mut groups,
            &v,
            "jata",
            &six,
            AdmissionPolicy::default(),
            &mut ledger,
        )
        .unwrap();
        assert!(outcome.accepted);
        assert_eq!(ledger.blocks().len(), 2);
    }

    #[test]
    fn unanimous_admission_distributes_consistent_encodings() {
        let v = verse(&[("agni", 1), ("soma", 2), ("vayu", 3)]);
        let all = ids(&PathaKind::ALL.iter().map(|k| k.name()).collect::<Vec<_>>());
        let (mut groups, mut ledger) = fresh_society();
        let outcome = admit_verse(
            &mut groups,
            &v,
            "ghana",
            &all,
            AdmissionPolicy::default(),
            &mut ledger,
        )
        .unwrap();
        assert!(outcome.accepted);
        let digest = semantic_digest(&v);
        for group in &groups {
            assert_eq!(group.registered.get("v1"), Some(&digest));
            for reciter in &group.reciters {
                let copy = reciter.copies.get("v1").unwrap();
                assert_eq!(copy.kind, group.kind);
                assert_eq!(decode(copy).unwrap(), v);
            }
        }
        // The ledger holds exactly the admission event, canonically encoded.
        let payload = &ledger.blocks()[1].payload;
        let text = String::from_utf8(payload.clone()).unwrap();
        assert!(
            text.starts_with(r#"{"approval_weight":8000,"digest":"#),
            "{text}"
        );
        assert!(text.contains(r#""event":"admit_verse""#));
        assert!(text.contains(r#""verse_id":"v1""#));
    }

    #[test]
    fn duplicate_admission_is_rejected() {
        let v = verse(&[("agni", 1), ("soma", 2)]);
        let all = ids(&PathaKind::ALL.iter().map(|k| k.name()).collect::<Vec<_>>());
        let (mut groups, mut ledger) = fresh_society();
        admit_verse(
            &mut groups,
            &v,
            "jata",
            &all,
            AdmissionPolicy::default(),
            &mut ledger,
        )
        .unwrap();
        assert_eq!(
            admit_verse(
                &mut groups,
                &v,
                "jata",
                &all,
                AdmissionPolicy::default(),
                &mut ledger
            )
            .unwrap_err(),
            AdmitError::DuplicateVerse {
                verse_id: "v1".to_string()
            }
        );
    }

    #[test]
    fn admission_validates_its_inputs() {
        let v = verse(&[("agni", 1)]);
        let (mut groups, mut ledger) = fresh_society();
        assert_eq!(
            admit_verse(
                &mut groups,
                &v,
                "nobody",
                &BTreeSet::new(),
                AdmissionPolicy::default(),
                &mut ledger
            )
            .unwrap_err(),
            AdmitError::UnknownGroup {
                group_id: "nobody".to_string()
            }
        );
        assert_eq!(
            admit_verse(
                &mut groups,
                &v,
                "jata",
                &ids(&["ghost"]),
                AdmissionPolicy::default(),
                &mut ledger
            )
            .unwrap_err(),
            AdmitError::UnknownGroup {
                group_id: "ghost".to_string()
            }
        );
        assert_eq!(
            AdmissionPolicy::new(3, 3).unwrap_err(),
            AdmitError::BadThreshold
        );
        assert_eq!(
            AdmissionPolicy::new(0, 3).unwrap_err(),
            AdmitError::BadThreshold
        );
    }

    #[test]
    fn honest_rounds_over_generated_corpora_raise_no_flags() {
        // Zero false accusations across every patha and a spread of verse
        // lengths, with no faults anywhere.
        let verses = make_corpus(11, 12, (1, 9)).unwrap();
        for v in &verses {
            let groups: Vec<Group> = PathaKind::ALL
                .iter()
                .map(|&kind| {
                    let mut g = Group::new(
                        kind.name(),
                        kind,
                        vec![
                            Reciter::new(format!("{}:r0", kind.name()), UNIT_WEIGHT).unwrap(),
                            Reciter::new(format!("{}:r1", kind.name()), 2 * UNIT_WEIGHT).unwrap(),
                            Reciter::new(format!("{}:r2", kind.name()), UNIT_WEIGHT).unwrap(),
                        ],
                    )
                    .unwrap();
                    g.distribute(&encode(v, &spec_for(kind)), semantic_digest(v));
                    g
                })
                .collect();
            let weights: Vec<MilliWeight> = groups.iter().map(Group::weight).collect();
            let outcome = inter_group_consensus(&groups, &v.verse_id, &weights).unwrap();
            assert_eq!(outcome.canonical.as_ref(), Some(v));
            assert!(!outcome.flagged(), "verse {}: {outcome:?}", v.verse_id);
            assert!(outcome.intra.iter().all(IntraReport::clean));
        }
    }
}
