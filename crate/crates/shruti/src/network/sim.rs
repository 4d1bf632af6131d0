//! Seeded fault-injection sweeps over the whole verification stack.
//!
//! Each trial builds a fresh corpus and society from a per-trial seed,
//! injects faults according to the configured adversary, then measures three
//! escalating layers of scrutiny: every reciter checking their own copy
//! (`individual`), each group voting internally (`intra_group`), and the
//! groups voting against each other (`inter_group`). Alarms accumulate
//! upward — a trial detected at a lower layer stays detected at the higher
//! ones — so the per-layer detection rates are monotone by construction and
//! the interesting question is what each layer *adds*.
//!
//! Everything is deterministic: per-trial seeds are derived statelessly from
//! the master seed, so identical configs replay to byte-identical CSV and
//! trials could run in any order.

use std::collections::BTreeSet;
use std::fmt;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    inter_group_consensus, intra_group_consensus, Group, MilliWeight, Reciter, UNIT_WEIGHT,
};
use crate::corpus::{make_corpus, semantic_digest, Verse};
use crate::integrity::{inject, verify_full, Fault, VerseEdit};
use crate::patha::{encode, spec_for, PathaKind, Recitation};

/// Simulation configuration, read from JSON with exactly these keys.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    pub trials: u64,
    /// Verses generated per trial.
    pub verses: usize,
    /// Inclusive verse-length bounds.
    pub length_range: [usize; 2],
    pub groups: Vec<GroupConfig>,
    pub fault: FaultConfig,
    /// "random", "single_group", or "captured:<n>".
    pub adversary: String,
    /// Consensus layers convene every this-many trials; on other trials the
    /// copies stand unexamined by the group layers.
    pub consensus_round_interval: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupConfig {
    pub patha: String,
    pub size: usize,
    /// Weight multiplier for the group's first member, its scholar; 1 means
    /// an ordinary reciter. At most three decimal places.
    pub scholar_weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultConfig {
    pub kind: String,
    /// Injection probability per target, in [0, 1].
    pub rate: f64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("trials must be ≥ 1")]
    Trials,
    #[error("verses must be ≥ 1")]
    Verses,
    #[error("length_range must satisfy 1 ≤ min ≤ max")]
    LengthRange,
    #[error("groups must not be empty")]
    NoGroups,
    #[error("groups[{index}].patha: {message}")]
    Patha { index: usize, message: String },
    #[error("groups[{index}].size must be ≥ 1")]
    GroupSize { index: usize },
    #[error("groups[{index}].scholar_weight must be ≥ 1 with at most 3 decimal places")]
    ScholarWeight { index: usize },
    #[error(
        "fault.kind must be one of substitute_occurrence, delete_occurrence, \
         insert_occurrence, transpose_adjacent, tone_flip, consistent_forgery; got {kind:?}"
    )]
    FaultKind { kind: String },
    #[error("fault.rate must lie within [0, 1]")]
    FaultRate,
    #[error("adversary must be \"random\", \"single_group\", or \"captured:<n>\"; got {value:?}")]
    Adversary { value: String },
    #[error("adversary \"captured:{count}\" exceeds the {groups} configured groups")]
    CapturedCount { count: usize, groups: usize },
    #[error("consensus_round_interval must be ≥ 1")]
    RoundInterval,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum FaultKind {
    Substitute,
    Delete,
    Insert,
    Transpose,
    ToneFlip,
    Forgery,
}

impl FaultKind {
    fn parse(kind: &str) -> Option<FaultKind> {
        match kind {
            "substitute_occurrence" => Some(FaultKind::Substitute),
            "delete_occurrence" => Some(FaultKind::Delete),
            "insert_occurrence" => Some(FaultKind::Insert),
            "transpose_adjacent" => Some(FaultKind::Transpose),
            "tone_flip" => Some(FaultKind::ToneFlip),
            "consistent_forgery" => Some(FaultKind::Forgery),
            _ => None,
        }
    }
}

/// Who controls the injected faults.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Adversary {
    /// Independent faults scattered over individual copies.
    Random,
    /// One group per trial recites an agreed-upon corruption.
    SingleGroup,
    /// This many groups per trial recite the *same* corruption.
    Captured(usize),
}

/// Scholar multiplier to integer thousandths; rejects more than three
/// decimal places so weights stay exact.
fn to_milli(value: f64) -> Option<MilliWeight> {
    if !value.is_finite() || value < 1.0 {
        return None;
    }
    let scaled = value * 1000.0;
    let rounded = scaled.round();
    if (scaled - rounded).abs() > 1e-6 || rounded > 1e15 {
        return None;
    }
    Some(rounded as MilliWeight)
}

/// The validated form of a config.
struct Plan {
    groups: Vec<(PathaKind, usize, MilliWeight)>,
    fault_kind: FaultKind,
    rate: f64,
    adversary: Adversary,
}

fn plan(config: &SimConfig) -> Result<Plan, ConfigError> {
    if config.trials < 1 {
        return Err(ConfigError::Trials);
    }
    if config.verses < 1 {
        return Err(ConfigError::Verses);
    }
    let [min, max] = config.length_range;
    if min < 1 || min > max {
        return Err(ConfigError::LengthRange);
    }
    if config.groups.is_empty() {
        return Err(ConfigError::NoGroups);
    }
    let mut groups = Vec::with_capacity(config.groups.len());
    for (index, group) in config.groups.iter().enumerate() {
        let kind: PathaKind = group.patha.parse().map_err(|e| ConfigError::Patha {
            index,
            message: format!("{e}"),
        })?;
        if group.size < 1 {
            return Err(ConfigError::GroupSize { index });
        }
        let scholar = to_milli(group.scholar_weight).ok_or(ConfigError::ScholarWeight { index })?;
        groups.push((kind, group.size, scholar));
    }
    let fault_kind =
        FaultKind::parse(&config.fault.kind).ok_or_else(|| ConfigError::FaultKind {
            kind: config.fault.kind.clone(),
        })?;
    if !config.fault.rate.is_finite() || !(0.0..=1.0).contains(&config.fault.rate) {
        return Err(ConfigError::FaultRate);
    }
    let adversary = match config.adversary.as_str() {
        "random" => Adversary::Random,
        "single_group" => Adversary::SingleGroup,
        other => {
            let count = other
                .strip_prefix("captured:")
                .and_then(|n| n.parse::<usize>().ok())
                .filter(|&n| n >= 1)
                .ok_or_else(|| ConfigError::Adversary {
                    value: other.to_string(),
                })?;
            if count > config.groups.len() {
                return Err(ConfigError::CapturedCount {
                    count,
                    groups: config.groups.len(),
                });
            }
            Adversary::Captured(count)
        }
    };
    if config.consensus_round_interval < 1 {
        return Err(ConfigError::RoundInterval);
    }
    Ok(Plan {
        groups,
        fault_kind,
        rate: config.fault.rate,
        adversary,
    })
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        plan(self).map(|_| ())
    }
}

/// Stateless per-trial seed derivation (a SplitMix64-style finalizer), so
/// any trial can be replayed alone and trials never share an RNG stream.
pub fn trial_seed(master: u64, trial: u64) -> u64 {
    let mut z = master ^ trial.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Which layer of scrutiny a metrics row describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Layer {
    Individual,
    IntraGroup,
    InterGroup,
}

impl Layer {
    pub const ALL: [Layer; 3] = [Layer::Individual, Layer::IntraGroup, Layer::InterGroup];

    pub fn name(self) -> &'static str {
        match self {
            Layer::Individual => "individual",
            Layer::IntraGroup => "intra_group",
            Layer::InterGroup => "inter_group",
        }
    }
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One CSV row: verse counts for one trial at one layer. `detected` is
/// cumulative over layers; `corrected` counts verses whose layer output
/// matches ground truth; `undetected` counts verses whose layer output is
/// silently wrong — corrupted yet unflagged below, or (at the top layer)
/// adopted as canonical despite differing from the truth.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MetricsRow {
    pub trial: u64,
    pub layer: Layer,
    pub detected: u64,
    pub corrected: u64,
    pub undetected: u64,
    pub ties: u64,
}

pub const CSV_HEADER: &str = "trial,layer,detected,corrected,undetected,ties";

pub fn rows_to_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::with_capacity(32 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            row.trial, row.layer, row.detected, row.corrected, row.undetected, row.ties
        );
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LayerSummary {
    pub layer: String,
    pub detected: u64,
    pub corrected: u64,
    pub undetected: u64,
    pub ties: u64,
    pub detection_rate: f64,
    pub correction_rate: f64,
    pub undetected_rate: f64,
}

/// Aggregate results plus the seed needed to replay them.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimSummary {
    pub seed: u64,
    pub trials: u64,
    pub verses_per_trial: usize,
    /// trials × verses: the denominator of every rate.
    pub verse_trials: u64,
    pub layers: Vec<LayerSummary>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimRun {
    pub rows: Vec<MetricsRow>,
    pub summary: SimSummary,
}

impl SimRun {
    pub fn csv(&self) -> String {
        rows_to_csv(&self.rows)
    }
}

fn sample_fault(rng: &mut ChaCha8Rng, kind: FaultKind, chain_len: usize, verse: &Verse) -> Fault {
    match kind {
        FaultKind::Substitute => Fault::SubstituteOccurrence {
            index: rng.gen_range(0..chain_len),
            replacement: None,
        },
        FaultKind::Delete => Fault::DeleteOccurrence {
            index: rng.gen_range(0..chain_len),
        },
        FaultKind::Insert => Fault::InsertOccurrence {
            index: rng.gen_range(0..=chain_len),
            token: None,
        },
        FaultKind::Transpose => Fault::TransposeAdjacent {
            index: rng.gen_range(0..chain_len - 1),
        },
        FaultKind::ToneFlip => Fault::ToneFlip {
            index: rng.gen_range(0..chain_len),
        },
        FaultKind::Forgery => Fault::ConsistentForgery {
            edit: sample_edit(rng, verse),
        },
    }
}

/// A verse-level rewrite that provably changes the verse. Prefers a token
/// reorder (semantically silent); verses without two distinct tokens get a
/// lemma change instead.
fn sample_edit(rng: &mut ChaCha8Rng, verse: &Verse) -> VerseEdit {
    let n = verse.len();
    if verse.tokens.iter().collect::<BTreeSet<_>>().len() > 1 {
        for _ in 0..64 {
            let mut order: Vec<usize> = (1..=n).collect();
            for i in (1..n).rev() {
                let j = rng.gen_range(0..=i);
                order.swap(i, j);
            }
            let changes = order
                .iter()
                .enumerate()
                .any(|(i, &p)| verse.tokens[p - 1] != verse.tokens[i]);
            if changes {
                return VerseEdit::Reorder { order };
            }
        }
    }
    let position = rng.gen_range(1..=n);
    let lemma = verse.tokens[position - 1].lemma_id ^ 0x5a5a_5a5a;
    VerseEdit::SetLemma { position, lemma }
}

/// Run the full sweep. Validates the config, then executes every trial
/// sequentially from independent per-trial seeds.
pub fn run_simulation(config: &SimConfig) -> Result<SimRun, ConfigError> {
    let plan = plan(config)?;
    let [min_len, max_len] = config.length_range;
    let mut rows = Vec::with_capacity(config.trials as usize * Layer::ALL.len());
    let mut totals = [[0u64; 4]; 3]; // per layer: detected, corrected, undetected, ties

    for trial in 0..config.trials {
        let base = trial_seed(config.seed, trial);
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(base, 1));
        let verses = make_corpus(trial_seed(base, 2), config.verses, (min_len, max_len))
            .expect("validated config always yields a corpus");

        // Build the society and hand every reciter a faithful copy.
        let mut groups: Vec<Group> = plan
            .groups
            .iter()
            .enumerate()
            .map(|(g, &(kind, size, scholar))| {
                Group::new(
                    format!("g{g}:{}", kind.name()),
                    kind,
                    (0..size)
                        .map(|m| {
                            let weight = if m == 0 { scholar } else { UNIT_WEIGHT };
                            Reciter::new(format!("g{g}:r{m}"), weight)
                                .expect("weights are validated positive")
                        })
                        .collect(),
                )
                .expect("validated group sizes are positive")
            })
            .collect();
        let truth_chains: Vec<Vec<Recitation>> = groups
            .iter()
            .map(|group| {
                verses
                    .iter()
                    .map(|v| encode(v, &spec_for(group.kind)))
                    .collect()
            })
            .collect();
        for (g, group) in groups.iter_mut().enumerate() {
            for (vi, verse) in verses.iter().enumerate() {
                group.distribute(&truth_chains[g][vi], semantic_digest(verse));
            }
        }

        // Fault injection, per adversary.
        match plan.adversary {
            Adversary::Random => {
                for g in 0..groups.len() {
                    for r in 0..groups[g].reciters.len() {
                        for (vi, verse) in verses.iter().enumerate() {
                            if !rng.gen_bool(plan.rate) {
                                continue;
                            }
                            let fault = sample_fault(
                                &mut rng,
                                plan.fault_kind,
                                truth_chains[g][vi].chain.len(),
                                verse,
                            );
                            let bad = inject(&truth_chains[g][vi], &fault, rng.gen())
                                .expect("sampled faults stay in bounds");
                            groups[g].reciters[r]
                                .copies
                                .insert(verse.verse_id.clone(), bad);
                        }
                    }
                }
            }
            Adversary::SingleGroup => {
                let target = rng.gen_range(0..groups.len());
                for (vi, verse) in verses.iter().enumerate() {
                    if !rng.gen_bool(plan.rate) {
                        continue;
                    }
                    let fault = sample_fault(
                        &mut rng,
                        plan.fault_kind,
                        truth_chains[target][vi].chain.len(),
                        verse,
                    );
                    let bad = inject(&truth_chains[target][vi], &fault, rng.gen())
                        .expect("sampled faults stay in bounds");
                    for reciter in &mut groups[target].reciters {
                        reciter.copies.insert(verse.verse_id.clone(), bad.clone());
                    }
                }
            }
            Adversary::Captured(count) => {
                let mut order: Vec<usize> = (0..groups.len()).collect();
                for i in 0..count {
                    let j = rng.gen_range(i..order.len());
                    order.swap(i, j);
                }
                let captured = &order[..count];
                for (vi, verse) in verses.iter().enumerate() {
                    if !rng.gen_bool(plan.rate) {
                        continue;
                    }
                    // All captured groups push one corruption. For forgeries
                    // the shared object is the verse edit, re-encoded under
                    // each group's own patha; for chain-level faults each
                    // group applies its own instance.
                    let shared_edit = match plan.fault_kind {
                        FaultKind::Forgery => Some(sample_edit(&mut rng, verse)),
                        _ => None,
                    };
                    for &g in captured {
                        let fault = match &shared_edit {
                            Some(edit) => Fault::ConsistentForgery { edit: edit.clone() },
                            None => sample_fault(
                                &mut rng,
                                plan.fault_kind,
                                truth_chains[g][vi].chain.len(),
                                verse,
                            ),
                        };
                        let bad = inject(&truth_chains[g][vi], &fault, rng.gen())
                            .expect("sampled faults stay in bounds");
                        for reciter in &mut groups[g].reciters {
                            reciter.copies.insert(verse.verse_id.clone(), bad.clone());
                        }
                    }
                }
            }
        }

        // Measure the three layers.
        let weights: Vec<MilliWeight> = groups.iter().map(Group::weight).collect();
        let convene = trial % config.consensus_round_interval == 0;
        let mut counts = [[0u64; 4]; 3];
        for (vi, verse) in verses.iter().enumerate() {
            let mut alarm_individual = false;
            let mut recovered_individual = true;
            let mut corrupt_copies = false;
            for (g, group) in groups.iter().enumerate() {
                let registered = group.registered[&verse.verse_id];
                for reciter in &group.reciters {
                    let copy = &reciter.copies[&verse.verse_id];
                    let report = verify_full(copy, &registered);
                    alarm_individual |= !report.overall;
                    recovered_individual &= report.semantic.passed;
                    corrupt_copies |= *copy != truth_chains[g][vi];
                }
            }

            let (alarm_intra, recovered_intra, corrupt_intra, tie_intra) = if convene {
                let mut alarm = false;
                let mut recovered = true;
                let mut corrupt = false;
                let mut tie = false;
                for (g, group) in groups.iter().enumerate() {
                    match intra_group_consensus(group, &verse.verse_id) {
                        Ok((chain, report)) => {
                            alarm |= !report.clean();
                            tie |= !report.tie_indices.is_empty() || report.length_tie;
                            if chain != truth_chains[g][vi] {
                                corrupt = true;
                                recovered = false;
                            }
                            // The group collectively re-checks its agreed
                            // recital, whatever the members voted.
                            let registered = group.registered[&verse.verse_id];
                            alarm |= !verify_full(&chain, &registered).overall;
                        }
                        Err(_) => {
                            alarm = true;
                            recovered = false;
                        }
                    }
                }
                (alarm, recovered, corrupt, tie)
            } else {
                // No round convened: the copies stand as they are.
                (false, recovered_individual, corrupt_copies, false)
            };

            let (alarm_inter, recovered_inter, corrupt_inter, tie_inter) = if convene {
                let outcome = inter_group_consensus(&groups, &verse.verse_id, &weights)
                    .expect("validated topology");
                let ok = outcome.canonical.as_ref() == Some(verse);
                let silent_wrong = matches!(&outcome.canonical, Some(c) if c != verse);
                (outcome.flagged(), ok, silent_wrong, outcome.tie)
            } else {
                (false, recovered_intra, corrupt_intra, false)
            };

            let detected = [
                alarm_individual,
                alarm_individual || alarm_intra,
                alarm_individual || alarm_intra || alarm_inter,
            ];
            let corrected = [recovered_individual, recovered_intra, recovered_inter];
            let undetected = [
                corrupt_copies && !detected[0],
                corrupt_intra && !detected[1],
                corrupt_inter,
            ];
            let ties = [false, tie_intra, tie_inter];
            for layer in 0..3 {
                counts[layer][0] += u64::from(detected[layer]);
                counts[layer][1] += u64::from(corrected[layer]);
                counts[layer][2] += u64::from(undetected[layer]);
                counts[layer][3] += u64::from(ties[layer]);
            }
        }

        for (layer_index, layer) in Layer::ALL.into_iter().enumerate() {
            let c = counts[layer_index];
            rows.push(MetricsRow {
                trial,
                layer,
                detected: c[0],
                corrected: c[1],
                undetected: c[2],
                ties: c[3],
            });
            for field in 0..4 {
                totals[layer_index][field] += c[field];
            }
        }
    }

    let verse_trials = config.trials * config.verses as u64;
    let rate = |count: u64| count as f64 / verse_trials as f64;
    let layers = Layer::ALL
        .into_iter()
        .enumerate()
        .map(|(i, layer)| LayerSummary {
            layer: layer.name().to_string(),
            detected: totals[i][0],
            corrected: totals[i][1],
            undetected: totals[i][2],
            ties: totals[i][3],
            detection_rate: rate(totals[i][0]),
            correction_rate: rate(totals[i][1]),
            undetected_rate: rate(totals[i][2]),
        })
        .collect();
    Ok(SimRun {
        rows,
        summary: SimSummary {
            seed: config.seed,
            trials: config.trials,
            verses_per_trial: config.verses,
            verse_trials,
            layers,
        },
    })
}
