//! Append-only event chain committed under several independent digest
//! schemes at once.
//!
//! Every block carries one digest per registered scheme, and a link counts as
//! valid when at least `m` of the `k` schemes verify. A classical single-hash
//! chain is the k = 1, m = 1 corner: compromise that one scheme and tampering
//! goes unnoticed. With independently keyed schemes an attacker must defeat
//! `k − m + 1` of them before a tampered block survives verification —
//! [`tamper_experiment`] measures exactly that.
//!
//! Scheme compromise is modeled as a collision oracle: the attacker can craft
//! a replacement payload that the compromised scheme still maps to the
//! *stored* digest, so linkage stays intact and the tamper is visible only to
//! the honest schemes at the edited height. The shipped registry consists of
//! domain-separated SHA-256 instances (the domain tag plays the role of the
//! scheme key in this model) plus a deliberately weak 16-bit toy scheme whose
//! collisions are findable by brute force — no oracle flag needed.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine as _;
use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LedgerError {
    #[error("policy requires 1 ≤ m ≤ k, got m={m}, k={k}")]
    BadPolicy { k: usize, m: usize },
    #[error("compromised count {c} exceeds the {k} registered schemes")]
    TooManyCompromised { c: usize, k: usize },
    #[error("duplicate scheme id {id:?}")]
    DuplicateScheme { id: String },
    #[error("unknown scheme id {id:?}")]
    UnknownScheme { id: String },
    #[error("a registry needs at least one scheme")]
    EmptyRegistry,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ChainFormatError {
    #[error("chain file has no blocks")]
    Empty,
    #[error("line {line}: {message}")]
    Json { line: usize, message: String },
    #[error("line {line}: payload is not valid base64")]
    Base64 { line: usize },
    #[error("line {line}: digest is not valid lowercase hex")]
    Hex { line: usize },
    #[error("line {line}: expected height {expected}, found {found}")]
    Height {
        line: usize,
        expected: u64,
        found: u64,
    },
    #[error("line {line}: scheme list differs from the chain's registry")]
    SchemeSet { line: usize },
    #[error("line {line}: digest count or width does not match the registry")]
    Shape { line: usize },
    #[error(transparent)]
    Registry(#[from] LedgerError),
}

/// One digest algorithm with a stable id. `compromised` is a simulation
/// switch: it stands for "the attacker owns this scheme's collision oracle"
/// and is consulted only when verifying, never serialized.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DigestScheme {
    pub scheme_id: String,
    kind: SchemeKind,
    pub compromised: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum SchemeKind {
    /// SHA-256 over a domain-tag prefix. Distinct tags make the instances
    /// independent: a collision under one tag is useless under another.
    Sha256Tagged { tag: String },
    /// FNV-1a folded to 16 bits. Deliberately breakable by enumeration.
    ToyFnv16,
}

impl DigestScheme {
    pub fn sha256_tagged(tag: &str) -> DigestScheme {
        DigestScheme {
            scheme_id: format!("sha256:{tag}"),
            kind: SchemeKind::Sha256Tagged {
                tag: tag.to_string(),
            },
            compromised: false,
        }
    }

    pub fn toy() -> DigestScheme {
        DigestScheme {
            scheme_id: "toy:fnv16".to_string(),
            kind: SchemeKind::ToyFnv16,
            compromised: false,
        }
    }

    fn from_id(id: &str) -> Result<DigestScheme, LedgerError> {
        if id == "toy:fnv16" {
            return Ok(DigestScheme::toy());
        }
        match id.strip_prefix("sha256:") {
            Some(tag) if !tag.is_empty() && tag.bytes().all(|b| b.is_ascii_graphic()) => {
                Ok(DigestScheme::sha256_tagged(tag))
            }
            _ => Err(LedgerError::UnknownScheme { id: id.to_string() }),
        }
    }

    pub fn digest_len(&self) -> usize {
        match self.kind {
            SchemeKind::Sha256Tagged { .. } => 32,
            SchemeKind::ToyFnv16 => 2,
        }
    }

    pub fn compute(&self, preimage: &[u8]) -> Vec<u8> {
        match &self.kind {
            SchemeKind::Sha256Tagged { tag } => {
                let mut hasher = Sha256::new();
                hasher.update(b"shruti.ledger.v1:");
                hasher.update(tag.as_bytes());
                hasher.update([0u8]);
                hasher.update(preimage);
                hasher.finalize().to_vec()
            }
            SchemeKind::ToyFnv16 => {
                let mut state: u64 = 0xcbf2_9ce4_8422_2325;
                for &b in preimage {
                    state ^= u64::from(b);
                    state = state.wrapping_mul(0x0000_0100_0000_01b3);
                }
                let folded = (state ^ (state >> 16) ^ (state >> 32) ^ (state >> 48)) as u16;
                folded.to_be_bytes().to_vec()
            }
        }
    }
}

/// An ordered set of digest schemes with unique ids. Scheme order (by id) is
/// the canonical digest order inside every block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SchemeRegistry {
    schemes: Vec<DigestScheme>,
}

impl SchemeRegistry {
    pub fn new(mut schemes: Vec<DigestScheme>) -> Result<SchemeRegistry, LedgerError> {
        if schemes.is_empty() {
            return Err(LedgerError::EmptyRegistry);
        }
        schemes.sort_by(|a, b| a.scheme_id.cmp(&b.scheme_id));
        for pair in schemes.windows(2) {
            if pair[0].scheme_id == pair[1].scheme_id {
                return Err(LedgerError::DuplicateScheme {
                    id: pair[0].scheme_id.clone(),
                });
            }
        }
        Ok(SchemeRegistry { schemes })
    }

    /// `k` independent SHA-256 instances tagged `t1 … tk`.
    pub fn standard(k: usize) -> Result<SchemeRegistry, LedgerError> {
        SchemeRegistry::new(
            (1..=k)
                .map(|i| DigestScheme::sha256_tagged(&format!("t{i}")))
                .collect(),
        )
    }

    pub fn from_ids<'a, I: IntoIterator<Item = &'a str>>(
        ids: I,
    ) -> Result<SchemeRegistry, LedgerError> {
        SchemeRegistry::new(
            ids.into_iter()
                .map(DigestScheme::from_id)
                .collect::<Result<Vec<_>, _>>()?,
        )
    }

    pub fn schemes(&self) -> &[DigestScheme] {
        &self.schemes
    }

    pub fn len(&self) -> usize {
        self.schemes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.schemes.is_empty()
    }

    pub fn set_compromised(
        &mut self,
        scheme_id: &str,
        compromised: bool,
    ) -> Result<(), LedgerError> {
        match self.schemes.iter_mut().find(|s| s.scheme_id == scheme_id) {
            Some(s) => {
                s.compromised = compromised;
                Ok(())
            }
            None => Err(LedgerError::UnknownScheme {
                id: scheme_id.to_string(),
            }),
        }
    }
}

/// Acceptance rule: a link is valid iff at least `m` of the `k` registered
/// schemes verify.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChainPolicy {
    pub k: usize,
    pub m: usize,
}

impl ChainPolicy {
    pub fn new(k: usize, m: usize) -> Result<ChainPolicy, LedgerError> {
        if m < 1 || m > k {
            return Err(LedgerError::BadPolicy { k, m });
        }
        Ok(ChainPolicy { k, m })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub height: u64,
    pub payload: Vec<u8>,
    /// Previous block's digests, in scheme order; all-zero for genesis.
    pub prev_digests: Vec<Vec<u8>>,
    pub digests: Vec<Vec<u8>>,
}

/// Digest preimage for a block: a domain tag, the height and payload length
/// (both fixed-width big-endian), the payload, then every previous digest in
/// scheme order. Height in the preimage makes identical payloads at different
/// heights hash differently.
pub fn preimage(height: u64, payload: &[u8], prev_digests: &[Vec<u8>]) -> Vec<u8> {
    let mut out = Vec::with_capacity(32 + payload.len());
    out.extend_from_slice(b"shruti.block.v1\x00");
    out.extend_from_slice(&height.to_be_bytes());
    out.extend_from_slice(&(payload.len() as u64).to_be_bytes());
    out.extend_from_slice(payload);
    for prev in prev_digests {
        out.extend_from_slice(prev);
    }
    out
}

/// The chain itself: a genesis block plus appended event blocks. Appending is
/// the only mutation; existing blocks are never rewritten (the tamper harness
/// clones the chain first).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chain {
    registry: SchemeRegistry,
    blocks: Vec<Block>,
}

impl Chain {
    /// A fresh chain holding only the genesis block (height 0, empty payload,
    /// all-zero previous digests).
    pub fn new(registry: SchemeRegistry) -> Chain {
        let prev_digests: Vec<Vec<u8>> = registry
            .schemes()
            .iter()
            .map(|s| vec![0u8; s.digest_len()])
            .collect();
        let genesis_preimage = preimage(0, b"", &prev_digests);
        let digests = registry
            .schemes()
            .iter()
            .map(|s| s.compute(&genesis_preimage))
            .collect();
        Chain {
            registry,
            blocks: vec![Block {
                height: 0,
                payload: Vec::new(),
                prev_digests,
                digests,
            }],
        }
    }

    pub fn registry(&self) -> &SchemeRegistry {
        &self.registry
    }

    pub fn registry_mut(&mut self) -> &mut SchemeRegistry {
        &mut self.registry
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn tip(&self) -> &Block {
        self.blocks.last().expect("a chain always holds genesis")
    }

    pub fn append(&mut self, payload: &[u8]) -> &Block {
        let tip = self.tip();
        let height = tip.height + 1;
        let prev_digests = tip.digests.clone();
        let block_preimage = preimage(height, payload, &prev_digests);
        let digests = self
            .registry
            .schemes()
            .iter()
            .map(|s| s.compute(&block_preimage))
            .collect();
        self.blocks.push(Block {
            height,
            payload: payload.to_vec(),
            prev_digests,
            digests,
        });
        self.tip()
    }

    /// Serialize as JSON lines, one block per line.
    pub fn save(&self) -> String {
        let scheme_ids: Vec<&str> = self
            .registry
            .schemes()
            .iter()
            .map(|s| s.scheme_id.as_str())
            .collect();
        let mut out = String::new();
        for block in &self.blocks {
            let raw = RawBlock {
                h: block.height,
                payload: BASE64.encode(&block.payload),
                prev: block.prev_digests.iter().map(hex::encode).collect(),
                dig: block.digests.iter().map(hex::encode).collect(),
                schemes: scheme_ids.iter().map(|s| s.to_string()).collect(),
            };
            let _ = writeln!(
                out,
                "{}",
                serde_json::to_string(&raw).expect("block fields always serialize")
            );
        }
        out
    }

    /// Parse a JSON-lines chain file. Validates form — heights, scheme sets,
    /// digest shapes — but does not verify digests; run [`verify_chain`] for
    /// that. Compromise flags always load cleared.
    pub fn load(input: &str) -> Result<Chain, ChainFormatError> {
        let mut registry: Option<SchemeRegistry> = None;
        let mut blocks = Vec::new();
        for (idx, line) in input.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let line_no = idx + 1;
            let raw: RawBlock = serde_json::from_str(line).map_err(|e| ChainFormatError::Json {
                line: line_no,
                message: e.to_string(),
            })?;
            let reg = match &registry {
                Some(reg) => {
                    let ids: Vec<&str> =
                        reg.schemes().iter().map(|s| s.scheme_id.as_str()).collect();
                    if raw.schemes != ids {
                        return Err(ChainFormatError::SchemeSet { line: line_no });
                    }
                    reg.clone()
                }
                None => {
                    let reg = SchemeRegistry::from_ids(raw.schemes.iter().map(String::as_str))?;
                    // The stored order must already be canonical.
                    let ids: Vec<&str> =
                        reg.schemes().iter().map(|s| s.scheme_id.as_str()).collect();
                    if raw.schemes != ids {
                        return Err(ChainFormatError::SchemeSet { line: line_no });
                    }
                    registry = Some(reg.clone());
                    reg
                }
            };
            let expected = blocks.len() as u64;
            if raw.h != expected {
                return Err(ChainFormatError::Height {
                    line: line_no,
                    expected,
                    found: raw.h,
                });
            }
            let payload = BASE64
                .decode(raw.payload.as_bytes())
                .map_err(|_| ChainFormatError::Base64 { line: line_no })?;
            let decode_digests = |values: &[String]| -> Result<Vec<Vec<u8>>, ChainFormatError> {
                if values.len() != reg.len() {
                    return Err(ChainFormatError::Shape { line: line_no });
                }
                values
                    .iter()
                    .zip(reg.schemes())
                    .map(|(v, scheme)| {
                        let bytes =
                            hex::decode(v).map_err(|_| ChainFormatError::Hex { line: line_no })?;
                        if bytes.len() != scheme.digest_len()
                            || v.contains(|c: char| c.is_ascii_uppercase())
                        {
                            return Err(ChainFormatError::Shape { line: line_no });
                        }
                        Ok(bytes)
                    })
                    .collect()
            };
            let prev_digests = decode_digests(&raw.prev)?;
            let digests = decode_digests(&raw.dig)?;
            blocks.push(Block {
                height: raw.h,
                payload,
                prev_digests,
                digests,
            });
        }
        match registry {
            Some(registry) if !blocks.is_empty() => Ok(Chain { registry, blocks }),
            _ => Err(ChainFormatError::Empty),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBlock {
    h: u64,
    payload: String,
    prev: Vec<String>,
    dig: Vec<String>,
    schemes: Vec<String>,
}

/// Verification outcome. `mismatch_counts` tallies every scheme mismatch in
/// the whole chain, including mismatches on blocks that still cleared the
/// m-of-k bar — forensics wants those too.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainReport {
    pub valid: bool,
    pub first_invalid: Option<u64>,
    pub mismatch_counts: BTreeMap<String, u64>,
}

/// Recompute every link. A scheme "matches" on a block when the stored
/// previous digest equals the predecessor's and the stored digest equals the
/// recomputation — or when the scheme is compromised, since a collision
/// oracle makes the stored digest unfalsifiable from the verifier's side.
pub fn verify_chain(chain: &Chain, policy: ChainPolicy) -> ChainReport {
    let schemes = chain.registry().schemes();
    let mut mismatch_counts: BTreeMap<String, u64> =
        schemes.iter().map(|s| (s.scheme_id.clone(), 0)).collect();
    let mut first_invalid = None;
    for (i, block) in chain.blocks().iter().enumerate() {
        let block_preimage = preimage(block.height, &block.payload, &block.prev_digests);
        let mut matches = 0usize;
        for (s, scheme) in schemes.iter().enumerate() {
            let linkage_ok = match i {
                0 => block.prev_digests[s].iter().all(|&b| b == 0),
                _ => block.prev_digests[s] == chain.blocks()[i - 1].digests[s],
            };
            let digest_ok = block.digests[s] == scheme.compute(&block_preimage);
            let ok = linkage_ok && (digest_ok || scheme.compromised);
            if ok {
                matches += 1;
            } else {
                *mismatch_counts
                    .get_mut(&scheme.scheme_id)
                    .expect("prefilled") += 1;
            }
        }
        if matches < policy.m && first_invalid.is_none() {
            first_invalid = Some(block.height);
        }
    }
    ChainReport {
        valid: first_invalid.is_none(),
        first_invalid,
        mismatch_counts,
    }
}

/// Outcome of the exhaustive single-block tamper sweep at one compromise
/// level: `detection` is 1.0 when every tampered variant was caught and 0.0
/// when none was (the law admits nothing in between).
#[derive(Clone, Debug, PartialEq)]
pub struct TamperOutcome {
    pub tampered_blocks: u64,
    pub detected: u64,
    pub detection: f64,
}

/// For each height in turn, rewrite that block's payload while granting the
/// attacker collision oracles for the first `compromised_count` schemes, then
/// verify under `policy` and record whether the chain went invalid.
pub fn tamper_experiment(
    chain: &Chain,
    compromised_count: usize,
    policy: ChainPolicy,
) -> Result<TamperOutcome, LedgerError> {
    let k = chain.registry().len();
    if compromised_count > k {
        return Err(LedgerError::TooManyCompromised {
            c: compromised_count,
            k,
        });
    }
    let compromised_ids: BTreeSet<String> = chain
        .registry()
        .schemes()
        .iter()
        .take(compromised_count)
        .map(|s| s.scheme_id.clone())
        .collect();
    let mut detected = 0u64;
    let total = chain.blocks().len() as u64;
    for height in 0..total {
        let mut tampered = chain.clone();
        for id in &compromised_ids {
            tampered
                .registry_mut()
                .set_compromised(id, true)
                .expect("ids come from this registry");
        }
        let mut payload = tampered.blocks[height as usize].payload.clone();
        payload.extend_from_slice(b"\xffTAMPERED");
        tampered.blocks[height as usize].payload = payload;
        if !verify_chain(&tampered, policy).valid {
            detected += 1;
        }
    }
    let detection = if total == 0 {
        1.0
    } else {
        detected as f64 / total as f64
    };
    Ok(TamperOutcome {
        tampered_blocks: total,
        detected,
        detection,
    })
}

/// Serialize an event record as canonical JSON bytes: object keys sorted,
/// no insignificant whitespace. Digests over payloads are reproducible only
/// because this byte form is fixed.
pub fn canonical_event(value: &serde_json::Value) -> Vec<u8> {
    // serde_json maps already iterate in sorted key order (BTreeMap-backed),
    // and compact printing adds no whitespace.
    serde_json::to_vec(&canonicalize(value)).expect("JSON values always serialize")
}

fn canonicalize(value: &serde_json::Value) -> serde_json::Value {
    match value {
        serde_json::Value::Object(map) => {
            let mut out = serde_json::Map::new();
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            for key in keys {
                out.insert(key.clone(), canonicalize(&map[key]));
            }
            serde_json::Value::Object(out)
        }
        serde_json::Value::Array(items) => {
            serde_json::Value::Array(items.iter().map(canonicalize).collect())
        }
        other => other.clone(),
    }
}
