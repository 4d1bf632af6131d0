//! Oral-transmission integrity toolkit.
//!
//! A verse is a short sequence of tokens. Instead of storing the verse once,
//! a reciter commits to a *patha*: a deterministic expansion of the verse into
//! an occurrence chain in which every token appears several times, in several
//! overlapping windows, some of them reversed. The redundancy is the error
//! detector: independent occurrences of the same canonical position must carry
//! the same token, reversed windows must carry predictably inverted pitch
//! contours, and the decoded verse must hash to a digest registered ahead of
//! time.
//!
//! The crate is organised around that pipeline:
//!
//! - [`corpus`]: tokens, verses, semantic digests, and deterministic test
//!   corpus generation.
//! - [`patha`]: the eight window encodings, the occurrence-chain codec, error
//!   localization / majority correction, and the recitation text form.
//! - [`integrity`]: the three verification layers (textual, phonetic,
//!   semantic) and the fault injector used by experiments.
//! - [`network`]: reciter groups, weighted intra/inter-group consensus, verse
//!   admission, and the batch simulator.
//! - [`ledger`]: an append-only event chain protected by several independent
//!   digest schemes, with a forgery oracle for tamper experiments.

pub mod corpus;
pub mod integrity;
pub mod ledger;
pub mod network;
pub mod patha;
