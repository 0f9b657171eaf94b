//! Corpus statistics for subword tokenization: train BPE, WordPiece, and
//! Unigram vocabularies from symbol scale up to multi-word scale, build
//! rank-frequency tables, fit single and two-regime power laws to locate
//! the distribution's bend, classify tokens by their position in the
//! distribution, and analyze annotation-poll records.

pub mod classify;
pub mod cli;
pub mod corpus;
mod error;
pub mod manifest;
pub mod plot;
pub mod pollkit;
pub mod powerfit;
pub mod tokenize;
pub mod zipfstats;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
