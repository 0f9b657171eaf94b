//! Token classification by distribution position, plus head/tail sampling
//! for annotation studies.
//!
//! Single-character tokens are atoms. Longer tokens split on the fitted
//! breakpoint rank: head-side tokens are pragmas (short, semantically
//! ambiguous), tail-side tokens are ideas (long, tied to one concept).
//! The rank/length rule is a proxy for those semantic definitions and is
//! labeled as such in every export.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::tokenize::{TokenId, Vocabulary};
use crate::zipfstats::RankFrequencyTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenClass {
    Atom,
    Pragma,
    Idea,
}

impl TokenClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            TokenClass::Atom => "atom",
            TokenClass::Pragma => "pragma",
            TokenClass::Idea => "idea",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassifiedToken {
    pub token_id: TokenId,
    pub class: TokenClass,
    pub rank: u64,
    pub char_length: u32,
}

/// Every vocabulary token with its class, plus the breakpoint that
/// separated pragma from idea.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassifiedVocabulary {
    pub tokens: Vec<ClassifiedToken>,
    pub breakpoint_rank: u64,
}

/// The classification rule: single characters are atoms; longer tokens
/// are pragmas up to the breakpoint rank and ideas beyond it.
pub fn token_class(char_length: u32, rank: u64, breakpoint_rank: u64) -> TokenClass {
    if char_length == 1 {
        TokenClass::Atom
    } else if rank <= breakpoint_rank {
        TokenClass::Pragma
    } else {
        TokenClass::Idea
    }
}

/// Labels every vocabulary token: length 1 is an atom; otherwise rank at
/// or before the breakpoint is a pragma and beyond it an idea. Every
/// vocabulary token must appear in the table.
pub fn classify_tokens(
    vocab: &Vocabulary,
    rft: &RankFrequencyTable,
    breakpoint_rank: u64,
) -> Result<ClassifiedVocabulary> {
    if breakpoint_rank < 1 || breakpoint_rank > rft.len() as u64 {
        return Err(Error::param(format!(
            "breakpoint rank {breakpoint_rank} outside table of {} rows",
            rft.len()
        )));
    }
    let mut rank_of: FxHashMap<TokenId, u64> = FxHashMap::default();
    rank_of.reserve(rft.len());
    for row in rft.rows() {
        rank_of.insert(row.token_id, row.rank);
    }
    let mut tokens = Vec::with_capacity(vocab.len());
    for entry in vocab.entries() {
        let rank = *rank_of.get(&entry.token_id).ok_or_else(|| {
            Error::consistency(format!(
                "token {} ({:?}) missing from the rank-frequency table",
                entry.token_id, entry.surface
            ))
        })?;
        let class = token_class(entry.char_length, rank, breakpoint_rank);
        tokens.push(ClassifiedToken {
            token_id: entry.token_id,
            class,
            rank,
            char_length: entry.char_length,
        });
    }
    Ok(ClassifiedVocabulary {
        tokens,
        breakpoint_rank,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleOrigin {
    Head,
    Tail,
}

impl SampleOrigin {
    pub fn as_str(&self) -> &'static str {
        match self {
            SampleOrigin::Head => "head",
            SampleOrigin::Tail => "tail",
        }
    }
}

/// Head and tail token samples plus the shuffled presentation order used
/// for annotation, with origins retained.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeadTailSample {
    pub head: Vec<TokenId>,
    pub tail: Vec<TokenId>,
    pub shuffled: Vec<(TokenId, SampleOrigin)>,
}

/// Samples `head_n` tokens uniformly from the top rank decile and
/// `tail_n` from the bottom decile, keeping only tail tokens of at least
/// `min_tail_length` characters. Deterministic for a fixed seed.
pub fn sample_head_tail(
    rft: &RankFrequencyTable,
    vocab: &Vocabulary,
    head_n: usize,
    tail_n: usize,
    min_tail_length: u32,
    seed: u64,
) -> Result<HeadTailSample> {
    let n = rft.len();
    if head_n + tail_n > vocab.len() {
        return Err(Error::param(format!(
            "requested {} samples from a vocabulary of {}",
            head_n + tail_n,
            vocab.len()
        )));
    }
    let decile = n / 10;
    // Head pool: ranks r with r*10 <= n.
    let head_pool: Vec<TokenId> = rft.rows()[..decile].iter().map(|r| r.token_id).collect();
    // Tail pool: ranks r with r > 9n/10, filtered by length.
    let tail_start = n - decile;
    let mut tail_pool: Vec<TokenId> = Vec::new();
    for row in &rft.rows()[tail_start..] {
        let entry = vocab.entry(row.token_id).ok_or_else(|| {
            Error::consistency(format!(
                "token {} missing from vocabulary",
                row.token_id
            ))
        })?;
        if entry.char_length >= min_tail_length {
            tail_pool.push(row.token_id);
        }
    }
    if head_n > head_pool.len() {
        return Err(Error::param(format!(
            "head sample of {head_n} requested but the top decile holds {}",
            head_pool.len()
        )));
    }
    if tail_n > tail_pool.len() {
        return Err(Error::param(format!(
            "tail sample of {tail_n} requested but only {} bottom-decile tokens have length >= {min_tail_length}",
            tail_pool.len()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let head = sample_without_replacement(&head_pool, head_n, &mut rng);
    let tail = sample_without_replacement(&tail_pool, tail_n, &mut rng);

    let mut shuffled: Vec<(TokenId, SampleOrigin)> = head
        .iter()
        .map(|&t| (t, SampleOrigin::Head))
        .chain(tail.iter().map(|&t| (t, SampleOrigin::Tail)))
        .collect();
    // Fisher-Yates with the same deterministic stream.
    for i in (1..shuffled.len()).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        shuffled.swap(i, j);
    }

    Ok(HeadTailSample {
        head,
        tail,
        shuffled,
    })
}

fn sample_without_replacement(pool: &[TokenId], k: usize, rng: &mut ChaCha8Rng) -> Vec<TokenId> {
    let mut pool = pool.to_vec();
    let mut out = Vec::with_capacity(k);
    for _ in 0..k {
        let idx = (rng.next_u64() % pool.len() as u64) as usize;
        out.push(pool.swap_remove(idx));
    }
    out
}
