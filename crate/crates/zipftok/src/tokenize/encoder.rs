//! Text encoding against a trained vocabulary.
//!
//! BPE replays the merge table (applied in merge order, left to right
//! within equal ranks), WordPiece takes the greedy longest match, and
//! Unigram picks the maximum-likelihood segmentation by dynamic
//! programming. Decoding any id sequence reproduces the input exactly.

use std::collections::BinaryHeap;
use std::collections::HashMap;

use rayon::prelude::*;
use rustc_hash::FxHashMap;

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::tokenize::{Algorithm, MergeTable, TokenId, Vocabulary};

/// Reusable encoder for one vocabulary. Construction validates and
/// indexes the vocabulary once; encoding is then cheap per call.
pub struct Encoder<'v> {
    vocab: &'v Vocabulary,
    kind: EncoderKind,
}

enum EncoderKind {
    Bpe {
        /// (left, right) -> (merge rank, merged token).
        ranks: FxHashMap<(TokenId, TokenId), (u32, TokenId)>,
    },
    Greedy,
    Viterbi {
        log_probs: Vec<f64>,
    },
}

impl<'v> Encoder<'v> {
    pub fn new(vocab: &'v Vocabulary, merges: Option<&MergeTable>) -> Result<Encoder<'v>> {
        let kind = match vocab.algorithm() {
            Algorithm::Bpe => {
                let merges = merges.ok_or_else(|| {
                    Error::param("bpe encoding requires a merge table")
                })?;
                let mut ranks = FxHashMap::default();
                ranks.reserve(merges.len());
                for (rank, (left, right)) in merges.pairs().iter().enumerate() {
                    let resolve = |s: &str| {
                        vocab.id_of(s).ok_or_else(|| {
                            Error::consistency(format!(
                                "merge rule references unknown token {s:?}"
                            ))
                        })
                    };
                    let mut merged = String::with_capacity(left.len() + right.len());
                    merged.push_str(left);
                    merged.push_str(right);
                    ranks.insert(
                        (resolve(left)?, resolve(right)?),
                        (rank as u32, resolve(&merged)?),
                    );
                }
                EncoderKind::Bpe { ranks }
            }
            Algorithm::WordPiece => EncoderKind::Greedy,
            Algorithm::Unigram => {
                let total: f64 = vocab
                    .entries()
                    .iter()
                    .map(|e| e.train_frequency as f64)
                    .sum();
                let log_probs = vocab
                    .entries()
                    .iter()
                    .map(|e| {
                        if e.train_frequency > 0 {
                            (e.train_frequency as f64 / total).ln()
                        } else {
                            f64::NEG_INFINITY
                        }
                    })
                    .collect();
                EncoderKind::Viterbi { log_probs }
            }
        };
        Ok(Encoder { vocab, kind })
    }

    pub fn encode(&self, text: &str) -> Result<Vec<TokenId>> {
        if text.is_empty() {
            return Ok(Vec::new());
        }
        match &self.kind {
            EncoderKind::Bpe { ranks } => self.encode_bpe(text, ranks),
            EncoderKind::Greedy => self.encode_greedy(text),
            EncoderKind::Viterbi { log_probs } => self.encode_viterbi(text, log_probs),
        }
    }

    /// Replays merges by rank with a candidate heap; within one rank,
    /// occurrences merge left to right. Equivalent to scanning the merge
    /// table in order, but linearithmic in the text length.
    fn encode_bpe(
        &self,
        text: &str,
        ranks: &FxHashMap<(TokenId, TokenId), (u32, TokenId)>,
    ) -> Result<Vec<TokenId>> {
        const NONE: u32 = u32::MAX;
        const DEAD: TokenId = TokenId::MAX;

        let mut tokens: Vec<TokenId> = Vec::new();
        for (offset, c) in text.chars().enumerate() {
            let mut buf = [0u8; 4];
            let id = self.vocab.id_of(c.encode_utf8(&mut buf)).ok_or(
                Error::OutOfAlphabet { symbol: c, offset },
            )?;
            tokens.push(id);
        }
        let n = tokens.len();
        let mut next: Vec<u32> = (1..=n as u32).collect();
        next[n - 1] = NONE;
        let mut prev: Vec<u32> = (0..n as u32).map(|i| i.wrapping_sub(1)).collect();
        prev[0] = NONE;

        // Min-heap on (rank, position).
        let mut heap: BinaryHeap<std::cmp::Reverse<(u32, u32)>> = BinaryHeap::new();
        for i in 0..n.saturating_sub(1) {
            if let Some(&(rank, _)) = ranks.get(&(tokens[i], tokens[i + 1])) {
                heap.push(std::cmp::Reverse((rank, i as u32)));
            }
        }
        while let Some(std::cmp::Reverse((rank, i))) = heap.pop() {
            let iu = i as usize;
            let a = tokens[iu];
            if a == DEAD {
                continue;
            }
            let j = next[iu];
            if j == NONE {
                continue;
            }
            let b = tokens[j as usize];
            let Some(&(r, merged)) = ranks.get(&(a, b)) else {
                continue;
            };
            if r != rank {
                continue;
            }
            tokens[iu] = merged;
            tokens[j as usize] = DEAD;
            let r_next = next[j as usize];
            next[iu] = r_next;
            if r_next != NONE {
                prev[r_next as usize] = i;
            }
            let l = prev[iu];
            if l != NONE {
                if let Some(&(lr, _)) = ranks.get(&(tokens[l as usize], merged)) {
                    heap.push(std::cmp::Reverse((lr, l)));
                }
            }
            if r_next != NONE {
                if let Some(&(rr, _)) = ranks.get(&(merged, tokens[r_next as usize])) {
                    heap.push(std::cmp::Reverse((rr, i)));
                }
            }
        }
        Ok(tokens.into_iter().filter(|&t| t != DEAD).collect())
    }

    fn encode_greedy(&self, text: &str) -> Result<Vec<TokenId>> {
        let byte_at: Vec<usize> = text
            .char_indices()
            .map(|(b, _)| b)
            .chain(std::iter::once(text.len()))
            .collect();
        let n = byte_at.len() - 1;
        let max_chars = self.vocab.max_surface_chars() as usize;

        let mut out = Vec::new();
        let mut i = 0usize;
        while i < n {
            let mut matched = None;
            let top = (i + max_chars).min(n);
            for j in (i + 1..=top).rev() {
                if let Some(id) = self.vocab.id_of(&text[byte_at[i]..byte_at[j]]) {
                    matched = Some((id, j));
                    break;
                }
            }
            match matched {
                Some((id, j)) => {
                    out.push(id);
                    i = j;
                }
                None => {
                    let symbol = text[byte_at[i]..].chars().next().expect("in range");
                    return Err(Error::OutOfAlphabet { symbol, offset: i });
                }
            }
        }
        Ok(out)
    }

    /// Maximum-likelihood segmentation. Score ties keep the earlier start,
    /// i.e. the longer final piece, which makes the result deterministic.
    fn encode_viterbi(&self, text: &str, log_probs: &[f64]) -> Result<Vec<TokenId>> {
        let byte_at: Vec<usize> = text
            .char_indices()
            .map(|(b, _)| b)
            .chain(std::iter::once(text.len()))
            .collect();
        let n = byte_at.len() - 1;
        let max_chars = self.vocab.max_surface_chars() as usize;

        let mut best = vec![f64::NEG_INFINITY; n + 1];
        let mut back: Vec<Option<(usize, TokenId)>> = vec![None; n + 1];
        best[0] = 0.0;
        for j in 1..=n {
            let lo = j.saturating_sub(max_chars);
            for i in lo..j {
                if best[i] == f64::NEG_INFINITY {
                    continue;
                }
                let Some(id) = self.vocab.id_of(&text[byte_at[i]..byte_at[j]]) else {
                    continue;
                };
                let lp = log_probs[id as usize];
                if lp == f64::NEG_INFINITY {
                    continue;
                }
                let score = best[i] + lp;
                if score > best[j] {
                    best[j] = score;
                    back[j] = Some((i, id));
                }
            }
        }
        if best[n] == f64::NEG_INFINITY {
            // The character right after the furthest reachable prefix has
            // no usable piece.
            let reach = (0..=n)
                .rev()
                .find(|&j| best[j] > f64::NEG_INFINITY)
                .unwrap_or(0);
            let symbol = text[byte_at[reach]..].chars().next().expect("in range");
            return Err(Error::OutOfAlphabet { symbol, offset: reach });
        }
        let mut ids = Vec::new();
        let mut j = n;
        while j > 0 {
            let (i, id) = back[j].expect("reachable position has a back pointer");
            ids.push(id);
            j = i;
        }
        ids.reverse();
        Ok(ids)
    }
}

/// One-shot encode. Builds an [`Encoder`] internally; prefer the struct
/// when encoding many texts.
pub fn encode(text: &str, vocab: &Vocabulary, merges: Option<&MergeTable>) -> Result<Vec<TokenId>> {
    Encoder::new(vocab, merges)?.encode(text)
}

/// Maps token ids back to text.
pub fn decode(ids: &[TokenId], vocab: &Vocabulary) -> Result<String> {
    let mut out = String::new();
    for &id in ids {
        let entry = vocab
            .entry(id)
            .ok_or_else(|| Error::consistency(format!("unknown token id {id}")))?;
        out.push_str(&entry.surface);
    }
    Ok(out)
}

/// Re-encodes a document stream and counts token occurrences exactly.
/// Every vocabulary token appears in the result, possibly with count 0.
pub fn token_frequencies<I>(
    docs: I,
    vocab: &Vocabulary,
    merges: Option<&MergeTable>,
) -> Result<HashMap<TokenId, u64>>
where
    I: IntoIterator<Item = Result<Document>>,
    I::IntoIter: Send,
{
    let encoder = Encoder::new(vocab, merges)?;
    let counts = docs
        .into_iter()
        .par_bridge()
        .try_fold(
            || vec![0u64; vocab.len()],
            |mut counts, doc: Result<Document>| -> Result<Vec<u64>> {
                for id in encoder.encode(&doc?.text)? {
                    counts[id as usize] += 1;
                }
                Ok(counts)
            },
        )
        .try_reduce(
            || vec![0u64; vocab.len()],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                Ok(a)
            },
        )?;
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(id, c)| (id as TokenId, c))
        .collect())
}
