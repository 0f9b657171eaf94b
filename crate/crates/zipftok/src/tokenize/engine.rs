//! Shared merge machinery for the BPE and WordPiece trainers.
//!
//! The corpus is flattened into one slot array with intra-sequence
//! prev/next links. Pair counts are exact and maintained incrementally:
//! applying a merge touches only the affected slots and their neighbors,
//! never the rest of the corpus. Overlapping occurrences of a pair are
//! resolved left to right within each sequence.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use rustc_hash::{FxHashMap, FxHashSet};

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::tokenize::{Boundary, TokenId, VocabEntry};

pub(crate) type Pair = (TokenId, TokenId);

/// Sentinel for "no neighbor" in the link arrays.
const NONE: u32 = u32::MAX;
/// Sentinel for a slot consumed by a merge.
const DEAD: TokenId = TokenId::MAX;

/// Pairs are merge candidates only while they occur at least this often.
pub(crate) const MIN_PAIR_COUNT: u64 = 2;

/// Flattened training corpus plus the growing token table.
pub(crate) struct TrainCorpus {
    token: Vec<TokenId>,
    prev: Vec<u32>,
    next: Vec<u32>,
    /// Sequence multiplicity, constant within a sequence. 1 for documents,
    /// the aggregated occurrence count for distinct words.
    weight: Vec<u32>,
    surfaces: Vec<String>,
    surface_ids: FxHashMap<Box<str>, TokenId>,
    token_counts: Vec<u64>,
    alphabet_len: usize,
    #[allow(dead_code)]
    char_count: u64,
}

impl TrainCorpus {
    /// Ingests a document stream. With `Boundary::Word`, sequences are
    /// whitespace-delimited words aggregated by multiplicity; spaces still
    /// join the alphabet so any corpus text stays encodable.
    pub(crate) fn build<I>(docs: I, boundary: Boundary) -> Result<TrainCorpus>
    where
        I: IntoIterator<Item = Result<Document>>,
    {
        let mut texts: Vec<String> = Vec::new();
        for doc in docs {
            let doc = doc?;
            if !doc.text.is_empty() {
                texts.push(doc.text);
            }
        }

        let mut char_counts: FxHashMap<char, u64> = FxHashMap::default();
        let mut char_count = 0u64;
        for text in &texts {
            for c in text.chars() {
                *char_counts.entry(c).or_insert(0) += 1;
                char_count += 1;
            }
        }
        if char_count == 0 {
            return Err(Error::param("corpus is empty"));
        }

        let mut alphabet: Vec<char> = char_counts.keys().copied().collect();
        alphabet.sort_unstable();
        let atom_ids: FxHashMap<char, TokenId> = alphabet
            .iter()
            .enumerate()
            .map(|(i, &c)| (c, i as TokenId))
            .collect();

        let mut surfaces = Vec::with_capacity(alphabet.len());
        let mut surface_ids = FxHashMap::default();
        let mut token_counts = Vec::with_capacity(alphabet.len());
        for &c in &alphabet {
            let s = c.to_string();
            surface_ids.insert(s.as_str().into(), surfaces.len() as TokenId);
            token_counts.push(char_counts[&c]);
            surfaces.push(s);
        }

        // (chars, weight) sequences in a deterministic order.
        let mut corpus = TrainCorpus {
            token: Vec::new(),
            prev: Vec::new(),
            next: Vec::new(),
            weight: Vec::new(),
            surfaces,
            surface_ids,
            token_counts,
            alphabet_len: alphabet.len(),
            char_count,
        };

        match boundary {
            Boundary::Document => {
                corpus.reserve_slots(char_count as usize);
                for text in &texts {
                    corpus.push_sequence(text.chars().map(|c| atom_ids[&c]), 1);
                }
            }
            Boundary::Word => {
                let mut order: Vec<&str> = Vec::new();
                let mut counts: FxHashMap<&str, u64> = FxHashMap::default();
                for text in &texts {
                    for word in text.split_whitespace() {
                        match counts.entry(word) {
                            std::collections::hash_map::Entry::Occupied(mut e) => {
                                *e.get_mut() += 1
                            }
                            std::collections::hash_map::Entry::Vacant(e) => {
                                e.insert(1);
                                order.push(word);
                            }
                        }
                    }
                }
                let total: usize = order.iter().map(|w| w.chars().count()).sum();
                corpus.reserve_slots(total);
                for word in order {
                    let w = counts[word].min(u32::MAX as u64) as u32;
                    corpus.push_sequence(word.chars().map(|c| atom_ids[&c]), w);
                }
            }
        }
        Ok(corpus)
    }

    fn reserve_slots(&mut self, n: usize) {
        self.token.reserve(n);
        self.prev.reserve(n);
        self.next.reserve(n);
        self.weight.reserve(n);
    }

    fn push_sequence(&mut self, ids: impl Iterator<Item = TokenId>, weight: u32) {
        let start = self.token.len();
        for id in ids {
            let i = self.token.len() as u32;
            self.token.push(id);
            self.prev.push(if self.token.len() - 1 == start { NONE } else { i - 1 });
            self.next.push(i + 1);
            self.weight.push(weight);
        }
        if self.token.len() > start {
            *self.next.last_mut().unwrap() = NONE;
        }
    }

    pub(crate) fn alphabet_len(&self) -> usize {
        self.alphabet_len
    }

    #[cfg(test)]
    pub(crate) fn char_count(&self) -> u64 {
        self.char_count
    }

    pub(crate) fn vocab_len(&self) -> usize {
        self.surfaces.len()
    }

    pub(crate) fn surface(&self, id: TokenId) -> &str {
        &self.surfaces[id as usize]
    }

    pub(crate) fn token_count(&self, id: TokenId) -> u64 {
        self.token_counts[id as usize]
    }

    pub(crate) fn has_surface(&self, s: &str) -> bool {
        self.surface_ids.contains_key(s)
    }

    pub(crate) fn concat_surface(&self, pair: Pair) -> String {
        let mut s =
            String::with_capacity(self.surface(pair.0).len() + self.surface(pair.1).len());
        s.push_str(self.surface(pair.0));
        s.push_str(self.surface(pair.1));
        s
    }

    fn add_token(&mut self, surface: String) -> TokenId {
        let id = self.surfaces.len() as TokenId;
        self.surface_ids.insert(surface.as_str().into(), id);
        self.surfaces.push(surface);
        self.token_counts.push(0);
        id
    }

    /// Orders two candidate pairs by the deterministic tie rule: smaller
    /// concatenated surface first, then smaller left surface.
    fn pair_surface_cmp(&self, a: Pair, b: Pair) -> Ordering {
        let key_a = (self.surface(a.0), self.surface(a.1));
        let key_b = (self.surface(b.0), self.surface(b.1));
        let concat_cmp = key_a
            .0
            .chars()
            .chain(key_a.1.chars())
            .cmp(key_b.0.chars().chain(key_b.1.chars()));
        concat_cmp.then_with(|| key_a.0.cmp(key_b.0))
    }

    pub(crate) fn into_entries(self) -> Vec<VocabEntry> {
        self.surfaces
            .into_iter()
            .zip(self.token_counts)
            .enumerate()
            .map(|(id, (surface, count))| VocabEntry {
                token_id: id as TokenId,
                char_length: surface.chars().count() as u32,
                surface,
                train_frequency: count,
            })
            .collect()
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
struct HeapEntry {
    count: u64,
    /// First 12 bytes of the concatenated surface, big-endian with zero
    /// padding. UTF-8 byte order equals code-point order and padding
    /// never inverts a strict comparison, so ordering by this prefix
    /// agrees with the surface tie rule wherever the prefixes differ;
    /// equal prefixes fall back to a full comparison at selection time.
    surface_prefix: u128,
    pair: Pair,
}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Max-heap on count; ties pop smallest surface prefix first, then
        // ascending pair ids so the order is insertion-independent.
        self.count
            .cmp(&other.count)
            .then_with(|| other.surface_prefix.cmp(&self.surface_prefix))
            .then_with(|| other.pair.cmp(&self.pair))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn surface_prefix(left: &str, right: &str) -> u128 {
    let mut bytes = [0u8; 16];
    let mut n = 0;
    for chunk in [left.as_bytes(), right.as_bytes()] {
        let take = chunk.len().min(12 - n);
        bytes[n..n + take].copy_from_slice(&chunk[..take]);
        n += take;
        if n == 12 {
            break;
        }
    }
    u128::from_be_bytes(bytes)
}

pub(crate) struct MergeEngine {
    pub(crate) corpus: TrainCorpus,
    counts: FxHashMap<Pair, u64>,
    /// Left-slot indices where a pair was seen. Entries go stale when a
    /// neighbor merge consumes a slot; they are re-validated on use.
    positions: FxHashMap<Pair, Vec<u32>>,
    heap: BinaryHeap<HeapEntry>,
    banned: FxHashSet<Pair>,
    use_heap: bool,
}

impl MergeEngine {
    pub(crate) fn new(corpus: TrainCorpus, use_heap: bool) -> MergeEngine {
        let (counts, positions) = count_pairs(&corpus);
        let mut engine = MergeEngine {
            corpus,
            counts,
            positions,
            heap: BinaryHeap::new(),
            banned: FxHashSet::default(),
            use_heap,
        };
        if use_heap {
            engine.rebuild_heap();
        }
        engine
    }

    fn rebuild_heap(&mut self) {
        let corpus = &self.corpus;
        self.heap = self
            .counts
            .iter()
            .filter(|(pair, &c)| c >= MIN_PAIR_COUNT && !self.banned.contains(pair))
            .map(|(&pair, &count)| HeapEntry {
                count,
                surface_prefix: surface_prefix(corpus.surface(pair.0), corpus.surface(pair.1)),
                pair,
            })
            .collect();
    }

    fn entry(&self, count: u64, pair: Pair) -> HeapEntry {
        HeapEntry {
            count,
            surface_prefix: surface_prefix(
                self.corpus.surface(pair.0),
                self.corpus.surface(pair.1),
            ),
            pair,
        }
    }

    /// Removes a pair from candidacy for good (its merged surface would
    /// collide with an existing token).
    pub(crate) fn ban(&mut self, pair: Pair) {
        self.banned.insert(pair);
    }

    /// Most frequent eligible pair, ties broken by surface order. The
    /// heap prefix key resolves almost every tie; only entries matching
    /// the top on both count and prefix need a full surface comparison.
    pub(crate) fn select_max_count(&mut self) -> Option<(Pair, u64)> {
        let best = loop {
            let entry = self.heap.pop()?;
            if self.banned.contains(&entry.pair) {
                continue;
            }
            let current = self.counts.get(&entry.pair).copied().unwrap_or(0);
            if current == entry.count && current >= MIN_PAIR_COUNT {
                break entry;
            }
            if current < entry.count && current >= MIN_PAIR_COUNT {
                // Count dropped since the push; file it back under its
                // current value.
                let resync = self.entry(current, entry.pair);
                self.heap.push(resync);
            }
        };

        let mut candidates = vec![best.pair];
        let mut seen: FxHashSet<Pair> = FxHashSet::default();
        seen.insert(best.pair);
        while let Some(top) = self.heap.peek() {
            if top.count != best.count || top.surface_prefix != best.surface_prefix {
                break;
            }
            let entry = *top;
            self.heap.pop();
            if self.banned.contains(&entry.pair) || seen.contains(&entry.pair) {
                continue;
            }
            let current = self.counts.get(&entry.pair).copied().unwrap_or(0);
            if current == entry.count {
                seen.insert(entry.pair);
                candidates.push(entry.pair);
            } else if current < entry.count && current >= MIN_PAIR_COUNT {
                let resync = self.entry(current, entry.pair);
                self.heap.push(resync);
            }
        }

        let mut chosen = candidates[0];
        for &c in &candidates[1..] {
            if self.corpus.pair_surface_cmp(c, chosen) == Ordering::Less {
                chosen = c;
            }
        }
        for &c in &candidates {
            if c != chosen {
                let entry = self.entry(best.count, c);
                self.heap.push(entry);
            }
        }
        Some((chosen, best.count))
    }

    /// Highest-scoring eligible pair under the WordPiece criterion
    /// `count(pair) / (count(left) * count(right))`. Scores are compared
    /// exactly via integer cross-multiplication, so the scan order cannot
    /// influence the outcome.
    pub(crate) fn select_max_score(&self) -> Option<(Pair, u64)> {
        let mut best: Option<(Pair, u64, u128)> = None;
        for (&pair, &count) in &self.counts {
            if count < MIN_PAIR_COUNT || self.banned.contains(&pair) {
                continue;
            }
            let denom = self.corpus.token_count(pair.0) as u128
                * self.corpus.token_count(pair.1) as u128;
            debug_assert!(denom > 0);
            match best {
                None => best = Some((pair, count, denom)),
                Some((bpair, bcount, bdenom)) => {
                    // count/denom vs bcount/bdenom
                    let lhs = count as u128 * bdenom;
                    let rhs = bcount as u128 * denom;
                    let better = match lhs.cmp(&rhs) {
                        Ordering::Greater => true,
                        Ordering::Less => false,
                        Ordering::Equal => {
                            self.corpus.pair_surface_cmp(pair, bpair) == Ordering::Less
                        }
                    };
                    if better {
                        best = Some((pair, count, denom));
                    }
                }
            }
        }
        best.map(|(pair, count, _)| (pair, count))
    }

    /// Registers the merged token and rewrites every live occurrence of
    /// `pair`, updating pair counts, positions, and token counts. Returns
    /// the new token id.
    pub(crate) fn apply_merge(&mut self, pair: Pair) -> TokenId {
        let surface = self.corpus.concat_surface(pair);
        let new_id = self.corpus.add_token(surface);
        let mut occs = self.positions.remove(&pair).unwrap_or_default();
        occs.sort_unstable();
        let (a, b) = pair;

        for &i in &occs {
            let i = i as usize;
            if self.corpus.token[i] != a {
                continue;
            }
            let j = self.corpus.next[i];
            if j == NONE {
                continue;
            }
            let j = j as usize;
            if self.corpus.token[j] != b {
                continue;
            }
            let w = self.corpus.weight[i] as u64;

            let l = self.corpus.prev[i];
            if l != NONE {
                let lt = self.corpus.token[l as usize];
                self.dec((lt, a), w);
                self.inc((lt, new_id), w, l);
            }
            let r = self.corpus.next[j];
            if r != NONE {
                let rt = self.corpus.token[r as usize];
                self.dec((b, rt), w);
                self.inc((new_id, rt), w, i as u32);
            }
            self.dec(pair, w);

            self.corpus.token[i] = new_id;
            self.corpus.token[j] = DEAD;
            self.corpus.next[i] = r;
            if r != NONE {
                self.corpus.prev[r as usize] = i as u32;
            }
            self.corpus.token_counts[a as usize] -= w;
            self.corpus.token_counts[b as usize] -= w;
            self.corpus.token_counts[new_id as usize] += w;
        }
        debug_assert!(self.counts.get(&pair).is_none());

        if self.use_heap && self.heap.len() > 4 * self.counts.len() + 1024 {
            self.rebuild_heap();
        }
        new_id
    }

    fn inc(&mut self, pair: Pair, w: u64, pos: u32) {
        let count = self.counts.entry(pair).or_insert(0);
        *count += w;
        let count = *count;
        self.positions.entry(pair).or_default().push(pos);
        if self.use_heap && count >= MIN_PAIR_COUNT && !self.banned.contains(&pair) {
            let entry = self.entry(count, pair);
            self.heap.push(entry);
        }
    }

    fn dec(&mut self, pair: Pair, w: u64) {
        if let Some(count) = self.counts.get_mut(&pair) {
            debug_assert!(*count >= w);
            *count = count.saturating_sub(w);
            if *count == 0 {
                self.counts.remove(&pair);
                self.positions.remove(&pair);
            }
        }
    }
}

/// Exact initial pair counts, data-parallel over fixed slot ranges with a
/// deterministic in-order reduction.
#[allow(clippy::type_complexity)]
fn count_pairs(corpus: &TrainCorpus) -> (FxHashMap<Pair, u64>, FxHashMap<Pair, Vec<u32>>) {
    let n = corpus.token.len();
    let chunk = (n / 256).max(1 << 16);
    let ranges: Vec<(usize, usize)> = (0..n)
        .step_by(chunk)
        .map(|start| (start, (start + chunk).min(n)))
        .collect();

    let parts: Vec<(FxHashMap<Pair, u64>, FxHashMap<Pair, Vec<u32>>)> = ranges
        .par_iter()
        .map(|&(start, end)| {
            let mut counts: FxHashMap<Pair, u64> = FxHashMap::default();
            let mut positions: FxHashMap<Pair, Vec<u32>> = FxHashMap::default();
            for i in start..end {
                let j = corpus.next[i];
                if j == NONE {
                    continue;
                }
                let pair = (corpus.token[i], corpus.token[j as usize]);
                *counts.entry(pair).or_insert(0) += corpus.weight[i] as u64;
                positions.entry(pair).or_default().push(i as u32);
            }
            (counts, positions)
        })
        .collect();

    let mut counts: FxHashMap<Pair, u64> = FxHashMap::default();
    let mut positions: FxHashMap<Pair, Vec<u32>> = FxHashMap::default();
    for (part_counts, part_positions) in parts {
        for (pair, c) in part_counts {
            *counts.entry(pair).or_insert(0) += c;
        }
        for (pair, mut pos) in part_positions {
            positions.entry(pair).or_default().append(&mut pos);
        }
    }
    (counts, positions)
}
