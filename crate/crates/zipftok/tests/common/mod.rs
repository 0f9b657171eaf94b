//! Shared fixtures: a deterministic English-like corpus generator and
//! independent reference implementations (from-scratch BPE, naive merge
//! replay, quadratic edit distance, exhaustive breakpoint search) used as
//! oracles against the library.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use zipftok::corpus::Document;
use zipftok::tokenize::Boundary;

pub fn docs_from(texts: &[String]) -> Vec<zipftok::Result<Document>> {
    texts
        .iter()
        .enumerate()
        .map(|(i, t)| {
            Ok(Document {
                doc_id: i as u64,
                text: t.clone(),
            })
        })
        .collect()
}

// ---------------------------------------------------------------------
// Corpus generator
// ---------------------------------------------------------------------

/// Deterministic English-like text: a fixed lexicon of letter-frequency
/// word shapes sampled under a power-law word distribution, mixed with a
/// power-law inventory of recurring multi-word set phrases, arranged into
/// capitalized, punctuated sentences. Word length grows with lexicon rank
/// and set phrases recur verbatim, so large vocabularies can merge whole
/// phrases the way they do on natural text.
pub struct CorpusGen {
    rng: ChaCha8Rng,
    lexicon: Vec<String>,
    cumulative: Vec<u64>,
    total_weight: u64,
    phrases: Vec<String>,
    phrase_cumulative: Vec<u64>,
    phrase_total_weight: u64,
}

const LETTERS: &[(char, u32)] = &[
    ('e', 127), ('t', 91), ('a', 82), ('o', 75), ('i', 70), ('n', 67),
    ('s', 63), ('h', 61), ('r', 60), ('d', 43), ('l', 40), ('c', 28),
    ('u', 28), ('m', 24), ('w', 24), ('f', 22), ('g', 20), ('y', 20),
    ('p', 19), ('b', 15), ('v', 10), ('k', 8), ('j', 2), ('x', 2),
    ('q', 1), ('z', 1),
];

impl CorpusGen {
    pub fn new(seed: u64, lexicon_size: usize) -> CorpusGen {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let letter_total: u32 = LETTERS.iter().map(|&(_, w)| w).sum();
        let mut lexicon = Vec::with_capacity(lexicon_size);
        let mut seen: HashSet<String> = HashSet::with_capacity(lexicon_size);
        while lexicon.len() < lexicon_size {
            // Word length grows with lexicon rank (frequent words are
            // short, rare words long), as in natural lexicons.
            let rank = lexicon.len();
            let base = 1.0 + 1.15 * ((rank + 2) as f64).ln();
            let len = (base as usize + (rng.next_u32() % 3) as usize).clamp(1, 16);
            let mut word = String::with_capacity(len + 2);
            for _ in 0..len {
                let mut pick = (rng.next_u32() % letter_total) as i64;
                for &(c, w) in LETTERS {
                    pick -= w as i64;
                    if pick < 0 {
                        word.push(c);
                        break;
                    }
                }
            }
            while !seen.insert(word.clone()) {
                word.push(LETTERS[(rng.next_u32() % 26) as usize].0);
            }
            lexicon.push(word);
        }
        // Power-law word weights over lexicon ranks.
        let mut cumulative = Vec::with_capacity(lexicon_size);
        let mut total: u64 = 0;
        for i in 0..lexicon_size {
            let w = (1e12 / ((i + 1) as f64).powf(1.05)).round() as u64;
            total += w.max(1);
            cumulative.push(total);
        }
        CorpusGen {
            rng,
            lexicon,
            cumulative,
            total_weight: total,
        }
    }

    fn next_word(&mut self) -> &str {
        let pick = self.rng.next_u64() % self.total_weight;
        let idx = self.cumulative.partition_point(|&c| c <= pick);
        &self.lexicon[idx]
    }

    /// One multi-sentence paragraph.
    pub fn document(&mut self) -> String {
        let sentences = 1 + (self.rng.next_u32() % 4) as usize;
        let mut out = String::new();
        for _ in 0..sentences {
            let words = 4 + (self.rng.next_u32() % 12) as usize;
            for w in 0..words {
                let roll = self.rng.next_u32();
                let word = self.next_word().to_string();
                if w == 0 {
                    let mut chars = word.chars();
                    if let Some(first) = chars.next() {
                        out.extend(first.to_uppercase());
                        out.push_str(chars.as_str());
                    }
                } else {
                    out.push_str(&word);
                }
                if w + 1 < words {
                    if roll % 13 == 0 {
                        out.push(',');
                    }
                    out.push(' ');
                }
            }
            out.push_str(". ");
        }
        out.trim_end().to_string()
    }

    /// Documents totalling at least `min_bytes` of text.
    pub fn corpus(&mut self, min_bytes: usize) -> Vec<String> {
        let mut docs = Vec::new();
        let mut bytes = 0;
        while bytes < min_bytes {
            let doc = self.document();
            bytes += doc.len() + 1;
            docs.push(doc);
        }
        docs
    }
}

// ---------------------------------------------------------------------
// From-scratch BPE reference
// ---------------------------------------------------------------------

/// BPE trainer that recounts every pair from scratch each round and
/// rewrites sequences by full scans. Shares only the selection contract
/// with the production trainer: most frequent pair, ties to the smaller
/// (concatenated, then left) surface, skip-and-ban merges whose surface
/// already exists, stop below pair count 2.
pub fn reference_bpe_merges(
    texts: &[String],
    boundary: Boundary,
    max_merges: usize,
) -> Vec<(String, String)> {
    let mut sequences: Vec<Vec<String>> = Vec::new();
    match boundary {
        Boundary::Document => {
            for t in texts {
                if !t.is_empty() {
                    sequences.push(t.chars().map(String::from).collect());
                }
            }
        }
        Boundary::Word => {
            for t in texts {
                for word in t.split_whitespace() {
                    sequences.push(word.chars().map(String::from).collect());
                }
            }
        }
    }
    let mut vocab: BTreeSet<String> = texts
        .iter()
        .flat_map(|t| t.chars())
        .map(String::from)
        .collect();
    let mut banned: HashSet<(String, String)> = HashSet::new();
    let mut merges = Vec::new();

    while merges.len() < max_merges {
        let mut counts: BTreeMap<(String, String), u64> = BTreeMap::new();
        for seq in &sequences {
            for pair in seq.windows(2) {
                *counts
                    .entry((pair[0].clone(), pair[1].clone()))
                    .or_insert(0) += 1;
            }
        }
        // Highest count; ties to smallest concatenated surface, then
        // smallest left part.
        let chosen = loop {
            let best = counts
                .iter()
                .filter(|(pair, &c)| c >= 2 && !banned.contains(pair))
                .max_by(|(pa, ca), (pb, cb)| {
                    ca.cmp(cb)
                        .then_with(|| {
                            let sa = format!("{}{}", pb.0, pb.1);
                            let sb = format!("{}{}", pa.0, pa.1);
                            sa.cmp(&sb)
                        })
                        .then_with(|| pb.0.cmp(&pa.0))
                })
                .map(|(pair, _)| pair.clone());
            match best {
                None => break None,
                Some(pair) => {
                    let surface = format!("{}{}", pair.0, pair.1);
                    if vocab.contains(&surface) {
                        banned.insert(pair);
                        continue;
                    }
                    break Some(pair);
                }
            }
        };
        let Some((left, right)) = chosen else { break };
        let surface = format!("{left}{right}");
        for seq in &mut sequences {
            let mut out: Vec<String> = Vec::with_capacity(seq.len());
            let mut i = 0;
            while i < seq.len() {
                if i + 1 < seq.len() && seq[i] == left && seq[i + 1] == right {
                    out.push(surface.clone());
                    i += 2;
                } else {
                    out.push(seq[i].clone());
                    i += 1;
                }
            }
            *seq = out;
        }
        vocab.insert(surface);
        merges.push((left, right));
    }
    merges
}

// ---------------------------------------------------------------------
// Naive merge replay (reference encoder)
// ---------------------------------------------------------------------

/// Encodes by applying each merge rule in table order with a full
/// left-to-right scan, the literal definition the fast encoder must match.
pub fn reference_encode_surfaces(text: &str, merges: &[(String, String)]) -> Vec<String> {
    let mut tokens: Vec<String> = text.chars().map(String::from).collect();
    for (left, right) in merges {
        if tokens.len() < 2 {
            break;
        }
        let mut out = Vec::with_capacity(tokens.len());
        let mut i = 0;
        while i < tokens.len() {
            if i + 1 < tokens.len() && &tokens[i] == left && &tokens[i + 1] == right {
                out.push(format!("{left}{right}"));
                i += 2;
            } else {
                out.push(std::mem::take(&mut tokens[i]));
                i += 1;
            }
        }
        tokens = out;
    }
    tokens
}

// ---------------------------------------------------------------------
// Quadratic edit-distance oracle
// ---------------------------------------------------------------------

/// Full-matrix Levenshtein, kept deliberately independent of the two-row
/// production implementation.
pub fn reference_levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut dp = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in dp.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=b.len() {
        dp[0][j] = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = dp[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            dp[i][j] = sub.min(dp[i - 1][j] + 1).min(dp[i][j - 1] + 1);
        }
    }
    dp[a.len()][b.len()]
}

// ---------------------------------------------------------------------
// Exhaustive two-segment fit oracle
// ---------------------------------------------------------------------

/// Naive per-candidate two-segment least squares over every admitted
/// breakpoint of a (rank, frequency) table. O(N^2), no prefix tricks.
pub fn reference_best_breakpoint(rows: &[(u64, u64)]) -> (u64, f64) {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .map(|&(r, f)| ((r as f64).ln(), (f as f64).ln()))
        .collect();
    let rss = |lo: usize, hi: usize| -> f64 {
        let seg = &pts[lo..hi];
        let n = seg.len() as f64;
        let mx = seg.iter().map(|p| p.0).sum::<f64>() / n;
        let my = seg.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = seg.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        let sxy: f64 = seg.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let syy: f64 = seg.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
        if sxx == 0.0 {
            return syy;
        }
        (syy - sxy * sxy / sxx).max(0.0)
    };
    let n = rows.len();
    let mut best = (0u64, f64::INFINITY);
    for split in 2..=(n - 2) {
        let total = rss(0, split) + rss(split, n);
        if total < best.1 {
            best = (rows[split - 1].0, total);
        }
    }
    best
}

// ---------------------------------------------------------------------
// Frequency-map helpers
// ---------------------------------------------------------------------

pub fn freq_map(items: &[(u32, u64)]) -> HashMap<u32, u64> {
    items.iter().copied().collect()
}

// ---------------------------------------------------------------------
// Merge-prefix reconstruction
// ---------------------------------------------------------------------

/// Rebuilds the vocabulary a BPE run would have produced at a smaller
/// target from a larger run on the same corpus: greedy merge selection
/// never looks ahead, so the smaller vocabulary is exactly the atom block
/// plus a prefix of the merge list.
pub fn bpe_prefix(
    vocab: &zipftok::tokenize::Vocabulary,
    merges: &zipftok::tokenize::MergeTable,
    target: usize,
) -> (zipftok::tokenize::Vocabulary, zipftok::tokenize::MergeTable) {
    use zipftok::tokenize::{Algorithm, VocabEntry, Vocabulary};
    let atom_count = vocab.len() - merges.len();
    assert!(target >= atom_count && target <= vocab.len());
    let entries: Vec<VocabEntry> = vocab.entries()[..target].to_vec();
    let prefix_merges = merges.pairs()[..target - atom_count].to_vec();
    (
        Vocabulary::new(Algorithm::Bpe, target, entries).unwrap(),
        zipftok::tokenize::MergeTable::new(prefix_merges),
    )
}
