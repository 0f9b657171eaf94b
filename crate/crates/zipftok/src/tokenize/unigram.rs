//! Unigram trainer: seed a large candidate set from frequent substrings,
//! fit piece probabilities by expectation-maximization over segmentation
//! lattices, and prune low-usage pieces until the target size is reached.

use rayon::prelude::*;
use rustc_hash::FxHashMap;

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::tokenize::sa;
use crate::tokenize::{Algorithm, TokenId, VocabEntry, Vocabulary};

/// Longest candidate piece, in characters.
const MAX_PIECE_CHARS: u32 = 16;
/// EM iterations between prune steps.
const EM_ITERS_PER_ROUND: usize = 2;

#[derive(Debug, Clone, Copy)]
pub struct UnigramParams {
    /// Seed candidate set size as a multiple of the target size.
    pub seed_multiplier: f64,
    /// Fraction of pieces dropped per prune round.
    pub prune_fraction: f64,
}

impl Default for UnigramParams {
    fn default() -> Self {
        UnigramParams {
            seed_multiplier: 4.0,
            prune_fraction: 0.25,
        }
    }
}

/// Corpus log-likelihood per EM iteration, grouped by prune round.
/// Within a round the sequence is non-decreasing; pruning between rounds
/// may lower it.
#[derive(Debug, Clone, Default)]
pub struct UnigramTrainStats {
    pub rounds: Vec<Vec<f64>>,
}

pub fn train_unigram<I>(docs: I, target_size: usize, params: UnigramParams) -> Result<Vocabulary>
where
    I: IntoIterator<Item = Result<Document>>,
{
    train_unigram_with_stats(docs, target_size, params).map(|(v, _)| v)
}

pub fn train_unigram_with_stats<I>(
    docs: I,
    target_size: usize,
    params: UnigramParams,
) -> Result<(Vocabulary, UnigramTrainStats)>
where
    I: IntoIterator<Item = Result<Document>>,
{
    if params.seed_multiplier <= 1.0 {
        return Err(Error::param(format!(
            "seed multiplier must exceed 1, got {}",
            params.seed_multiplier
        )));
    }
    if !(params.prune_fraction > 0.0 && params.prune_fraction < 1.0) {
        return Err(Error::param(format!(
            "prune fraction must lie in (0, 1), got {}",
            params.prune_fraction
        )));
    }

    let mut texts: Vec<String> = Vec::new();
    for doc in docs {
        let doc = doc?;
        if !doc.text.is_empty() {
            texts.push(doc.text);
        }
    }
    if texts.is_empty() {
        return Err(Error::param("corpus is empty"));
    }

    let corpus = FlatCorpus::build(&texts);
    drop(texts);
    if target_size < corpus.alphabet.len() {
        return Err(Error::param(format!(
            "target size {} is below the alphabet size {}",
            target_size,
            corpus.alphabet.len()
        )));
    }

    let mut pieces = seed_pieces(&corpus, target_size, params.seed_multiplier);
    let atom_count = corpus.alphabet.len();
    let lattice = MatchLattice::build(&corpus, &pieces);

    // Initial distribution proportional to raw seed counts.
    let mut probs: Vec<f64> = {
        let total: f64 = pieces.iter().map(|p| p.seed_count as f64).sum();
        pieces.iter().map(|p| p.seed_count as f64 / total).collect()
    };
    let mut active: Vec<bool> = vec![true; pieces.len()];
    let mut active_count = pieces.len();

    let mut stats = UnigramTrainStats::default();
    let mut expected: Vec<f64> = vec![0.0; pieces.len()];
    loop {
        let mut round_loglik = Vec::with_capacity(EM_ITERS_PER_ROUND);
        for _ in 0..EM_ITERS_PER_ROUND {
            let logp = to_logp(&probs, &active);
            let (loglik, exp) = lattice.e_step(&corpus, &logp);
            round_loglik.push(loglik);
            expected = exp;
            let total: f64 = expected.iter().sum();
            for (p, e) in probs.iter_mut().zip(&expected) {
                *p = e / total;
            }
        }

        if active_count <= target_size {
            // One more E step so the reported expected counts match the
            // final distribution.
            let logp = to_logp(&probs, &active);
            let (loglik, exp) = lattice.e_step(&corpus, &logp);
            round_loglik.push(loglik);
            expected = exp;
            stats.rounds.push(round_loglik);
            break;
        }
        stats.rounds.push(round_loglik);

        // Prune the lowest-usage pieces; atoms always survive.
        let drop = ((active_count as f64) * params.prune_fraction).floor() as usize;
        let mut keep = active_count.saturating_sub(drop).max(target_size);
        if keep == active_count {
            keep = active_count - 1;
        }
        let keep_non_atoms = keep.saturating_sub(atom_count);
        let mut order: Vec<u32> = (atom_count as u32..pieces.len() as u32)
            .filter(|&i| active[i as usize])
            .collect();
        order.sort_unstable_by(|&a, &b| {
            expected[b as usize]
                .partial_cmp(&expected[a as usize])
                .unwrap()
                .then_with(|| pieces[a as usize].surface.cmp(&pieces[b as usize].surface))
        });
        for &i in order.iter().skip(keep_non_atoms) {
            active[i as usize] = false;
            active_count -= 1;
        }
        let total: f64 = expected
            .iter()
            .zip(&active)
            .filter(|(_, &a)| a)
            .map(|(e, _)| *e)
            .sum();
        for i in 0..pieces.len() {
            probs[i] = if active[i] { expected[i] / total } else { 0.0 };
        }
    }

    // Assemble the vocabulary: atoms in character order, then surviving
    // pieces by decreasing expected usage.
    let mut non_atoms: Vec<u32> = (atom_count as u32..pieces.len() as u32)
        .filter(|&i| active[i as usize])
        .collect();
    non_atoms.sort_unstable_by(|&a, &b| {
        expected[b as usize]
            .partial_cmp(&expected[a as usize])
            .unwrap()
            .then_with(|| pieces[a as usize].surface.cmp(&pieces[b as usize].surface))
    });

    let mut entries = Vec::with_capacity(active_count);
    for i in 0..atom_count {
        let freq = expected[i].round() as u64;
        entries.push(VocabEntry {
            token_id: entries.len() as TokenId,
            surface: std::mem::take(&mut pieces[i].surface),
            char_length: 1,
            train_frequency: freq.max(1),
        });
    }
    for &i in &non_atoms {
        let piece = &mut pieces[i as usize];
        entries.push(VocabEntry {
            token_id: entries.len() as TokenId,
            char_length: piece.surface.chars().count() as u32,
            surface: std::mem::take(&mut piece.surface),
            train_frequency: expected[i as usize].round() as u64,
        });
    }
    if entries.len() < target_size {
        log::warn!(
            "unigram training stopped at {} of {} tokens: not enough repeated substrings",
            entries.len(),
            target_size
        );
    }
    let vocab = Vocabulary::new(Algorithm::Unigram, target_size, entries)?;
    Ok((vocab, stats))
}

fn to_logp(probs: &[f64], active: &[bool]) -> Vec<f64> {
    probs
        .iter()
        .zip(active)
        .map(|(&p, &a)| {
            if a && p > 0.0 {
                p.ln()
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect()
}

struct Piece {
    surface: String,
    seed_count: u64,
}

/// Documents flattened to one symbol stream with unique separators, plus
/// the sorted training alphabet.
struct FlatCorpus {
    symbols: Vec<u32>,
    /// Half-open symbol ranges, one per document.
    doc_ranges: Vec<(u32, u32)>,
    alphabet: Vec<char>,
}

/// Separators sit above the Unicode scalar range so they can never equal
/// a text symbol or take part in a repeated substring.
const SEPARATOR_BASE: u32 = 0x0020_0000;

impl FlatCorpus {
    fn build(texts: &[String]) -> FlatCorpus {
        let total: usize = texts.iter().map(|t| t.chars().count()).sum();
        let mut symbols = Vec::with_capacity(total + texts.len());
        let mut doc_ranges = Vec::with_capacity(texts.len());
        let mut alphabet_set: Vec<char> = Vec::new();
        for (i, text) in texts.iter().enumerate() {
            let start = symbols.len() as u32;
            for c in text.chars() {
                symbols.push(c as u32);
                alphabet_set.push(c);
            }
            doc_ranges.push((start, symbols.len() as u32));
            symbols.push(SEPARATOR_BASE + i as u32);
        }
        alphabet_set.sort_unstable();
        alphabet_set.dedup();
        FlatCorpus {
            symbols,
            doc_ranges,
            alphabet: alphabet_set,
        }
    }
}

/// Seed set: every atom, plus the most frequent repeated substrings of
/// 2..=16 characters, capped at `seed_multiplier * target_size` pieces in
/// total. Ties on count break toward the lexicographically smaller
/// surface.
fn seed_pieces(corpus: &FlatCorpus, target_size: usize, seed_multiplier: f64) -> Vec<Piece> {
    let cap = ((target_size as f64 * seed_multiplier).round() as usize)
        .max(corpus.alphabet.len());
    let want = cap - corpus.alphabet.len();

    let mut atom_counts: FxHashMap<char, u64> = FxHashMap::default();
    for &(start, end) in &corpus.doc_ranges {
        for &s in &corpus.symbols[start as usize..end as usize] {
            *atom_counts
                .entry(char::from_u32(s).expect("text symbol"))
                .or_insert(0) += 1;
        }
    }

    let mut candidates: Vec<sa::Repeat> = Vec::new();
    if want > 0 {
        sa::enumerate_repeats(&corpus.symbols, 2, MAX_PIECE_CHARS, |r| candidates.push(r));
    }
    let surface_of = |r: &sa::Repeat| &corpus.symbols[r.pos as usize..(r.pos + r.len) as usize];
    let better = |a: &sa::Repeat, b: &sa::Repeat| {
        b.count
            .cmp(&a.count)
            .then_with(|| surface_of(a).cmp(surface_of(b)))
    };
    let kept = want.min(candidates.len());
    if kept > 0 && kept < candidates.len() {
        candidates.select_nth_unstable_by(kept - 1, |a, b| better(a, b));
        candidates.truncate(kept);
    }
    candidates.sort_unstable_by(|a, b| better(a, b));

    let mut pieces: Vec<Piece> = corpus
        .alphabet
        .iter()
        .map(|&c| Piece {
            surface: c.to_string(),
            seed_count: atom_counts[&c],
        })
        .collect();
    for r in &candidates {
        let surface: String = surface_of(r)
            .iter()
            .map(|&s| char::from_u32(s).expect("text symbol"))
            .collect();
        pieces.push(Piece {
            surface,
            seed_count: r.count as u64,
        });
    }
    pieces
}

/// Precomputed piece occurrences: for every corpus position, the pieces
/// starting there. Built once; EM iterations then run without any hash
/// lookups.
struct MatchLattice {
    /// CSR offsets into `matches`, one slot per symbol position plus one.
    offsets: Vec<u32>,
    /// (piece index, match length in symbols).
    matches: Vec<(u32, u32)>,
}

impl MatchLattice {
    fn build(corpus: &FlatCorpus, pieces: &[Piece]) -> MatchLattice {
        // Piece trie over symbol values.
        let mut children: FxHashMap<(u32, u32), u32> = FxHashMap::default();
        let mut terminal: Vec<Option<u32>> = vec![None];
        let mut node_count = 1u32;
        for (idx, piece) in pieces.iter().enumerate() {
            let mut node = 0u32;
            for c in piece.surface.chars() {
                let key = (node, c as u32);
                node = *children.entry(key).or_insert_with(|| {
                    let id = node_count;
                    node_count += 1;
                    terminal.push(None);
                    id
                });
            }
            terminal[node as usize] = Some(idx as u32);
        }

        let n = corpus.symbols.len();
        let children = &children;
        let terminal = &terminal;
        let per_pos: Vec<Vec<(u32, u32)>> = corpus
            .doc_ranges
            .par_iter()
            .flat_map_iter(|&(start, end)| {
                (start..end).map(move |pos| {
                    let mut out = Vec::new();
                    let mut node = 0u32;
                    let limit = end.min(pos + MAX_PIECE_CHARS);
                    for i in pos..limit {
                        match children.get(&(node, corpus.symbols[i as usize])) {
                            Some(&next) => node = next,
                            None => break,
                        }
                        if let Some(piece) = terminal[node as usize] {
                            out.push((piece, i - pos + 1));
                        }
                    }
                    out
                })
            })
            .collect();

        // Separator positions have no matches; map document positions back
        // onto the full symbol index space.
        let mut offsets = vec![0u32; n + 1];
        let mut matches = Vec::new();
        let mut flat_iter = per_pos.into_iter();
        for &(start, end) in &corpus.doc_ranges {
            for pos in start..end {
                offsets[pos as usize] = matches.len() as u32;
                let pos_matches = flat_iter.next().expect("one entry per document position");
                matches.extend(pos_matches);
                offsets[pos as usize + 1] = matches.len() as u32;
            }
        }
        // Fill offsets for separator slots so every window is well formed.
        let mut last = 0;
        for o in offsets.iter_mut() {
            if *o < last {
                *o = last;
            }
            last = *o;
        }
        MatchLattice { offsets, matches }
    }

    fn at(&self, pos: u32) -> &[(u32, u32)] {
        &self.matches[self.offsets[pos as usize] as usize..self.offsets[pos as usize + 1] as usize]
    }

    /// One E step: corpus log-likelihood and per-piece expected counts
    /// under `logp`. Documents are processed in fixed chunks and reduced
    /// in order, so results do not depend on the thread count.
    fn e_step(&self, corpus: &FlatCorpus, logp: &[f64]) -> (f64, Vec<f64>) {
        let n_docs = corpus.doc_ranges.len();
        let chunk = n_docs.div_ceil(256).max(1);
        let chunks: Vec<&[(u32, u32)]> = corpus.doc_ranges.chunks(chunk).collect();

        let parts: Vec<(f64, Vec<f64>)> = chunks
            .par_iter()
            .map(|ranges| {
                let mut expected = vec![0.0f64; logp.len()];
                let mut loglik = 0.0f64;
                let mut alpha: Vec<f64> = Vec::new();
                let mut beta: Vec<f64> = Vec::new();
                for &(start, end) in ranges.iter() {
                    let len = (end - start) as usize;
                    alpha.clear();
                    alpha.resize(len + 1, f64::NEG_INFINITY);
                    beta.clear();
                    beta.resize(len + 1, f64::NEG_INFINITY);
                    alpha[0] = 0.0;
                    for i in 0..len {
                        let a = alpha[i];
                        if a == f64::NEG_INFINITY {
                            continue;
                        }
                        for &(piece, plen) in self.at(start + i as u32) {
                            let lp = logp[piece as usize];
                            if lp == f64::NEG_INFINITY {
                                continue;
                            }
                            let j = i + plen as usize;
                            alpha[j] = log_add(alpha[j], a + lp);
                        }
                    }
                    let log_z = alpha[len];
                    debug_assert!(log_z > f64::NEG_INFINITY);
                    loglik += log_z;

                    beta[len] = 0.0;
                    for i in (0..len).rev() {
                        let mut b = f64::NEG_INFINITY;
                        for &(piece, plen) in self.at(start + i as u32) {
                            let lp = logp[piece as usize];
                            if lp == f64::NEG_INFINITY {
                                continue;
                            }
                            let j = i + plen as usize;
                            if beta[j] == f64::NEG_INFINITY {
                                continue;
                            }
                            b = log_add(b, lp + beta[j]);
                            if alpha[i] > f64::NEG_INFINITY {
                                let post = (alpha[i] + lp + beta[j] - log_z).exp();
                                expected[piece as usize] += post;
                            }
                        }
                        beta[i] = b;
                    }
                }
                (loglik, expected)
            })
            .collect();

        let mut loglik = 0.0;
        let mut expected = vec![0.0f64; logp.len()];
        for (part_ll, part_exp) in parts {
            loglik += part_ll;
            for (e, p) in expected.iter_mut().zip(part_exp) {
                *e += p;
            }
        }
        (loglik, expected)
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;

    fn docs(texts: &[&str]) -> Vec<Result<Document>> {
        texts
            .iter()
            .enumerate()
            .map(|(i, t)| {
                Ok(Document {
                    doc_id: i as u64,
                    text: (*t).to_string(),
                })
            })
            .collect()
    }

    #[test]
    fn single_symbol_corpus_collapses_to_one_atom() {
        let (vocab, _) =
            train_unigram_with_stats(docs(&["aaaa"]), 1, UnigramParams::default()).unwrap();
        assert_eq!(vocab.len(), 1);
        let e = &vocab.entries()[0];
        assert_eq!(e.surface, "a");
        assert_eq!(e.train_frequency, 4);
    }

    #[test]
    fn loglik_non_decreasing_within_rounds() {
        let texts = ["the cat sat", "the bat sat", "the cat and the bat"];
        let (_, stats) =
            train_unigram_with_stats(docs(&texts), 12, UnigramParams::default()).unwrap();
        for round in &stats.rounds {
            for pair in round.windows(2) {
                let tol = 1e-9 * pair[0].abs().max(1.0);
                assert!(
                    pair[1] >= pair[0] - tol,
                    "log-likelihood decreased: {} -> {}",
                    pair[0],
                    pair[1]
                );
            }
        }
    }

    #[test]
    fn repeated_bigram_dominates_its_atoms() {
        // 100 documents of "ab": exact EM over the candidate set {a, b, ab}
        // sends nearly all mass to "ab".
        let texts: Vec<String> = (0..100).map(|_| "ab".to_string()).collect();
        let doc_vec: Vec<Result<Document>> = texts
            .iter()
            .enumerate()
            .map(|(i, t)| {
                Ok(Document {
                    doc_id: i as u64,
                    text: t.clone(),
                })
            })
            .collect();
        let vocab = train_unigram(doc_vec, 3, UnigramParams::default()).unwrap();
        assert_eq!(vocab.len(), 3);
        let ab = vocab.entry(vocab.id_of("ab").expect("ab survives")).unwrap();
        let a = vocab.entry(vocab.id_of("a").unwrap()).unwrap();
        let b = vocab.entry(vocab.id_of("b").unwrap()).unwrap();
        assert!(ab.train_frequency > a.train_frequency);
        assert!(ab.train_frequency > b.train_frequency);
    }

    #[test]
    fn rejects_bad_parameters() {
        let params = UnigramParams {
            seed_multiplier: 1.0,
            ..UnigramParams::default()
        };
        assert!(train_unigram(docs(&["abc"]), 3, params).is_err());
        let params = UnigramParams {
            prune_fraction: 1.0,
            ..UnigramParams::default()
        };
        assert!(train_unigram(docs(&["abc"]), 3, params).is_err());
        assert!(train_unigram(docs(&[]), 3, UnigramParams::default()).is_err());
        assert!(train_unigram(docs(&["abc"]), 2, UnigramParams::default()).is_err());
    }

    #[test]
    fn training_is_deterministic() {
        let texts = ["mississippi river", "mississippi mud", "river mud"];
        let (v1, _) = train_unigram_with_stats(docs(&texts), 15, UnigramParams::default()).unwrap();
        let (v2, _) = train_unigram_with_stats(docs(&texts), 15, UnigramParams::default()).unwrap();
        assert_eq!(v1.entries(), v2.entries());
    }
}
