//! Property tests for the spec-level invariants.

mod common;

use proptest::prelude::*;
use zipftok::corpus::{normalize, NormalizationPolicy};
use zipftok::pollkit::{levenshtein, normalized_levenshtein};
use zipftok::powerfit::sample_zipf;
use zipftok::zipfstats::rank_frequency;

fn short_ascii() -> impl Strategy<Value = String> {
    proptest::collection::vec(proptest::char::range('a', 'e'), 0..20)
        .prop_map(|v| v.into_iter().collect())
}

proptest! {
    #[test]
    fn normalize_is_idempotent(s in "\\PC{0,64}", lowercase in any::<bool>()) {
        let policy = NormalizationPolicy { lowercase };
        let once = normalize(&s, policy);
        prop_assert_eq!(normalize(&once, policy), once);
    }

    #[test]
    fn normalize_leaves_no_carriage_returns_or_runs(s in "\\PC{0,64}") {
        let out = normalize(&s, NormalizationPolicy::default());
        prop_assert!(!out.contains('\r'));
        prop_assert!(!out.contains("  "));
        prop_assert!(!out.contains('\t'));
    }

    #[test]
    fn levenshtein_matches_reference(a in short_ascii(), b in short_ascii()) {
        prop_assert_eq!(levenshtein(&a, &b), common::reference_levenshtein(&a, &b));
    }

    #[test]
    fn levenshtein_is_a_metric(a in short_ascii(), b in short_ascii(), c in short_ascii()) {
        let dab = levenshtein(&a, &b);
        let dba = levenshtein(&b, &a);
        prop_assert_eq!(dab, dba);
        prop_assert_eq!(dab == 0, a == b);
        let dac = levenshtein(&a, &c);
        let dcb = levenshtein(&c, &b);
        prop_assert!(dab <= dac + dcb);
    }

    #[test]
    fn levenshtein_respects_length_bounds(a in short_ascii(), b in short_ascii()) {
        let d = levenshtein(&a, &b);
        let (la, lb) = (a.chars().count(), b.chars().count());
        prop_assert!(d >= la.abs_diff(lb));
        prop_assert!(d <= la.max(lb));
        let nd = normalized_levenshtein(&a, &b);
        prop_assert!((0.0..=1.0).contains(&nd));
    }

    #[test]
    fn rank_frequency_is_sorted_permutation(counts in proptest::collection::vec(0u64..50, 0..64)) {
        let map: std::collections::HashMap<u32, u64> = counts
            .iter()
            .enumerate()
            .map(|(i, &c)| (i as u32, c))
            .collect();
        let table = rank_frequency(&map, 1);
        let rows = table.rows();
        for (i, row) in rows.iter().enumerate() {
            prop_assert_eq!(row.rank, i as u64 + 1);
            if i > 0 {
                prop_assert!(rows[i - 1].frequency >= row.frequency);
                if rows[i - 1].frequency == row.frequency {
                    prop_assert!(rows[i - 1].token_id < row.token_id);
                }
            }
        }
        let survivors: u64 = counts.iter().filter(|&&c| c > 0).sum();
        prop_assert_eq!(table.total_frequency(), survivors);
        prop_assert_eq!(rows.len(), counts.iter().filter(|&&c| c > 0).count());
    }

    #[test]
    fn sample_zipf_conserves_draws(s in 0.1f64..3.0, n_ranks in 1usize..200, draws in 0u64..5_000, seed in any::<u64>()) {
        let counts = sample_zipf(s, n_ranks, draws, seed);
        prop_assert_eq!(counts.iter().sum::<u64>(), draws);
        prop_assert_eq!(counts.len(), n_ranks);
    }
}

// Round trips cover all three encoders; the vocabulary is trained once
// outside the proptest loop.
mod round_trip {
    use super::*;
    use std::sync::OnceLock;
    use zipftok::tokenize::{
        decode, train_bpe, train_unigram, train_wordpiece, Boundary, MergeTable, UnigramParams,
        Vocabulary,
    };

    struct Fixtures {
        bpe: (Vocabulary, MergeTable),
        wordpiece: Vocabulary,
        unigram: Vocabulary,
    }

    fn fixtures() -> &'static Fixtures {
        static FIXTURES: OnceLock<Fixtures> = OnceLock::new();
        FIXTURES.get_or_init(|| {
            let mut gen = common::CorpusGen::new(9, 40);
            // Restrict to the proptest alphabet plus space.
            let texts: Vec<String> = gen
                .corpus(20_000)
                .into_iter()
                .map(|t| {
                    t.chars()
                        .map(|c| {
                            if c == ' ' {
                                ' '
                            } else {
                                char::from(b'a' + (c as u32 % 5) as u8)
                            }
                        })
                        .collect()
                })
                .collect();
            Fixtures {
                bpe: train_bpe(common::docs_from(&texts), 40, Boundary::Document).unwrap(),
                wordpiece: train_wordpiece(common::docs_from(&texts), 40, Boundary::Document)
                    .unwrap(),
                unigram: train_unigram(
                    common::docs_from(&texts),
                    30,
                    UnigramParams::default(),
                )
                .unwrap(),
            }
        })
    }

    fn text_strategy() -> impl Strategy<Value = String> {
        proptest::collection::vec(
            prop_oneof![
                proptest::char::range('a', 'e'),
                Just(' '),
            ],
            1..40,
        )
        .prop_map(|v| v.into_iter().collect())
    }

    proptest! {
        #[test]
        fn decode_inverts_encode(text in text_strategy()) {
            let f = fixtures();
            let (vocab, merges) = &f.bpe;
            let ids = zipftok::tokenize::encode(&text, vocab, Some(merges)).unwrap();
            prop_assert_eq!(decode(&ids, vocab).unwrap(), text.clone());

            let ids = zipftok::tokenize::encode(&text, &f.wordpiece, None).unwrap();
            prop_assert_eq!(decode(&ids, &f.wordpiece).unwrap(), text.clone());

            let ids = zipftok::tokenize::encode(&text, &f.unigram, None).unwrap();
            prop_assert_eq!(decode(&ids, &f.unigram).unwrap(), text);
        }
    }
}
