//! Scratch measurements (ignored by default; run explicitly while tuning
//! fixtures).

mod common;

use common::*;
use std::time::Instant;
use zipftok::tokenize::{token_frequencies, train_bpe, Boundary};
use zipftok::zipfstats::rank_frequency;

#[test]
#[ignore]
fn probe_zipf_emergence_small() {
    let t0 = Instant::now();
    let mut gen = CorpusGen::new(101, 30_000);
    let texts = gen.corpus(10_000_000);
    eprintln!("gen 10MB: {:?} ({} docs)", t0.elapsed(), texts.len());

    let t0 = Instant::now();
    let (vocab, merges) = train_bpe(docs_from(&texts), 10_000, Boundary::Word).unwrap();
    eprintln!("bpe 10k word: {:?}", t0.elapsed());
    let t0 = Instant::now();
    let freqs = token_frequencies(docs_from(&texts), &vocab, Some(&merges)).unwrap();
    eprintln!("re-encode: {:?}", t0.elapsed());
    let table = rank_frequency(&freqs, 1);
    let fit = zipftok::powerfit::fit_zipf_ls(&table, (10, 1000)).unwrap();
    eprintln!(
        "bpe@10k: table {} rows, exponent {:.4}, r2 {:.5}",
        table.len(),
        fit.exponent,
        fit.r_squared
    );
}

#[test]
#[ignore]
fn probe_bend_emergence_small() {
    let mut gen = CorpusGen::new(202, 50_000);
    let texts = gen.corpus(10_000_000);
    let t0 = Instant::now();
    let (vocab, merges) = train_bpe(docs_from(&texts), 100_000, Boundary::Document).unwrap();
    eprintln!("bpe 100k doc on 10MB: {:?}", t0.elapsed());
    for target in [10_000usize, 30_000, 100_000] {
        let (v, m) = bpe_prefix(&vocab, &merges, target);
        let t1 = Instant::now();
        let freqs = token_frequencies(docs_from(&texts), &v, Some(&m)).unwrap();
        let table = rank_frequency(&freqs, 1);
        let fit = zipftok::powerfit::fit_broken_zipf(&table).unwrap();
        eprintln!(
            "vocab {target}: rows {}, breakpoint {}, head {:.3}, tail {:.3}, delta_bic {:.1}, encode {:?}",
            table.len(),
            fit.breakpoint_rank,
            fit.head.exponent,
            fit.tail.exponent,
            fit.delta_bic,
            t1.elapsed()
        );
        let bands = zipftok::zipfstats::rank_band_lengths(&table, &v, 10).unwrap();
        eprintln!(
            "  band means: first {:.2}, last {:.2}",
            bands[0].mean_length,
            bands[9].mean_length
        );
    }
}

#[test]
#[ignore]
fn probe_bpe_scaling() {
    let mut gen = CorpusGen::new(202, 50_000);
    let texts = gen.corpus(10_000_000);
    for target in [10_000usize, 30_000] {
        let t0 = Instant::now();
        let (v, _) = train_bpe(docs_from(&texts), target, Boundary::Document).unwrap();
        eprintln!("bpe {target} doc: {:?} (vocab {})", t0.elapsed(), v.len());
    }
}

#[test]
#[ignore]
fn probe_c5_c10_scale() {
    let t0 = Instant::now();
    let mut gen = CorpusGen::new(202, 50_000);
    let texts = gen.corpus(50_000_000);
    eprintln!("gen 50MB: {:?} ({} docs)", t0.elapsed(), texts.len());
    let t0 = Instant::now();
    let (vocab, merges) = train_bpe(docs_from(&texts), 100_000, Boundary::Document).unwrap();
    eprintln!("bpe 100k doc on 50MB: {:?}", t0.elapsed());
    let t0 = Instant::now();
    let freqs = token_frequencies(docs_from(&texts), &vocab, Some(&merges)).unwrap();
    eprintln!("re-encode: {:?}", t0.elapsed());
    let table = rank_frequency(&freqs, 1);
    let bands = zipftok::zipfstats::rank_band_lengths(&table, &vocab, 10).unwrap();
    eprintln!(
        "rows {}; band means first {:.2} last {:.2}; medians first {:.1} last {:.1}",
        table.len(),
        bands[0].mean_length,
        bands[9].mean_length,
        bands[0].median_length,
        bands[9].median_length
    );
    let fit = zipftok::powerfit::fit_broken_zipf(&table).unwrap();
    eprintln!(
        "breakpoint {}, head {:.3}, tail {:.3}, delta_bic {:.1}",
        fit.breakpoint_rank, fit.head.exponent, fit.tail.exponent, fit.delta_bic
    );
}
