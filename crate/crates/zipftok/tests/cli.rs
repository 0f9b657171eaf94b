//! End-to-end tests of the command-line interface: happy paths, the
//! exit-code contract (0 ok, 2 usage, 3 I/O, 4 computation), and
//! byte-level determinism of the full pipeline.

mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_zipftok"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn assert_exit(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn write_corpus(dir: &Path, name: &str, min_bytes: usize, seed: u64) -> PathBuf {
    let mut gen = common::CorpusGen::new(seed, 400);
    let path = dir.join(name);
    std::fs::write(&path, gen.corpus(min_bytes).join("\n") + "\n").unwrap();
    path
}

fn s(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

#[test]
fn train_freq_fit_plot_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path(), "corpus.txt", 60_000, 1);
    let prefix = dir.path().join("run");

    let out = run(&[
        "train",
        "--corpus",
        &s(&corpus),
        "--algo",
        "bpe",
        "--vocab-size",
        "300",
        "--out-prefix",
        &s(&prefix),
    ]);
    assert_exit(&out, 0);
    let vocab = dir.path().join("run.vocab.tsv");
    let merges = dir.path().join("run.merges.tsv");
    let manifest = dir.path().join("run.manifest.json");
    assert!(vocab.is_file() && merges.is_file() && manifest.is_file());
    let manifest_text = std::fs::read_to_string(&manifest).unwrap();
    assert!(manifest_text.contains("\"algorithm\": \"bpe\""));
    assert!(manifest_text.contains("\"corpus_sha256\""));

    let rf = dir.path().join("rf.csv");
    let out = run(&[
        "freq",
        "--corpus",
        &s(&corpus),
        "--vocab",
        &s(&vocab),
        "--algo",
        "bpe",
        "--merges",
        &s(&merges),
        "--out",
        &s(&rf),
    ]);
    assert_exit(&out, 0);
    let table = zipftok::zipfstats::RankFrequencyTable::load_csv(&rf).unwrap();
    assert!(table.len() > 50);

    let report = dir.path().join("fit.json");
    let out = run(&[
        "fit", "--input", &s(&rf), "--detect", "--additive", "--mle", "--out", &s(&report),
    ]);
    assert_exit(&out, 0);
    let parsed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert!(parsed["model_preferred"].is_string());
    assert!(parsed["single"]["exponent"].is_number());
    assert!(parsed["broken"]["breakpoint_rank"].is_u64());
    assert!(parsed["phase_transition"]["detected"].is_boolean());

    let svg_path = dir.path().join("plot.svg");
    let out = run(&["plot", "--input", &s(&rf), "--fit", &s(&report), "--out", &s(&svg_path)]);
    assert_exit(&out, 0);
    let svg = std::fs::read_to_string(&svg_path).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("class=\"pt\""));
}

#[test]
fn train_rejects_vocab_size_below_alphabet() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path(), "corpus.txt", 5_000, 2);
    let out = run(&[
        "train",
        "--corpus",
        &s(&corpus),
        "--algo",
        "bpe",
        "--vocab-size",
        "10",
        "--out-prefix",
        &s(&dir.path().join("x")),
    ]);
    assert_exit(&out, 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("alphabet"));
}

#[test]
fn train_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path(), "corpus.txt", 30_000, 3);
    for prefix in ["a", "b"] {
        let out = run(&[
            "train",
            "--corpus",
            &s(&corpus),
            "--algo",
            "bpe",
            "--vocab-size",
            "200",
            "--out-prefix",
            &s(&dir.path().join(prefix)),
        ]);
        assert_exit(&out, 0);
    }
    let a = std::fs::read(dir.path().join("a.vocab.tsv")).unwrap();
    let b = std::fs::read(dir.path().join("b.vocab.tsv")).unwrap();
    assert_eq!(a, b);
    let a = std::fs::read(dir.path().join("a.merges.tsv")).unwrap();
    let b = std::fs::read(dir.path().join("b.merges.tsv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn freq_missing_vocabulary_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path(), "corpus.txt", 2_000, 4);
    let out = run(&[
        "freq",
        "--corpus",
        &s(&corpus),
        "--vocab",
        &s(&dir.path().join("missing.tsv")),
        "--algo",
        "wordpiece",
        "--out",
        &s(&dir.path().join("rf.csv")),
    ]);
    assert_exit(&out, 2);
}

#[test]
fn freq_min_count_matches_library_filtering() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path(), "corpus.txt", 30_000, 5);
    let prefix = dir.path().join("run");
    assert_exit(
        &run(&[
            "train",
            "--corpus",
            &s(&corpus),
            "--algo",
            "wordpiece",
            "--vocab-size",
            "150",
            "--out-prefix",
            &s(&prefix),
        ]),
        0,
    );
    let vocab_path = dir.path().join("run.vocab.tsv");
    for (min_count, name) in [("1", "rf1.csv"), ("5", "rf5.csv")] {
        assert_exit(
            &run(&[
                "freq",
                "--corpus",
                &s(&corpus),
                "--vocab",
                &s(&vocab_path),
                "--algo",
                "wordpiece",
                "--min-count",
                min_count,
                "--out",
                &s(&dir.path().join(name)),
            ]),
            0,
        );
    }
    let full = zipftok::zipfstats::RankFrequencyTable::load_csv(&dir.path().join("rf1.csv")).unwrap();
    let filtered =
        zipftok::zipfstats::RankFrequencyTable::load_csv(&dir.path().join("rf5.csv")).unwrap();
    assert!(filtered.len() < full.len());
    assert!(filtered.rows().iter().all(|r| r.frequency >= 5));

    // Same filtering through the library on the full table's counts.
    let counts: std::collections::HashMap<u32, u64> = full
        .rows()
        .iter()
        .map(|r| (r.token_id, r.frequency))
        .collect();
    let expect = zipftok::zipfstats::rank_frequency(&counts, 5);
    assert_eq!(expect.rows(), filtered.rows());
}

#[test]
fn fit_prefers_single_on_pure_zipf_and_broken_on_piecewise() {
    let dir = tempfile::tempdir().unwrap();

    let mut single_csv = String::from("rank,token_id,frequency\n");
    for r in 1..=500u64 {
        let f = (1e12 * (r as f64).powf(-1.1)).round() as u64;
        single_csv.push_str(&format!("{r},{},{f}\n", r - 1));
    }
    let single_path = dir.path().join("single.csv");
    std::fs::write(&single_path, &single_csv).unwrap();
    let report = dir.path().join("single.json");
    assert_exit(&run(&["fit", "--input", &s(&single_path), "--out", &s(&report)]), 0);
    let parsed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(parsed["model_preferred"], "single");

    let mut broken_csv = String::from("rank,token_id,frequency\n");
    for r in 1..=500u64 {
        let f = if r <= 60 {
            1e12 * (r as f64).powf(-0.7)
        } else {
            1e12 * 60f64.powf(1.0) * (r as f64).powf(-1.7)
        };
        broken_csv.push_str(&format!("{r},{},{}\n", r - 1, f.round() as u64));
    }
    let broken_path = dir.path().join("broken.csv");
    std::fs::write(&broken_path, &broken_csv).unwrap();
    let report = dir.path().join("broken.json");
    assert_exit(
        &run(&["fit", "--input", &s(&broken_path), "--detect", "--out", &s(&report)]),
        0,
    );
    let parsed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(parsed["model_preferred"], "broken");
    assert!(parsed["phase_transition"]["detected"].as_bool().unwrap());
    let breakpoint = parsed["broken"]["breakpoint_rank"].as_u64().unwrap();
    assert!((40..=90).contains(&breakpoint), "breakpoint {breakpoint}");

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "rank,token_id\n1,2\n").unwrap();
    assert_exit(
        &run(&["fit", "--input", &s(&bad), "--out", &s(&dir.path().join("x.json"))]),
        2,
    );
}

#[test]
fn lengths_classify_sample_workflow() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path(), "corpus.txt", 60_000, 6);
    let prefix = dir.path().join("run");
    assert_exit(
        &run(&[
            "train",
            "--corpus",
            &s(&corpus),
            "--algo",
            "bpe",
            "--vocab-size",
            "400",
            "--boundary",
            "document",
            "--out-prefix",
            &s(&prefix),
        ]),
        0,
    );
    let vocab = dir.path().join("run.vocab.tsv");
    let merges = dir.path().join("run.merges.tsv");
    let rf = dir.path().join("rf.csv");
    assert_exit(
        &run(&[
            "freq",
            "--corpus",
            &s(&corpus),
            "--vocab",
            &s(&vocab),
            "--algo",
            "bpe",
            "--merges",
            &s(&merges),
            "--out",
            &s(&rf),
        ]),
        0,
    );

    let lengths = dir.path().join("lengths.csv");
    assert_exit(
        &run(&["lengths", "--vocab", &s(&vocab), "--weighting", "by-type", "--out", &s(&lengths)]),
        0,
    );
    let text = std::fs::read_to_string(&lengths).unwrap();
    assert!(text.starts_with("length,count\n"));
    let total: u64 = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse::<u64>().unwrap())
        .sum();
    let vocab_rows = std::fs::read_to_string(&vocab).unwrap().lines().count() - 1;
    assert_eq!(total, vocab_rows as u64);

    // by-occurrence needs --freq.
    assert_exit(
        &run(&["lengths", "--vocab", &s(&vocab), "--weighting", "by-occurrence", "--out", &s(&lengths)]),
        2,
    );

    let classified = dir.path().join("classes.csv");
    assert_exit(
        &run(&[
            "classify",
            "--vocab",
            &s(&vocab),
            "--freq",
            &s(&rf),
            "--breakpoint",
            "30",
            "--out",
            &s(&classified),
        ]),
        0,
    );
    let text = std::fs::read_to_string(&classified).unwrap();
    assert!(text.starts_with("token_id,surface,rank,char_length,class\n"));
    assert!(text.contains(",atom"));
    assert!(text.contains(",pragma"));
    assert!(text.contains(",idea"));

    // Breakpoint outside the table is a usage error.
    assert_exit(
        &run(&[
            "classify",
            "--vocab",
            &s(&vocab),
            "--freq",
            &s(&rf),
            "--breakpoint",
            "99999999",
            "--out",
            &s(&classified),
        ]),
        2,
    );

    let sample = dir.path().join("sample.csv");
    let sample_args = [
        "sample",
        "--vocab",
        &s(&vocab),
        "--freq",
        &s(&rf),
        "--head-n",
        "5",
        "--tail-n",
        "5",
        "--min-tail-length",
        "2",
        "--seed",
        "11",
        "--out",
        &s(&sample),
    ];
    assert_exit(&run(&sample_args.iter().map(|s| s as &str).collect::<Vec<_>>()), 0);
    let first = std::fs::read_to_string(&sample).unwrap();
    assert_exit(&run(&sample_args.iter().map(|s| s as &str).collect::<Vec<_>>()), 0);
    assert_eq!(std::fs::read_to_string(&sample).unwrap(), first);
    assert_eq!(first.lines().count(), 11);
    assert!(first.contains(",head"));
    assert!(first.contains(",tail"));

    // An impossible tail filter is a usage error.
    assert_exit(
        &run(&[
            "sample",
            "--vocab",
            &s(&vocab),
            "--freq",
            &s(&rf),
            "--head-n",
            "1",
            "--tail-n",
            "5",
            "--min-tail-length",
            "200",
            "--out",
            &s(&sample),
        ]),
        2,
    );
}

#[test]
fn poll_analyses_and_validation() {
    let dir = tempfile::tempdir().unwrap();
    let poll = dir.path().join("poll.csv");
    std::fs::write(
        &poll,
        "respondent_id,token,can_reformulate,restatement,meanings,context\n\
         r1,cat,true,feline,3,the cat sat\n\
         r1,of course,true,naturally,1,\"well, of course\"\n\
         r2,cat,false,,2,a cat appears\n",
    )
    .unwrap();
    let out_dir = dir.path().join("analysis");
    assert_exit(&run(&["poll", "--input", &s(&poll), "--out-dir", &s(&out_dir)]), 0);
    for name in [
        "meanings.csv",
        "meanings_heatmap.csv",
        "restatement_distance.csv",
        "context_rate.csv",
        "context_distance.csv",
    ] {
        assert!(out_dir.join(name).is_file(), "missing {name}");
    }
    let meanings = std::fs::read_to_string(out_dir.join("meanings.csv")).unwrap();
    assert!(meanings.starts_with("length_bin,value,count\n"));
    assert!(meanings.contains("3,2.5,2"));

    let bad = dir.path().join("bad.csv");
    std::fs::write(
        &bad,
        "respondent_id,token,can_reformulate,restatement,meanings,context\n\
         r1,cat,false,feline,2,\n",
    )
    .unwrap();
    let out = run(&["poll", "--input", &s(&bad), "--out-dir", &s(&out_dir)]);
    assert_exit(&out, 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn plot_counts_points_and_rejects_empty() {
    let dir = tempfile::tempdir().unwrap();
    let rf = dir.path().join("three.csv");
    std::fs::write(&rf, "rank,token_id,frequency\n1,0,100\n2,1,50\n3,2,20\n").unwrap();
    let svg_path = dir.path().join("out.svg");
    assert_exit(&run(&["plot", "--input", &s(&rf), "--out", &s(&svg_path)]), 0);
    let svg = std::fs::read_to_string(&svg_path).unwrap();
    assert_eq!(svg.matches("<circle").count(), 3);

    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "rank,token_id,frequency\n").unwrap();
    assert_exit(&run(&["plot", "--input", &s(&empty), "--out", &s(&svg_path)]), 2);
}

#[test]
fn undecodable_corpus_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("bad.txt");
    std::fs::write(&corpus, b"fine line\nbad \xff byte\n").unwrap();
    let out = run(&[
        "train",
        "--corpus",
        &s(&corpus),
        "--algo",
        "bpe",
        "--vocab-size",
        "50",
        "--out-prefix",
        &s(&dir.path().join("x")),
    ]);
    assert_exit(&out, 3);
}

#[test]
fn full_pipeline_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path(), "corpus.txt", 40_000, 8);
    let artifacts = |tag: &str| -> (Vec<u8>, Vec<u8>, Vec<u8>) {
        let prefix = dir.path().join(tag);
        assert_exit(
            &run(&[
                "train",
                "--corpus",
                &s(&corpus),
                "--algo",
                "bpe",
                "--vocab-size",
                "250",
                "--out-prefix",
                &s(&prefix),
            ]),
            0,
        );
        let vocab = dir.path().join(format!("{tag}.vocab.tsv"));
        let merges = dir.path().join(format!("{tag}.merges.tsv"));
        let rf = dir.path().join(format!("{tag}.rf.csv"));
        assert_exit(
            &run(&[
                "freq",
                "--corpus",
                &s(&corpus),
                "--vocab",
                &s(&vocab),
                "--algo",
                "bpe",
                "--merges",
                &s(&merges),
                "--out",
                &s(&rf),
            ]),
            0,
        );
        let report = dir.path().join(format!("{tag}.json"));
        assert_exit(&run(&["fit", "--input", &s(&rf), "--out", &s(&report)]), 0);
        let svg = dir.path().join(format!("{tag}.svg"));
        assert_exit(&run(&["plot", "--input", &s(&rf), "--fit", &s(&report), "--out", &s(&svg)]), 0);
        (
            std::fs::read(&rf).unwrap(),
            std::fs::read(&report).unwrap(),
            std::fs::read(&svg).unwrap(),
        )
    };
    let (rf_a, report_a, svg_a) = artifacts("p");
    let (rf_b, report_b, svg_b) = artifacts("q");
    assert_eq!(rf_a, rf_b);
    assert_eq!(report_a, report_b);
    assert_eq!(svg_a, svg_b);
}

#[test]
fn threads_flag_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path(), "corpus.txt", 40_000, 9);
    let train_with = |threads: &str, tag: &str| {
        let prefix = dir.path().join(tag);
        let out = bin()
            .args([
                "--threads",
                threads,
                "train",
                "--corpus",
                &s(&corpus),
                "--algo",
                "unigram",
                "--vocab-size",
                "120",
                "--out-prefix",
                &s(&prefix),
            ])
            .output()
            .unwrap();
        assert_exit(&out, 0);
        std::fs::read(dir.path().join(format!("{tag}.vocab.tsv"))).unwrap()
    };
    assert_eq!(train_with("1", "one"), train_with("4", "four"));
}
