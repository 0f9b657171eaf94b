//! Command-line pipeline: train vocabularies, count frequencies, fit
//! power laws, classify tokens, sample poll candidates, analyze poll
//! records, and render plots.
//!
//! Machine-readable output goes to files; human-readable progress goes to
//! standard error. Exit codes: 0 success, 2 parameter/usage errors, 3
//! I/O errors, 4 computation failures.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::classify::{token_class, HeadTailSample};
use crate::corpus::{CorpusFormat, NormalizationPolicy};
use crate::error::{Error, Result};
use crate::manifest::{corpus_digest, utc_now_rfc3339, RunManifest};
use crate::powerfit::{
    AdditiveFitReport, BrokenFitReport, FitReport, PhaseTransitionReport, SingleFitReport,
};
use crate::tokenize::{Algorithm, Boundary, MergeTable, TokenId, UnigramParams, Vocabulary};
use crate::zipfstats::{LengthWeighting, RankFrequencyTable};

/// Vocabulary sizes above this default to document-boundary merges, which
/// admit multi-word tokens; smaller vocabularies default to word
/// boundaries.
const CROSS_WORD_DEFAULT_THRESHOLD: usize = 100_000;

#[derive(Parser)]
#[command(
    name = "zipftok",
    version,
    about = "Subword tokenizer training and rank-frequency analysis"
)]
pub struct Cli {
    /// Worker threads for training and encoding (falls back to
    /// ZIPFTOK_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a vocabulary and write TSV artifacts plus a run manifest.
    Train(TrainArgs),
    /// Re-encode a corpus and write its rank-frequency CSV.
    Freq(FreqArgs),
    /// Fit single and two-regime power laws to a rank-frequency CSV.
    Fit(FitArgs),
    /// Token-length histogram of a vocabulary.
    Lengths(LengthsArgs),
    /// Label ranked tokens as atom, pragma, or idea.
    Classify(ClassifyArgs),
    /// Sample head and tail tokens for an annotation poll.
    Sample(SampleArgs),
    /// Analyze poll records.
    Poll(PollArgs),
    /// Render a rank-frequency SVG plot.
    Plot(PlotArgs),
}

#[derive(Args)]
struct CorpusArgs {
    /// Corpus file.
    #[arg(long)]
    corpus: PathBuf,
    /// Corpus layout: `plain` (one document per line) or `wikitext`.
    #[arg(long, default_value = "plain")]
    format: String,
    /// Keep `= ... =` heading lines as document text (wikitext only).
    #[arg(long)]
    keep_headings: bool,
    /// Lowercase during normalization (off by default).
    #[arg(long)]
    lowercase: bool,
}

impl CorpusArgs {
    fn format(&self) -> Result<CorpusFormat> {
        match self.format.as_str() {
            "plain" | "plain-lines" => Ok(CorpusFormat::PlainLines),
            "wikitext" | "wikitext-markup" => Ok(CorpusFormat::Wikitext {
                keep_headings: self.keep_headings,
            }),
            other => Err(Error::param(format!("unknown corpus format `{other}`"))),
        }
    }

    fn policy(&self) -> NormalizationPolicy {
        NormalizationPolicy {
            lowercase: self.lowercase,
        }
    }

    /// Reads, normalizes, and buffers the corpus.
    fn load(&self) -> Result<Vec<crate::corpus::Document>> {
        require_file(&self.corpus)?;
        crate::corpus::normalized_documents(&self.corpus, self.format()?, self.policy())?
            .collect()
    }
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// bpe, wordpiece, or unigram.
    #[arg(long)]
    algo: String,
    #[arg(long)]
    vocab_size: usize,
    /// `document` or `word`; defaults by vocabulary size.
    #[arg(long)]
    boundary: Option<String>,
    /// Unigram seed candidate multiplier.
    #[arg(long, default_value_t = 4.0)]
    seed_multiplier: f64,
    /// Unigram prune fraction per round.
    #[arg(long, default_value_t = 0.25)]
    prune_fraction: f64,
    /// Recorded in the manifest for pipeline provenance.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output prefix; writes <prefix>.vocab.tsv, <prefix>.merges.tsv for
    /// BPE, and <prefix>.manifest.json.
    #[arg(long)]
    out_prefix: PathBuf,
}

#[derive(Args)]
struct FreqArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Vocabulary TSV from `train`.
    #[arg(long)]
    vocab: PathBuf,
    /// bpe, wordpiece, or unigram (how to encode).
    #[arg(long)]
    algo: String,
    /// Merge table TSV (required for bpe).
    #[arg(long)]
    merges: Option<PathBuf>,
    /// Exclude tokens with a smaller count (1 drops only unseen tokens).
    #[arg(long, default_value_t = 1)]
    min_count: u64,
    /// Rank by training-time counts instead of re-encoding the corpus.
    #[arg(long)]
    from_train_counts: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    /// Rank-frequency CSV from `freq`.
    #[arg(long)]
    input: PathBuf,
    /// Restrict the single fit to ranks >= this.
    #[arg(long)]
    min_rank: Option<u64>,
    /// Restrict the single fit to ranks <= this.
    #[arg(long)]
    max_rank: Option<u64>,
    /// Also report a discrete maximum-likelihood fit.
    #[arg(long)]
    mle: bool,
    /// Truncation rank for the MLE fit.
    #[arg(long, default_value_t = 1)]
    mle_rmin: u64,
    /// Also fit the additive two-component mixture.
    #[arg(long)]
    additive: bool,
    /// Add a phase-transition verdict.
    #[arg(long)]
    detect: bool,
    /// Evidence threshold for detection, in BIC points.
    #[arg(long, default_value_t = 10.0)]
    threshold: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct LengthsArgs {
    #[arg(long)]
    vocab: PathBuf,
    /// Rank-frequency CSV; required for by-occurrence weighting.
    #[arg(long)]
    freq: Option<PathBuf>,
    /// `by-type` or `by-occurrence`.
    #[arg(long, default_value = "by-type")]
    weighting: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long)]
    vocab: PathBuf,
    /// Rank-frequency CSV listing the tokens to classify.
    #[arg(long)]
    freq: PathBuf,
    /// Breakpoint rank separating pragma from idea.
    #[arg(long)]
    breakpoint: Option<u64>,
    /// Fit report JSON; its broken-fit breakpoint is used.
    #[arg(long)]
    fit: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    vocab: PathBuf,
    #[arg(long)]
    freq: PathBuf,
    #[arg(long)]
    head_n: usize,
    #[arg(long)]
    tail_n: usize,
    /// Minimum character length for tail samples.
    #[arg(long, default_value_t = 15)]
    min_tail_length: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PollArgs {
    /// Poll CSV with columns
    /// respondent_id,token,can_reformulate,restatement,meanings,context.
    #[arg(long)]
    input: PathBuf,
    /// Directory for the analysis CSVs.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long)]
    input: PathBuf,
    /// Fit report JSON to overlay.
    #[arg(long)]
    fit: Option<PathBuf>,
    #[arg(long, default_value_t = 5_000)]
    max_points: usize,
    #[arg(long, default_value = "")]
    title: String,
    #[arg(long)]
    out: PathBuf,
}

/// Parses arguments, configures the thread pool, runs the subcommand, and
/// maps errors to the exit-code scheme.
pub fn main_entry() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();

    let threads = cli.threads.or_else(|| {
        std::env::var("ZIPFTOK_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: could not configure {n} threads: {e}");
            return ExitCode::from(2);
        }
    }

    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io { .. } | Error::Decode { .. } => 3,
        Error::FitFailure { .. } | Error::DegenerateData(_) | Error::OutOfAlphabet { .. } => 4,
        Error::Param(_)
        | Error::Consistency(_)
        | Error::Parse { .. }
        | Error::Validation { .. } => 2,
    }
}

/// Missing input files are parameter errors (exit 2), distinct from I/O
/// failures while reading (exit 3).
fn require_file(path: &Path) -> Result<()> {
    if !path.is_file() {
        return Err(Error::param(format!("no such file: {}", path.display())));
    }
    Ok(())
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Train(args) => cmd_train(args),
        Command::Freq(args) => cmd_freq(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Lengths(args) => cmd_lengths(args),
        Command::Classify(args) => cmd_classify(args),
        Command::Sample(args) => cmd_sample(args),
        Command::Poll(args) => cmd_poll(args),
        Command::Plot(args) => cmd_plot(args),
    }
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let algorithm: Algorithm = args.algo.parse()?;
    let boundary = match &args.boundary {
        Some(b) => b.parse()?,
        None => {
            if args.vocab_size > CROSS_WORD_DEFAULT_THRESHOLD {
                Boundary::Document
            } else {
                Boundary::Word
            }
        }
    };
    let started = utc_now_rfc3339();
    eprintln!(
        "loading corpus {} ({})",
        args.corpus.corpus.display(),
        args.corpus.format
    );
    let docs = args.corpus.load()?;
    let digest = corpus_digest(docs.iter());
    eprintln!(
        "training {} vocabulary of {} entries ({} boundary) on {} documents",
        algorithm,
        args.vocab_size,
        boundary.as_str(),
        docs.len()
    );

    let doc_iter = docs.into_iter().map(Ok);
    let (vocab, merges) = match algorithm {
        Algorithm::Bpe => {
            let (v, m) = crate::tokenize::train_bpe(doc_iter, args.vocab_size, boundary)?;
            (v, Some(m))
        }
        Algorithm::WordPiece => (
            crate::tokenize::train_wordpiece(doc_iter, args.vocab_size, boundary)?,
            None,
        ),
        Algorithm::Unigram => (
            crate::tokenize::train_unigram(
                doc_iter,
                args.vocab_size,
                UnigramParams {
                    seed_multiplier: args.seed_multiplier,
                    prune_fraction: args.prune_fraction,
                },
            )?,
            None,
        ),
    };

    let vocab_path = suffixed(&args.out_prefix, "vocab.tsv");
    vocab.save(&vocab_path)?;
    eprintln!("wrote {}", vocab_path.display());
    if let Some(merges) = &merges {
        let merges_path = suffixed(&args.out_prefix, "merges.tsv");
        merges.save(&merges_path)?;
        eprintln!("wrote {}", merges_path.display());
    }
    let manifest = RunManifest {
        corpus_path: args.corpus.corpus.display().to_string(),
        corpus_sha256: digest,
        format: args.corpus.format.clone(),
        algorithm: algorithm.as_str().into(),
        target_size: args.vocab_size,
        boundary: boundary.as_str().into(),
        seed: args.seed,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        started_utc: started,
        finished_utc: utc_now_rfc3339(),
    };
    let manifest_path = suffixed(&args.out_prefix, "manifest.json");
    manifest.save(&manifest_path)?;
    eprintln!("wrote {}", manifest_path.display());
    Ok(())
}

fn suffixed(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    if !name.is_empty() {
        name.push('.');
    }
    name.push_str(suffix);
    prefix.with_file_name(name)
}

fn load_vocab(path: &Path, algorithm: Algorithm) -> Result<Vocabulary> {
    require_file(path)?;
    Vocabulary::load(path, algorithm)
}

fn cmd_freq(args: FreqArgs) -> Result<()> {
    let algorithm: Algorithm = args.algo.parse()?;
    let vocab = load_vocab(&args.vocab, algorithm)?;
    let merges = match (&args.merges, algorithm) {
        (Some(path), _) => {
            require_file(path)?;
            Some(MergeTable::load(path)?)
        }
        (None, Algorithm::Bpe) => {
            return Err(Error::param("--merges is required for bpe"));
        }
        (None, _) => None,
    };

    let freqs: HashMap<TokenId, u64> = if args.from_train_counts {
        vocab
            .entries()
            .iter()
            .map(|e| (e.token_id, e.train_frequency))
            .collect()
    } else {
        let docs = args.corpus.load()?;
        eprintln!("re-encoding {} documents", docs.len());
        crate::tokenize::token_frequencies(docs.into_iter().map(Ok), &vocab, merges.as_ref())?
    };
    let table = crate::zipfstats::rank_frequency(&freqs, args.min_count);
    table.save_csv(&args.out)?;
    eprintln!("wrote {} ({} ranked tokens)", args.out.display(), table.len());
    Ok(())
}

fn cmd_fit(args: FitArgs) -> Result<()> {
    require_file(&args.input)?;
    let table = RankFrequencyTable::load_csv(&args.input)?;
    let positive = table
        .rows()
        .iter()
        .take_while(|r| r.frequency > 0)
        .count() as u64;
    if positive == 0 {
        return Err(Error::param("table has no positive frequencies"));
    }
    let lo = args.min_rank.unwrap_or(1).max(1);
    let hi = args.max_rank.unwrap_or(positive).min(positive);

    let single = crate::powerfit::fit_zipf_ls(&table, (lo, hi))?;
    let broken = crate::powerfit::fit_broken_zipf(&table)?;
    let model_preferred = if broken.delta_bic > 0.0 { "broken" } else { "single" };

    let single_mle = if args.mle {
        Some(SingleFitReport::from_fit(&crate::powerfit::fit_zipf_mle(
            &table,
            args.mle_rmin,
        )?))
    } else {
        None
    };

    let phase_transition = if args.detect {
        let hit = crate::powerfit::detect_phase_transition(&table, args.threshold)?;
        Some(PhaseTransitionReport {
            detected: hit.is_some(),
            threshold: args.threshold,
            breakpoint_rank: hit.map(|(r, _)| r),
            delta_bic: hit.map(|(_, d)| d),
        })
    } else {
        None
    };

    // The additive fit can fail to converge; the report is still written
    // with its best partial result before the failure propagates.
    let (additive, additive_err) = if args.additive {
        match crate::powerfit::fit_additive_mixture(&table) {
            Ok(fit) => (Some(AdditiveFitReport::from_fit(&fit)), None),
            Err(Error::FitFailure { msg, partial }) => (
                Some(AdditiveFitReport::from_fit(&partial)),
                Some(Error::FitFailure {
                    msg,
                    partial: partial.clone(),
                }),
            ),
            Err(e) => return Err(e),
        }
    } else {
        (None, None)
    };

    let report = FitReport {
        model_preferred: model_preferred.into(),
        single: SingleFitReport::from_fit(&single),
        broken: BrokenFitReport::from_fit(&broken),
        single_mle,
        additive,
        phase_transition,
    };
    write_json(&args.out, &report)?;
    eprintln!(
        "wrote {} (preferred model: {model_preferred})",
        args.out.display()
    );
    match additive_err {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Consistency(e.to_string()))?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn cmd_lengths(args: LengthsArgs) -> Result<()> {
    let weighting: LengthWeighting = args.weighting.parse()?;
    // The algorithm does not matter for a pure length histogram.
    let vocab = load_vocab(&args.vocab, Algorithm::Bpe)?;
    let freqs: HashMap<TokenId, u64> = match (&args.freq, weighting) {
        (Some(path), _) => {
            require_file(path)?;
            RankFrequencyTable::load_csv(path)?
                .rows()
                .iter()
                .map(|r| (r.token_id, r.frequency))
                .collect()
        }
        (None, LengthWeighting::ByType) => HashMap::new(),
        (None, LengthWeighting::ByOccurrence) => {
            return Err(Error::param("--freq is required for by-occurrence weighting"));
        }
    };
    let histogram = crate::zipfstats::length_distribution(&vocab, &freqs, weighting)?;
    histogram.save_csv(&args.out)?;
    eprintln!("wrote {}", args.out.display());
    Ok(())
}

fn resolve_breakpoint(args: &ClassifyArgs, table_len: u64) -> Result<u64> {
    match (args.breakpoint, &args.fit) {
        (Some(rank), None) => Ok(rank),
        (None, Some(path)) => {
            require_file(path)?;
            let file = File::open(path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            let report: FitReport = serde_json::from_reader(file).map_err(|e| Error::Parse {
                line: e.line() as u64,
                msg: e.to_string(),
            })?;
            Ok(report.broken.breakpoint_rank)
        }
        _ => Err(Error::param(
            "exactly one of --breakpoint or --fit is required",
        )),
    }
    .and_then(|rank| {
        if rank >= 1 && rank <= table_len {
            Ok(rank)
        } else {
            Err(Error::param(format!(
                "breakpoint rank {rank} outside table of {table_len} rows"
            )))
        }
    })
}

fn cmd_classify(args: ClassifyArgs) -> Result<()> {
    let vocab = load_vocab(&args.vocab, Algorithm::Bpe)?;
    require_file(&args.freq)?;
    let table = RankFrequencyTable::load_csv(&args.freq)?;
    let breakpoint = resolve_breakpoint(&args, table.len() as u64)?;

    // Classify the ranked tokens; every table row must resolve in the
    // vocabulary.
    let file = File::create(&args.out).map_err(|e| Error::Io {
        path: args.out.clone(),
        source: e,
    })?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let csv_io = |e: csv::Error| Error::Consistency(e.to_string());
    w.write_record(["token_id", "surface", "rank", "char_length", "class"])
        .map_err(csv_io)?;
    for row in table.rows() {
        let entry = vocab.entry(row.token_id).ok_or_else(|| {
            Error::consistency(format!(
                "token {} missing from vocabulary {}",
                row.token_id,
                args.vocab.display()
            ))
        })?;
        let class = token_class(entry.char_length, row.rank, breakpoint);
        w.write_record([
            row.token_id.to_string(),
            entry.surface.clone(),
            row.rank.to_string(),
            entry.char_length.to_string(),
            class.as_str().to_string(),
        ])
        .map_err(csv_io)?;
    }
    w.flush().map_err(|e| Error::Io {
        path: args.out.clone(),
        source: e,
    })?;
    eprintln!(
        "wrote {} (breakpoint rank {breakpoint})",
        args.out.display()
    );
    Ok(())
}

fn cmd_sample(args: SampleArgs) -> Result<()> {
    let vocab = load_vocab(&args.vocab, Algorithm::Bpe)?;
    require_file(&args.freq)?;
    let table = RankFrequencyTable::load_csv(&args.freq)?;
    let sample: HeadTailSample = crate::classify::sample_head_tail(
        &table,
        &vocab,
        args.head_n,
        args.tail_n,
        args.min_tail_length,
        args.seed,
    )?;

    let file = File::create(&args.out).map_err(|e| Error::Io {
        path: args.out.clone(),
        source: e,
    })?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let csv_io = |e: csv::Error| Error::Consistency(e.to_string());
    w.write_record(["token_id", "surface", "origin"]).map_err(csv_io)?;
    for (token_id, origin) in &sample.shuffled {
        let entry = vocab
            .entry(*token_id)
            .ok_or_else(|| Error::consistency(format!("token {token_id} missing")))?;
        w.write_record([
            token_id.to_string(),
            entry.surface.clone(),
            origin.as_str().to_string(),
        ])
        .map_err(csv_io)?;
    }
    w.flush().map_err(|e| Error::Io {
        path: args.out.clone(),
        source: e,
    })?;
    eprintln!(
        "wrote {} ({} head + {} tail, shuffled)",
        args.out.display(),
        sample.head.len(),
        sample.tail.len()
    );
    Ok(())
}

fn cmd_poll(args: PollArgs) -> Result<()> {
    require_file(&args.input)?;
    std::fs::create_dir_all(&args.out_dir).map_err(|e| Error::Io {
        path: args.out_dir.clone(),
        source: e,
    })?;
    let records = crate::pollkit::load_poll(&args.input)?;
    eprintln!("loaded {} poll records", records.len());

    let (meanings, heatmap) = crate::pollkit::length_vs_meanings(&records);
    meanings.save_csv(&args.out_dir.join("meanings.csv"))?;
    heatmap.save_csv(&args.out_dir.join("meanings_heatmap.csv"))?;
    crate::pollkit::restatement_distance(&records)
        .save_csv(&args.out_dir.join("restatement_distance.csv"))?;
    crate::pollkit::contextualization_rate(&records)
        .save_csv(&args.out_dir.join("context_rate.csv"))?;
    crate::pollkit::context_distance(&records)
        .save_csv(&args.out_dir.join("context_distance.csv"))?;
    eprintln!("wrote 5 analysis files under {}", args.out_dir.display());
    Ok(())
}

fn cmd_plot(args: PlotArgs) -> Result<()> {
    require_file(&args.input)?;
    let table = RankFrequencyTable::load_csv(&args.input)?;
    let fit = match &args.fit {
        Some(path) => {
            require_file(path)?;
            let file = File::open(path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            Some(
                serde_json::from_reader::<_, FitReport>(file).map_err(|e| Error::Parse {
                    line: e.line() as u64,
                    msg: e.to_string(),
                })?,
            )
        }
        None => None,
    };
    let cfg = crate::plot::PlotConfig {
        max_points: args.max_points,
        title: args.title.clone(),
        ..Default::default()
    };
    let svg = crate::plot::render_rank_frequency_svg(&table, fit.as_ref(), &cfg)?;
    std::fs::write(&args.out, svg).map_err(|e| Error::Io {
        path: args.out.clone(),
        source: e,
    })?;
    eprintln!("wrote {}", args.out.display());
    Ok(())
}
