//! C ABI for the zipftok library: train and load vocabularies behind an
//! opaque handle, encode text, compute edit distances, sample the bounded
//! power law, and fit the two-regime model.
//!
//! Conventions: every fallible call returns a [`ZipftokStatus`]; on
//! failure a thread-local message is readable through
//! [`zipftok_last_error`]. Strings cross the boundary as NUL-terminated
//! UTF-8. Buffers are caller-allocated; calls that fill them report the
//! required length so callers can retry with more space.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::ptr;

use zipftok::classify::token_class;
use zipftok::corpus::{CorpusFormat, NormalizationPolicy};
use zipftok::tokenize::{Algorithm, Boundary, Encoder, MergeTable, UnigramParams, Vocabulary};
use zipftok::zipfstats::rank_frequency;
use zipftok::Error;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl std::fmt::Display) {
    let text = msg.to_string().replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(text).unwrap_or_default();
    });
}

/// Result codes for every fallible call in this interface.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZipftokStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// Invalid parameter or malformed input data.
    InvalidArgument = 2,
    /// File system or decoding failure.
    Io = 3,
    /// Training or fitting failed.
    Compute = 4,
    /// A string argument was not valid UTF-8.
    Utf8 = 5,
    /// An output buffer was too small; the required size was reported.
    BufferTooSmall = 6,
}

fn status_of(err: &Error) -> ZipftokStatus {
    match err {
        Error::Io { .. } | Error::Decode { .. } => ZipftokStatus::Io,
        Error::FitFailure { .. } | Error::DegenerateData(_) | Error::OutOfAlphabet { .. } => {
            ZipftokStatus::Compute
        }
        _ => ZipftokStatus::InvalidArgument,
    }
}

/// Corpus file layout accepted by [`zipftok_vocab_train_path`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZipftokFormat {
    PlainLines = 0,
    Wikitext = 1,
}

/// Training algorithm selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZipftokAlgorithm {
    Bpe = 0,
    WordPiece = 1,
    Unigram = 2,
}

impl ZipftokAlgorithm {
    fn into_lib(self) -> Algorithm {
        match self {
            ZipftokAlgorithm::Bpe => Algorithm::Bpe,
            ZipftokAlgorithm::WordPiece => Algorithm::WordPiece,
            ZipftokAlgorithm::Unigram => Algorithm::Unigram,
        }
    }
}

/// Merge boundary selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZipftokBoundary {
    Document = 0,
    Word = 1,
}

/// Token classes assigned by [`zipftok_token_class`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZipftokTokenClass {
    Atom = 0,
    Pragma = 1,
    Idea = 2,
}

/// Two-regime fit summary returned by [`zipftok_fit_broken`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct ZipftokBrokenFit {
    pub breakpoint_rank: u64,
    pub head_exponent: f64,
    pub tail_exponent: f64,
    pub total_rss: f64,
    /// BIC(single) - BIC(broken); positive favors the broken model.
    pub delta_bic: f64,
    pub single_exponent: f64,
    pub single_rss: f64,
    pub single_r_squared: f64,
}

/// Opaque trained-vocabulary handle.
pub struct ZipftokVocab {
    // The vocabulary is boxed and never mutated, so the encoder may
    // borrow it for the handle's whole lifetime; `drop` releases the
    // encoder before the vocabulary.
    vocab: *mut Vocabulary,
    merges: Option<Box<MergeTable>>,
    encoder: Option<Encoder<'static>>,
}

impl Drop for ZipftokVocab {
    fn drop(&mut self) {
        self.encoder = None;
        // Rebox and drop the vocabulary allocated in `new`.
        unsafe { drop(Box::from_raw(self.vocab)) };
    }
}

impl ZipftokVocab {
    fn new(vocab: Vocabulary, merges: Option<MergeTable>) -> Result<Box<ZipftokVocab>, Error> {
        let vocab = Box::into_raw(Box::new(vocab));
        let merges = merges.map(Box::new);
        let encoder = Encoder::new(
            unsafe { &*vocab },
            merges.as_deref(),
        );
        match encoder {
            Ok(encoder) => Ok(Box::new(ZipftokVocab {
                vocab,
                merges,
                encoder: Some(encoder),
            })),
            Err(e) => {
                unsafe { drop(Box::from_raw(vocab)) };
                Err(e)
            }
        }
    }

    fn vocab(&self) -> &Vocabulary {
        unsafe { &*self.vocab }
    }
}

unsafe fn cstr<'a>(ptr: *const c_char) -> Result<&'a str, ZipftokStatus> {
    if ptr.is_null() {
        set_error("null string argument");
        return Err(ZipftokStatus::NullArgument);
    }
    unsafe { CStr::from_ptr(ptr) }.to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8");
        ZipftokStatus::Utf8
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn zipftok_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Copies the last error message for this thread into `buf` (truncated to
/// `cap - 1` bytes, always NUL-terminated when `cap > 0`) and returns the
/// full message length in bytes.
#[no_mangle]
pub extern "C" fn zipftok_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let msg = slot.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            unsafe {
                ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
                *buf.add(n) = 0;
            }
        }
        bytes.len()
    })
}

/// Trains a vocabulary from a corpus file. On success `*out` owns the new
/// handle; release it with [`zipftok_vocab_free`].
///
/// # Safety
/// `corpus_path` must be a valid NUL-terminated string and `out` a valid
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn zipftok_vocab_train_path(
    corpus_path: *const c_char,
    format: ZipftokFormat,
    algorithm: ZipftokAlgorithm,
    target_size: usize,
    boundary: ZipftokBoundary,
    lowercase: bool,
    out: *mut *mut ZipftokVocab,
) -> ZipftokStatus {
    if out.is_null() {
        set_error("null output handle");
        return ZipftokStatus::NullArgument;
    }
    let path = match unsafe { cstr(corpus_path) } {
        Ok(s) => PathBuf::from(s),
        Err(status) => return status,
    };
    let corpus_format = match format {
        ZipftokFormat::PlainLines => CorpusFormat::PlainLines,
        ZipftokFormat::Wikitext => CorpusFormat::Wikitext {
            keep_headings: false,
        },
    };
    let policy = NormalizationPolicy { lowercase };
    let boundary = match boundary {
        ZipftokBoundary::Document => Boundary::Document,
        ZipftokBoundary::Word => Boundary::Word,
    };

    let result = (|| -> Result<Box<ZipftokVocab>, Error> {
        let docs = zipftok::corpus::normalized_documents(&path, corpus_format, policy)?;
        match algorithm {
            ZipftokAlgorithm::Bpe => {
                let (vocab, merges) = zipftok::tokenize::train_bpe(docs, target_size, boundary)?;
                ZipftokVocab::new(vocab, Some(merges))
            }
            ZipftokAlgorithm::WordPiece => {
                let vocab = zipftok::tokenize::train_wordpiece(docs, target_size, boundary)?;
                ZipftokVocab::new(vocab, None)
            }
            ZipftokAlgorithm::Unigram => {
                let vocab =
                    zipftok::tokenize::train_unigram(docs, target_size, UnigramParams::default())?;
                ZipftokVocab::new(vocab, None)
            }
        }
    })();
    match result {
        Ok(handle) => {
            unsafe { *out = Box::into_raw(handle) };
            ZipftokStatus::Ok
        }
        Err(e) => {
            set_error(&e);
            status_of(&e)
        }
    }
}

/// Loads a vocabulary TSV (and, for BPE, its merge table) written by the
/// `zipftok train` command or [`zipftok_vocab_save`].
///
/// # Safety
/// `vocab_path` must be valid; `merges_path` may be null for WordPiece
/// and Unigram vocabularies; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn zipftok_vocab_load(
    vocab_path: *const c_char,
    algorithm: ZipftokAlgorithm,
    merges_path: *const c_char,
    out: *mut *mut ZipftokVocab,
) -> ZipftokStatus {
    if out.is_null() {
        set_error("null output handle");
        return ZipftokStatus::NullArgument;
    }
    let vocab_path = match unsafe { cstr(vocab_path) } {
        Ok(s) => PathBuf::from(s),
        Err(status) => return status,
    };
    let merges_path = if merges_path.is_null() {
        None
    } else {
        match unsafe { cstr(merges_path) } {
            Ok(s) => Some(PathBuf::from(s)),
            Err(status) => return status,
        }
    };
    let result = (|| -> Result<Box<ZipftokVocab>, Error> {
        let vocab = Vocabulary::load(&vocab_path, algorithm.into_lib())?;
        let merges = merges_path.map(|p| MergeTable::load(&p)).transpose()?;
        ZipftokVocab::new(vocab, merges)
    })();
    match result {
        Ok(handle) => {
            unsafe { *out = Box::into_raw(handle) };
            ZipftokStatus::Ok
        }
        Err(e) => {
            set_error(&e);
            status_of(&e)
        }
    }
}

/// Writes the vocabulary TSV (and the merge table, when one exists and
/// `merges_path` is non-null).
///
/// # Safety
/// `handle` must come from this library; paths must be valid strings.
#[no_mangle]
pub unsafe extern "C" fn zipftok_vocab_save(
    handle: *const ZipftokVocab,
    vocab_path: *const c_char,
    merges_path: *const c_char,
) -> ZipftokStatus {
    let Some(handle) = (unsafe { handle.as_ref() }) else {
        set_error("null vocabulary handle");
        return ZipftokStatus::NullArgument;
    };
    let vocab_path = match unsafe { cstr(vocab_path) } {
        Ok(s) => PathBuf::from(s),
        Err(status) => return status,
    };
    if let Err(e) = handle.vocab().save(&vocab_path) {
        set_error(&e);
        return status_of(&e);
    }
    if !merges_path.is_null() {
        if let Some(merges) = &handle.merges {
            let merges_path = match unsafe { cstr(merges_path) } {
                Ok(s) => PathBuf::from(s),
                Err(status) => return status,
            };
            if let Err(e) = merges.save(&merges_path) {
                set_error(&e);
                return status_of(&e);
            }
        }
    }
    ZipftokStatus::Ok
}

/// Number of tokens in the vocabulary; 0 for a null handle.
///
/// # Safety
/// `handle` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn zipftok_vocab_len(handle: *const ZipftokVocab) -> usize {
    unsafe { handle.as_ref() }.map_or(0, |h| h.vocab().len())
}

/// Copies the UTF-8 surface of `token_id` into `buf` (truncated, always
/// NUL-terminated when `cap > 0`) and stores the full byte length in
/// `*out_len`. Returns `BufferTooSmall` when truncation happened.
///
/// # Safety
/// Pointers must be valid for the given capacity.
#[no_mangle]
pub unsafe extern "C" fn zipftok_vocab_token(
    handle: *const ZipftokVocab,
    token_id: u32,
    buf: *mut c_char,
    cap: usize,
    out_len: *mut usize,
) -> ZipftokStatus {
    let Some(handle) = (unsafe { handle.as_ref() }) else {
        set_error("null vocabulary handle");
        return ZipftokStatus::NullArgument;
    };
    let Some(entry) = handle.vocab().entry(token_id) else {
        set_error(format!("token id {token_id} out of range"));
        return ZipftokStatus::InvalidArgument;
    };
    let bytes = entry.surface.as_bytes();
    if !out_len.is_null() {
        unsafe { *out_len = bytes.len() };
    }
    if buf.is_null() || cap == 0 {
        set_error("null or empty surface buffer");
        return ZipftokStatus::NullArgument;
    }
    let n = bytes.len().min(cap - 1);
    unsafe {
        ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
        *buf.add(n) = 0;
    }
    if n < bytes.len() {
        set_error(format!("surface needs {} bytes", bytes.len() + 1));
        ZipftokStatus::BufferTooSmall
    } else {
        ZipftokStatus::Ok
    }
}

/// Encodes NUL-terminated UTF-8 text into token ids. `*out_len` receives
/// the required length; ids are written when `cap` suffices.
///
/// # Safety
/// `out_ids` must point to at least `cap` elements; other pointers must
/// be valid.
#[no_mangle]
pub unsafe extern "C" fn zipftok_encode(
    handle: *const ZipftokVocab,
    text: *const c_char,
    out_ids: *mut u32,
    cap: usize,
    out_len: *mut usize,
) -> ZipftokStatus {
    let Some(handle) = (unsafe { handle.as_ref() }) else {
        set_error("null vocabulary handle");
        return ZipftokStatus::NullArgument;
    };
    let text = match unsafe { cstr(text) } {
        Ok(s) => s,
        Err(status) => return status,
    };
    let encoder = handle.encoder.as_ref().expect("encoder built with handle");
    match encoder.encode(text) {
        Ok(ids) => {
            if !out_len.is_null() {
                unsafe { *out_len = ids.len() };
            }
            if ids.len() > cap {
                set_error(format!("need space for {} ids", ids.len()));
                return ZipftokStatus::BufferTooSmall;
            }
            if !ids.is_empty() {
                if out_ids.is_null() {
                    set_error("null id buffer");
                    return ZipftokStatus::NullArgument;
                }
                unsafe { ptr::copy_nonoverlapping(ids.as_ptr(), out_ids, ids.len()) };
            }
            ZipftokStatus::Ok
        }
        Err(e) => {
            set_error(&e);
            status_of(&e)
        }
    }
}

/// Releases a handle created by the train or load calls. Null is a no-op.
///
/// # Safety
/// `handle` must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn zipftok_vocab_free(handle: *mut ZipftokVocab) {
    if !handle.is_null() {
        unsafe { drop(Box::from_raw(handle)) };
    }
}

/// Character-level edit distance between two NUL-terminated UTF-8
/// strings; -1 on null or non-UTF-8 input.
///
/// # Safety
/// Both pointers must be valid NUL-terminated strings or null.
#[no_mangle]
pub unsafe extern "C" fn zipftok_levenshtein(a: *const c_char, b: *const c_char) -> i64 {
    let (Ok(a), Ok(b)) = (unsafe { cstr(a) }, unsafe { cstr(b) }) else {
        return -1;
    };
    zipftok::pollkit::levenshtein(a, b) as i64
}

/// Normalized edit distance in [0, 1]; two empty strings give 0.
///
/// # Safety
/// String pointers must be valid; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn zipftok_normalized_levenshtein(
    a: *const c_char,
    b: *const c_char,
    out: *mut f64,
) -> ZipftokStatus {
    if out.is_null() {
        set_error("null output pointer");
        return ZipftokStatus::NullArgument;
    }
    let a = match unsafe { cstr(a) } {
        Ok(s) => s,
        Err(status) => return status,
    };
    let b = match unsafe { cstr(b) } {
        Ok(s) => s,
        Err(status) => return status,
    };
    unsafe { *out = zipftok::pollkit::normalized_levenshtein(a, b) };
    ZipftokStatus::Ok
}

/// Draws `n_draws` ranks from `P(r) ∝ r^(-exponent)` over `1..=n_ranks`
/// and writes per-rank counts into `out_counts`. Deterministic for a
/// fixed seed, bit-for-bit across platforms.
///
/// # Safety
/// `out_counts` must point to at least `n_ranks` elements.
#[no_mangle]
pub unsafe extern "C" fn zipftok_sample_zipf(
    exponent: f64,
    n_ranks: usize,
    n_draws: u64,
    seed: u64,
    out_counts: *mut u64,
) -> ZipftokStatus {
    if out_counts.is_null() {
        set_error("null count buffer");
        return ZipftokStatus::NullArgument;
    }
    if n_ranks == 0 || !exponent.is_finite() || exponent < 0.0 {
        set_error("need n_ranks >= 1 and a non-negative finite exponent");
        return ZipftokStatus::InvalidArgument;
    }
    let counts = zipftok::powerfit::sample_zipf(exponent, n_ranks, n_draws, seed);
    unsafe { ptr::copy_nonoverlapping(counts.as_ptr(), out_counts, n_ranks) };
    ZipftokStatus::Ok
}

/// Ranks token counts (index = token id) and fits both the single and
/// two-regime power laws, filling `*out`.
///
/// # Safety
/// `counts` must point to `len` elements; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn zipftok_fit_broken(
    counts: *const u64,
    len: usize,
    out: *mut ZipftokBrokenFit,
) -> ZipftokStatus {
    if counts.is_null() || out.is_null() {
        set_error("null counts or output pointer");
        return ZipftokStatus::NullArgument;
    }
    let counts = unsafe { std::slice::from_raw_parts(counts, len) };
    let map: std::collections::HashMap<u32, u64> = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| (i as u32, c))
        .collect();
    let table = rank_frequency(&map, 1);
    let result = (|| -> Result<ZipftokBrokenFit, Error> {
        let broken = zipftok::powerfit::fit_broken_zipf(&table)?;
        let single = zipftok::powerfit::fit_zipf_ls(&table, (1, table.len() as u64))?;
        Ok(ZipftokBrokenFit {
            breakpoint_rank: broken.breakpoint_rank,
            head_exponent: broken.head.exponent,
            tail_exponent: broken.tail.exponent,
            total_rss: broken.total_rss,
            delta_bic: broken.delta_bic,
            single_exponent: single.exponent,
            single_rss: single.rss,
            single_r_squared: single.r_squared,
        })
    })();
    match result {
        Ok(fit) => {
            unsafe { *out = fit };
            ZipftokStatus::Ok
        }
        Err(e) => {
            set_error(&e);
            status_of(&e)
        }
    }
}

/// Classification rule: single characters are atoms, tokens ranked at or
/// before the breakpoint are pragmas, the rest are ideas.
#[no_mangle]
pub extern "C" fn zipftok_token_class(
    char_length: u32,
    rank: u64,
    breakpoint_rank: u64,
) -> ZipftokTokenClass {
    match token_class(char_length, rank, breakpoint_rank) {
        zipftok::classify::TokenClass::Atom => ZipftokTokenClass::Atom,
        zipftok::classify::TokenClass::Pragma => ZipftokTokenClass::Pragma,
        zipftok::classify::TokenClass::Idea => ZipftokTokenClass::Idea,
    }
}
