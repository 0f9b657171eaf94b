//! Corpus streaming, text normalization, and one-pass summary statistics.
//!
//! Documents are the unit every trainer and counter consumes. Two file
//! layouts are supported: `plain-lines` (one document per non-empty line)
//! and `wikitext-markup` (heading lines stripped, blank-line-separated
//! blocks become documents). Readers stream; nothing here buffers a whole
//! file.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use rustc_hash::FxHashSet;
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

/// One corpus document. `doc_id`s are unique and strictly increasing in
/// stream order; `text` never contains carriage returns or newlines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub doc_id: u64,
    pub text: String,
}

/// On-disk corpus layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    /// Every non-empty line is one document.
    PlainLines,
    /// Blank-line-separated blocks are documents; heading lines of the
    /// form `= ... =` are dropped unless `keep_headings` is set.
    Wikitext { keep_headings: bool },
}

/// Controls applied by [`normalize`]. The default preserves case.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NormalizationPolicy {
    pub lowercase: bool,
}

/// Canonically composes the text (NFC), optionally lowercases it, and
/// collapses every run of horizontal whitespace to a single space.
///
/// Idempotent: `normalize(normalize(x)) == normalize(x)`.
pub fn normalize(text: &str, policy: NormalizationPolicy) -> String {
    let composed: String = if policy.lowercase {
        text.chars().flat_map(char::to_lowercase).nfc().collect()
    } else {
        text.nfc().collect()
    };
    collapse_horizontal_whitespace(&composed)
}

fn is_horizontal_whitespace(c: char) -> bool {
    c.is_whitespace() && c != '\n'
}

fn collapse_horizontal_whitespace(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut in_run = false;
    for c in text.chars() {
        if is_horizontal_whitespace(c) {
            if !in_run {
                out.push(' ');
                in_run = true;
            }
        } else {
            out.push(c);
            in_run = false;
        }
    }
    out
}

/// Opens a corpus file as a lazy document stream.
pub fn open_corpus(path: &Path, format: CorpusFormat) -> Result<DocumentStream> {
    let file = File::open(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(DocumentStream {
        reader: BufReader::with_capacity(1 << 16, file),
        path: path.to_path_buf(),
        format,
        next_doc_id: 0,
        byte_offset: 0,
        block: Vec::new(),
        done: false,
    })
}

/// Opens a corpus and normalizes every document with `policy`.
pub fn normalized_documents(
    path: &Path,
    format: CorpusFormat,
    policy: NormalizationPolicy,
) -> Result<impl Iterator<Item = Result<Document>>> {
    let stream = open_corpus(path, format)?;
    Ok(stream.map(move |doc| {
        doc.map(|d| Document {
            doc_id: d.doc_id,
            text: normalize(&d.text, policy),
        })
    }))
}

/// Streaming reader returned by [`open_corpus`].
pub struct DocumentStream {
    reader: BufReader<File>,
    path: PathBuf,
    format: CorpusFormat,
    next_doc_id: u64,
    byte_offset: u64,
    block: Vec<String>,
    done: bool,
}

impl DocumentStream {
    /// Reads one raw line without its terminator. `Ok(None)` is end of file.
    fn read_line(&mut self) -> Result<Option<String>> {
        let mut buf = Vec::new();
        let n = self
            .reader
            .read_until(b'\n', &mut buf)
            .map_err(|e| Error::Io {
                path: self.path.clone(),
                source: e,
            })?;
        if n == 0 {
            return Ok(None);
        }
        let line_start = self.byte_offset;
        self.byte_offset += n as u64;
        if buf.last() == Some(&b'\n') {
            buf.pop();
        }
        if buf.last() == Some(&b'\r') {
            buf.pop();
        }
        match String::from_utf8(buf) {
            Ok(s) => Ok(Some(s)),
            Err(e) => Err(Error::Decode {
                path: self.path.clone(),
                offset: line_start + e.utf8_error().valid_up_to() as u64,
            }),
        }
    }

    fn emit(&mut self, text: String) -> Document {
        let doc = Document {
            doc_id: self.next_doc_id,
            text,
        };
        self.next_doc_id += 1;
        doc
    }

    fn is_heading(line: &str) -> bool {
        let t = line.trim();
        t.len() >= 2 && t.starts_with('=') && t.ends_with('=')
    }

    fn next_wikitext(&mut self, keep_headings: bool) -> Result<Option<Document>> {
        loop {
            match self.read_line()? {
                None => {
                    self.done = true;
                    if self.block.is_empty() {
                        return Ok(None);
                    }
                    let text = self.block.join(" ");
                    self.block.clear();
                    return Ok(Some(self.emit(text)));
                }
                Some(line) => {
                    if line.trim().is_empty() {
                        if !self.block.is_empty() {
                            let text = self.block.join(" ");
                            self.block.clear();
                            return Ok(Some(self.emit(text)));
                        }
                        continue;
                    }
                    if !keep_headings && Self::is_heading(&line) {
                        continue;
                    }
                    self.block.push(line.trim().to_string());
                }
            }
        }
    }
}

impl Iterator for DocumentStream {
    type Item = Result<Document>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.format {
            CorpusFormat::PlainLines => loop {
                match self.read_line() {
                    Err(e) => {
                        self.done = true;
                        return Some(Err(e));
                    }
                    Ok(None) => {
                        self.done = true;
                        return None;
                    }
                    Ok(Some(line)) => {
                        if line.is_empty() {
                            continue;
                        }
                        return Some(Ok(self.emit(line)));
                    }
                }
            },
            CorpusFormat::Wikitext { keep_headings } => {
                match self.next_wikitext(keep_headings) {
                    Err(e) => {
                        self.done = true;
                        Some(Err(e))
                    }
                    Ok(opt) => opt.map(Ok),
                }
            }
        }
    }
}

/// Exact one-pass counts over a document stream.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CorpusStats {
    pub doc_count: u64,
    pub char_count: u64,
    pub distinct_symbol_count: u64,
}

/// Counts documents, characters, and distinct symbols in a single pass.
/// Memory use is bounded by the alphabet, not the corpus.
pub fn corpus_stats<I>(docs: I) -> Result<CorpusStats>
where
    I: IntoIterator<Item = Result<Document>>,
{
    let mut stats = CorpusStats::default();
    let mut symbols: FxHashSet<char> = FxHashSet::default();
    for doc in docs {
        let doc = doc?;
        stats.doc_count += 1;
        for c in doc.text.chars() {
            stats.char_count += 1;
            symbols.insert(c);
        }
    }
    stats.distinct_symbol_count = symbols.len() as u64;
    Ok(stats)
}
