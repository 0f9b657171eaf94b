//! Subword vocabulary training and encoding.
//!
//! Three trainers share one corpus representation: BPE merges the most
//! frequent adjacent pair, WordPiece merges the pair with the highest
//! `count / (count(left) * count(right))` score, and Unigram prunes a
//! large seeded candidate set under an EM-fitted piece distribution.
//! Merges may cross spaces (`Boundary::Document`) or stay inside
//! whitespace-delimited words (`Boundary::Word`).

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};

mod bpe;
mod encoder;
mod engine;
mod sa;
mod unigram;
mod wordpiece;

pub use bpe::train_bpe;
pub use encoder::{decode, encode, token_frequencies, Encoder};
pub use unigram::{train_unigram, train_unigram_with_stats, UnigramParams, UnigramTrainStats};
pub use wordpiece::train_wordpiece;

pub type TokenId = u32;

/// Which trainer produced a vocabulary. Determines how text is encoded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Bpe,
    WordPiece,
    Unigram,
}

impl Algorithm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Bpe => "bpe",
            Algorithm::WordPiece => "wordpiece",
            Algorithm::Unigram => "unigram",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bpe" => Ok(Algorithm::Bpe),
            "wordpiece" => Ok(Algorithm::WordPiece),
            "unigram" => Ok(Algorithm::Unigram),
            other => Err(Error::param(format!("unknown algorithm `{other}`"))),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Merge boundary unit: whole documents (merges may cross spaces) or
/// whitespace-delimited words.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Document,
    Word,
}

impl Boundary {
    pub fn as_str(&self) -> &'static str {
        match self {
            Boundary::Document => "document",
            Boundary::Word => "word",
        }
    }
}

impl std::str::FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "document" => Ok(Boundary::Document),
            "word" => Ok(Boundary::Word),
            other => Err(Error::param(format!("unknown boundary `{other}`"))),
        }
    }
}

/// One vocabulary row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VocabEntry {
    pub token_id: TokenId,
    pub surface: String,
    /// Number of characters in `surface`.
    pub char_length: u32,
    /// Occurrence count at the end of training. For Unigram this is the
    /// rounded expected count under the final piece distribution.
    pub train_frequency: u64,
}

/// A trained token inventory. Token ids are dense (`0..len`), surfaces are
/// distinct, and every symbol seen during training is present as a
/// single-character entry, so any training-alphabet text encodes.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    algorithm: Algorithm,
    target_size: usize,
    entries: Vec<VocabEntry>,
    by_surface: FxHashMap<Box<str>, TokenId>,
    max_surface_chars: u32,
}

impl Vocabulary {
    pub fn new(
        algorithm: Algorithm,
        target_size: usize,
        entries: Vec<VocabEntry>,
    ) -> Result<Self> {
        let mut by_surface = FxHashMap::default();
        by_surface.reserve(entries.len());
        let mut max_surface_chars = 0;
        for (i, e) in entries.iter().enumerate() {
            if e.token_id as usize != i {
                return Err(Error::consistency(format!(
                    "token ids must be dense: entry {i} has id {}",
                    e.token_id
                )));
            }
            if e.surface.is_empty() {
                return Err(Error::consistency(format!("token {i} has an empty surface")));
            }
            let chars = e.surface.chars().count() as u32;
            if chars != e.char_length {
                return Err(Error::consistency(format!(
                    "token {i}: char_length {} does not match surface {:?}",
                    e.char_length, e.surface
                )));
            }
            max_surface_chars = max_surface_chars.max(chars);
            if by_surface
                .insert(e.surface.as_str().into(), e.token_id)
                .is_some()
            {
                return Err(Error::consistency(format!(
                    "duplicate surface {:?}",
                    e.surface
                )));
            }
        }
        Ok(Vocabulary {
            algorithm,
            target_size,
            entries,
            by_surface,
            max_surface_chars,
        })
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    pub fn target_size(&self) -> usize {
        self.target_size
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[VocabEntry] {
        &self.entries
    }

    pub fn entry(&self, id: TokenId) -> Option<&VocabEntry> {
        self.entries.get(id as usize)
    }

    pub fn id_of(&self, surface: &str) -> Option<TokenId> {
        self.by_surface.get(surface).copied()
    }

    /// Longest surface, in characters.
    pub fn max_surface_chars(&self) -> u32 {
        self.max_surface_chars
    }

    /// Writes the vocabulary as TSV:
    /// `token_id<TAB>surface<TAB>char_length<TAB>frequency`, surfaces
    /// backslash-escaped for tab, newline, and backslash.
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let mut w = BufWriter::new(file);
        let io_err = |e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        };
        writeln!(w, "token_id\tsurface\tchar_length\tfrequency").map_err(io_err)?;
        for e in &self.entries {
            writeln!(
                w,
                "{}\t{}\t{}\t{}",
                e.token_id,
                escape_surface(&e.surface),
                e.char_length,
                e.train_frequency
            )
            .map_err(io_err)?;
        }
        w.flush().map_err(io_err)
    }

    /// Reads a TSV vocabulary written by [`Vocabulary::save`]. The file
    /// format does not record the algorithm, so the caller supplies it.
    pub fn load(path: &Path, algorithm: Algorithm) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let reader = BufReader::new(file);
        let mut entries = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx as u64 + 1;
            let line = line.map_err(|e| Error::Io {
                path: path.to_path_buf(),
                source: e,
            })?;
            if idx == 0 {
                if line != "token_id\tsurface\tchar_length\tfrequency" {
                    return Err(Error::Parse {
                        line: 1,
                        msg: "missing vocabulary TSV header".into(),
                    });
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 4 {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected 4 tab-separated fields, got {}", fields.len()),
                });
            }
            let parse_num = |s: &str, what: &str| {
                s.parse::<u64>().map_err(|_| Error::Parse {
                    line: line_no,
                    msg: format!("invalid {what}: {s:?}"),
                })
            };
            entries.push(VocabEntry {
                token_id: parse_num(fields[0], "token_id")? as TokenId,
                surface: unescape_surface(fields[1], line_no)?,
                char_length: parse_num(fields[2], "char_length")? as u32,
                train_frequency: parse_num(fields[3], "frequency")?,
            });
        }
        let target = entries.len();
        Vocabulary::new(algorithm, target, entries)
    }
}

/// Ordered list of merge rules, each referencing surfaces that are atoms
/// or products of earlier merges.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MergeTable {
    pairs: Vec<(String, String)>,
}

impl MergeTable {
    pub fn new(pairs: Vec<(String, String)>) -> Self {
        MergeTable { pairs }
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Writes one `left<TAB>right` line per merge, in merge order.
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let mut w = BufWriter::new(file);
        for (l, r) in &self.pairs {
            writeln!(w, "{}\t{}", escape_surface(l), escape_surface(r)).map_err(|e| Error::Io {
                path: path.to_path_buf(),
                source: e,
            })?;
        }
        w.flush().map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let reader = BufReader::new(file);
        let mut pairs = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx as u64 + 1;
            let line = line.map_err(|e| Error::Io {
                path: path.to_path_buf(),
                source: e,
            })?;
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split('\t');
            let (Some(l), Some(r), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(Error::Parse {
                    line: line_no,
                    msg: "expected exactly 2 tab-separated fields".into(),
                });
            };
            pairs.push((unescape_surface(l, line_no)?, unescape_surface(r, line_no)?));
        }
        Ok(MergeTable { pairs })
    }
}

fn escape_surface(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\\' => out.push_str("\\\\"),
            c => out.push(c),
        }
    }
    out
}

fn unescape_surface(s: &str, line: u64) -> Result<String> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('\\') => out.push('\\'),
            Some(other) => {
                return Err(Error::Parse {
                    line,
                    msg: format!("unknown escape `\\{other}`"),
                })
            }
            None => {
                return Err(Error::Parse {
                    line,
                    msg: "dangling backslash".into(),
                })
            }
        }
    }
    Ok(out)
}
