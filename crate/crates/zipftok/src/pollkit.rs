//! Annotation-poll records and their analyses: meanings-by-length,
//! restatement edit distance, contextualization rate, and normalized
//! context distance.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// One annotator's answers for one token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PollRecord {
    pub respondent_id: String,
    pub token_surface: String,
    pub can_reformulate: bool,
    pub restatement: Option<String>,
    pub meanings_count: u32,
    /// The token placed into a context sentence.
    pub contextualization: Option<String>,
    /// Set when the contextualization does not contain the token verbatim
    /// (accepted: long tokens are often contextualized by editing their
    /// inner parts).
    pub context_modified: bool,
}

/// Loads poll records from CSV with columns
/// `respondent_id,token,can_reformulate,restatement,meanings,context`.
/// Rows that violate the record invariants are rejected with their line
/// number; a header-only file yields an empty list.
pub fn load_poll(path: &Path) -> Result<Vec<PollRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;

    {
        let headers = reader.headers().map_err(|e| csv_error(path, e))?;
        let expected = [
            "respondent_id",
            "token",
            "can_reformulate",
            "restatement",
            "meanings",
            "context",
        ];
        let got: Vec<&str> = headers.iter().collect();
        if got != expected {
            return Err(Error::Parse {
                line: 1,
                msg: format!("expected header {expected:?}, got {got:?}"),
            });
        }
    }

    let mut records = Vec::new();
    for (idx, row) in reader.records().enumerate() {
        let line = idx as u64 + 2;
        let row = row.map_err(|e| csv_error(path, e))?;
        if row.len() != 6 {
            return Err(Error::Parse {
                line,
                msg: format!("expected 6 fields, got {}", row.len()),
            });
        }
        let opt = |s: &str| {
            if s.is_empty() {
                None
            } else {
                Some(s.to_string())
            }
        };
        let can_reformulate = match row[2].trim().to_ascii_lowercase().as_str() {
            "true" => true,
            "false" => false,
            other => {
                return Err(Error::Parse {
                    line,
                    msg: format!("can_reformulate must be true or false, got {other:?}"),
                })
            }
        };
        let meanings_count: u32 = row[4].trim().parse().map_err(|_| Error::Parse {
            line,
            msg: format!("meanings must be a non-negative integer, got {:?}", &row[4]),
        })?;
        let restatement = opt(&row[3]);
        if !can_reformulate && restatement.is_some() {
            return Err(Error::Validation {
                line,
                field: "restatement",
                msg: "restatement present but can_reformulate is false".into(),
            });
        }
        let token_surface = row[1].to_string();
        let contextualization = opt(&row[5]);
        let context_modified = match &contextualization {
            Some(ctx) => {
                let modified = !ctx.contains(&token_surface);
                if modified {
                    log::warn!(
                        "line {line}: context does not contain token {token_surface:?}; \
                         accepting as modified"
                    );
                }
                modified
            }
            None => false,
        };
        records.push(PollRecord {
            respondent_id: row[0].to_string(),
            token_surface,
            can_reformulate,
            restatement,
            meanings_count,
            contextualization,
            context_modified,
        });
    }
    Ok(records)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.kind() {
        csv::ErrorKind::Io(_) => {
            if let csv::ErrorKind::Io(io) = e.into_kind() {
                Error::Io {
                    path: path.to_path_buf(),
                    source: io,
                }
            } else {
                unreachable!()
            }
        }
        _ => Error::Parse {
            line: e
                .position()
                .map(|p| p.line())
                .unwrap_or(0),
            msg: e.to_string(),
        },
    }
}

/// Minimum number of single-character insertions, deletions, and
/// substitutions turning `a` into `b`. Character-level (Unicode scalar
/// values), two-row dynamic programming.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, &ca) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let next_diag = row[j + 1];
            row[j + 1] = (row[j + 1] + 1)
                .min(row[j] + 1)
                .min(diag + if ca == cb { 0 } else { 1 });
            diag = next_diag;
        }
    }
    row[b.len()]
}

/// Edit distance divided by the longer length; 0 for two empty strings.
/// Always in [0, 1].
pub fn normalized_levenshtein(a: &str, b: &str) -> f64 {
    let max_len = a.chars().count().max(b.chars().count());
    if max_len == 0 {
        return 0.0;
    }
    levenshtein(a, b) as f64 / max_len as f64
}

/// Mean value and record count per token-length bin.
#[derive(Debug, Clone, PartialEq)]
pub struct LengthBinnedStat {
    /// Keyed by the lower edge of each bin.
    pub bins: BTreeMap<u32, BinStat>,
    pub bin_width: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinStat {
    pub mean: f64,
    pub count: u64,
}

impl LengthBinnedStat {
    fn from_values(values: impl IntoIterator<Item = (u32, f64)>, bin_width: u32) -> Self {
        let mut sums: BTreeMap<u32, (f64, u64)> = BTreeMap::new();
        for (len, value) in values {
            let bin = bin_lower_edge(len, bin_width);
            let e = sums.entry(bin).or_insert((0.0, 0));
            e.0 += value;
            e.1 += 1;
        }
        LengthBinnedStat {
            bins: sums
                .into_iter()
                .map(|(bin, (sum, count))| {
                    (
                        bin,
                        BinStat {
                            mean: sum / count as f64,
                            count,
                        },
                    )
                })
                .collect(),
            bin_width,
        }
    }

    pub fn total_count(&self) -> u64 {
        self.bins.values().map(|b| b.count).sum()
    }

    /// Writes `length_bin,value,count` CSV with a header row.
    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let mut w = BufWriter::new(file);
        let io_err = |e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        };
        writeln!(w, "length_bin,value,count").map_err(io_err)?;
        for (bin, stat) in &self.bins {
            writeln!(w, "{},{},{}", bin, stat.mean, stat.count).map_err(io_err)?;
        }
        w.flush().map_err(io_err)
    }
}

fn bin_lower_edge(len: u32, width: u32) -> u32 {
    if width <= 1 || len == 0 {
        return len;
    }
    ((len - 1) / width) * width + 1
}

/// Heatmap cell counts: (length bin, meanings value) -> respondents.
/// Bins are width 1 up to length 40, width 5 beyond, matching the sparse
/// long-token region.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MeaningsHeatmap {
    pub cells: BTreeMap<(u32, u32), u64>,
}

impl MeaningsHeatmap {
    /// Writes `length_bin,meanings,count` CSV with a header row.
    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let mut w = BufWriter::new(file);
        let io_err = |e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        };
        writeln!(w, "length_bin,meanings,count").map_err(io_err)?;
        for (&(bin, meanings), count) in &self.cells {
            writeln!(w, "{bin},{meanings},{count}").map_err(io_err)?;
        }
        w.flush().map_err(io_err)
    }
}

/// Heatmap bin edges: exact lengths to 40, then buckets of five.
pub fn heatmap_length_bin(len: u32) -> u32 {
    if len <= 40 {
        len
    } else {
        41 + 5 * ((len - 41) / 5)
    }
}

fn surface_len(r: &PollRecord) -> u32 {
    r.token_surface.chars().count() as u32
}

/// Mean meanings count per token-length bin, plus the heatmap of
/// (length bin, meanings) respondent counts.
pub fn length_vs_meanings(records: &[PollRecord]) -> (LengthBinnedStat, MeaningsHeatmap) {
    let stat = LengthBinnedStat::from_values(
        records
            .iter()
            .map(|r| (surface_len(r), r.meanings_count as f64)),
        1,
    );
    let mut heatmap = MeaningsHeatmap::default();
    for r in records {
        let cell = (heatmap_length_bin(surface_len(r)), r.meanings_count);
        *heatmap.cells.entry(cell).or_insert(0) += 1;
    }
    (stat, heatmap)
}

/// Mean edit distance between token and restatement per length bin, over
/// records that have a restatement.
pub fn restatement_distance(records: &[PollRecord]) -> LengthBinnedStat {
    LengthBinnedStat::from_values(
        records.iter().filter_map(|r| {
            r.restatement
                .as_ref()
                .map(|re| (surface_len(r), levenshtein(&r.token_surface, re) as f64))
        }),
        1,
    )
}

/// Fraction of records with a contextualization, per length bin.
pub fn contextualization_rate(records: &[PollRecord]) -> LengthBinnedStat {
    LengthBinnedStat::from_values(
        records.iter().map(|r| {
            (
                surface_len(r),
                if r.contextualization.is_some() { 1.0 } else { 0.0 },
            )
        }),
        1,
    )
}

/// Mean normalized edit distance between token and contextualization per
/// length bin, over records that have a contextualization.
pub fn context_distance(records: &[PollRecord]) -> LengthBinnedStat {
    LengthBinnedStat::from_values(
        records.iter().filter_map(|r| {
            r.contextualization.as_ref().map(|ctx| {
                (
                    surface_len(r),
                    normalized_levenshtein(&r.token_surface, ctx),
                )
            })
        }),
        1,
    )
}
