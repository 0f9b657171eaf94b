//! Rank-frequency tables and token-length distributions.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::tokenize::{TokenId, Vocabulary};

/// One rank-frequency row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankRow {
    /// 1-based rank; rank 1 is the most frequent token.
    pub rank: u64,
    pub token_id: TokenId,
    pub frequency: u64,
}

/// Tokens sorted by descending frequency. Frequencies are non-increasing,
/// ranks are `1..=len` with no gaps, and ties order by ascending token id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RankFrequencyTable {
    rows: Vec<RankRow>,
}

impl RankFrequencyTable {
    pub fn rows(&self) -> &[RankRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row_at_rank(&self, rank: u64) -> Option<&RankRow> {
        self.rows.get(rank as usize - 1)
    }

    pub fn total_frequency(&self) -> u64 {
        self.rows.iter().map(|r| r.frequency).sum()
    }

    /// Builds a table directly from already-ranked rows, validating the
    /// table invariants.
    pub fn from_rows(rows: Vec<RankRow>) -> Result<RankFrequencyTable> {
        for (i, row) in rows.iter().enumerate() {
            if row.rank != i as u64 + 1 {
                return Err(Error::consistency(format!(
                    "rank {} at position {}: ranks must be consecutive from 1",
                    row.rank, i
                )));
            }
            if i > 0 {
                let prev = &rows[i - 1];
                if row.frequency > prev.frequency {
                    return Err(Error::consistency(format!(
                        "frequency increases at rank {}",
                        row.rank
                    )));
                }
                if row.frequency == prev.frequency && row.token_id <= prev.token_id {
                    return Err(Error::consistency(format!(
                        "tied frequencies out of token-id order at rank {}",
                        row.rank
                    )));
                }
            }
        }
        Ok(RankFrequencyTable { rows })
    }

    /// Writes `rank,token_id,frequency` CSV with a header row.
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
        writeln!(w, "rank,token_id,frequency").map_err(io_err)?;
        for r in &self.rows {
            writeln!(w, "{},{},{}", r.rank, r.token_id, r.frequency).map_err(io_err)?;
        }
        w.flush().map_err(io_err)
    }

    pub fn load_csv(path: &Path) -> Result<RankFrequencyTable> {
        let file = File::open(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let reader = BufReader::new(file);
        let mut rows = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx as u64 + 1;
            let line = line.map_err(|e| Error::Io {
                path: path.to_path_buf(),
                source: e,
            })?;
            if idx == 0 {
                if line.trim() != "rank,token_id,frequency" {
                    return Err(Error::Parse {
                        line: 1,
                        msg: "missing rank,token_id,frequency header".into(),
                    });
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected 3 fields, got {}", fields.len()),
                });
            }
            let num = |s: &str| {
                s.trim().parse::<u64>().map_err(|_| Error::Parse {
                    line: line_no,
                    msg: format!("invalid number {s:?}"),
                })
            };
            rows.push(RankRow {
                rank: num(fields[0])?,
                token_id: num(fields[1])? as TokenId,
                frequency: num(fields[2])?,
            });
        }
        RankFrequencyTable::from_rows(rows)
    }
}

/// Sorts a frequency map into a rank-frequency table. Tokens with
/// frequency below `min_count` are excluded; `min_count` 1 (the default
/// elsewhere) drops only unseen tokens, whose rank would be undefined.
pub fn rank_frequency(freqs: &HashMap<TokenId, u64>, min_count: u64) -> RankFrequencyTable {
    let cutoff = min_count.max(1);
    let mut items: Vec<(TokenId, u64)> = freqs
        .iter()
        .filter(|(_, &c)| c >= cutoff)
        .map(|(&id, &c)| (id, c))
        .collect();
    items.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    RankFrequencyTable {
        rows: items
            .into_iter()
            .enumerate()
            .map(|(i, (token_id, frequency))| RankRow {
                rank: i as u64 + 1,
                token_id,
                frequency,
            })
            .collect(),
    }
}

/// How a length histogram weights each token.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LengthWeighting {
    /// Each vocabulary entry counts once.
    ByType,
    /// Each entry counts its corpus frequency.
    ByOccurrence,
}

impl std::str::FromStr for LengthWeighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "by-type" => Ok(LengthWeighting::ByType),
            "by-occurrence" => Ok(LengthWeighting::ByOccurrence),
            other => Err(Error::param(format!("unknown weighting `{other}`"))),
        }
    }
}

/// Token count per character length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LengthHistogram {
    pub counts: std::collections::BTreeMap<u32, u64>,
    pub weighting: LengthWeighting,
}

impl LengthHistogram {
    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    /// Writes `length,count` CSV with a header row.
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
        writeln!(w, "length,count").map_err(io_err)?;
        for (len, count) in &self.counts {
            writeln!(w, "{len},{count}").map_err(io_err)?;
        }
        w.flush().map_err(io_err)
    }
}

/// Histogram of token lengths, by vocabulary type or corpus occurrence.
pub fn length_distribution(
    vocab: &Vocabulary,
    freqs: &HashMap<TokenId, u64>,
    weighting: LengthWeighting,
) -> Result<LengthHistogram> {
    for id in freqs.keys() {
        if vocab.entry(*id).is_none() {
            return Err(Error::consistency(format!(
                "frequency map references unknown token id {id}"
            )));
        }
    }
    let mut counts = std::collections::BTreeMap::new();
    match weighting {
        LengthWeighting::ByType => {
            for e in vocab.entries() {
                *counts.entry(e.char_length).or_insert(0) += 1;
            }
        }
        LengthWeighting::ByOccurrence => {
            for e in vocab.entries() {
                let f = freqs.get(&e.token_id).copied().unwrap_or(0);
                if f > 0 {
                    *counts.entry(e.char_length).or_insert(0) += f;
                }
            }
        }
    }
    Ok(LengthHistogram { counts, weighting })
}

/// Per-band token-length statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct BandLengthStat {
    /// 0-based band index; band 0 holds the lowest (most frequent) ranks.
    pub band: usize,
    /// Inclusive rank range covered by the band.
    pub rank_range: (u64, u64),
    pub mean_length: f64,
    pub median_length: f64,
}

/// Splits the ranks into `band_count` contiguous bands of (near-)equal
/// size and reports mean and median token length per band.
pub fn rank_band_lengths(
    rft: &RankFrequencyTable,
    vocab: &Vocabulary,
    band_count: usize,
) -> Result<Vec<BandLengthStat>> {
    if band_count == 0 {
        return Err(Error::param("band count must be at least 1"));
    }
    let n = rft.len();
    if band_count > n {
        return Err(Error::param(format!(
            "band count {band_count} exceeds table size {n}"
        )));
    }
    let mut out = Vec::with_capacity(band_count);
    for band in 0..band_count {
        let start = band * n / band_count;
        let end = (band + 1) * n / band_count;
        let mut lengths: Vec<u32> = Vec::with_capacity(end - start);
        for row in &rft.rows[start..end] {
            let entry = vocab.entry(row.token_id).ok_or_else(|| {
                Error::consistency(format!(
                    "token id {} missing from vocabulary",
                    row.token_id
                ))
            })?;
            lengths.push(entry.char_length);
        }
        lengths.sort_unstable();
        let mean = lengths.iter().map(|&l| l as f64).sum::<f64>() / lengths.len() as f64;
        let median = if lengths.len() % 2 == 1 {
            lengths[lengths.len() / 2] as f64
        } else {
            (lengths[lengths.len() / 2 - 1] as f64 + lengths[lengths.len() / 2] as f64) / 2.0
        };
        out.push(BandLengthStat {
            band,
            rank_range: (start as u64 + 1, end as u64),
            mean_length: mean,
            median_length: median,
        });
    }
    Ok(out)
}
