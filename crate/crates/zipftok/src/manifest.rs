//! Reproducibility manifest written next to training artifacts. Two runs
//! with equal identity fields (corpus digest + parameters) produce
//! byte-identical outputs; the timestamps only record when they ran.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::Document;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct RunManifest {
    pub corpus_path: String,
    /// SHA-256 over the normalized document texts, each followed by a
    /// newline.
    pub corpus_sha256: String,
    pub format: String,
    pub algorithm: String,
    pub target_size: usize,
    pub boundary: String,
    pub seed: u64,
    pub tool_version: String,
    pub started_utc: String,
    pub finished_utc: String,
}

impl RunManifest {
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let mut w = BufWriter::new(file);
        serde_json::to_writer_pretty(&mut w, self).map_err(|e| Error::Consistency(e.to_string()))?;
        w.write_all(b"\n").map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        w.flush().map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    }

    pub fn load(path: &Path) -> Result<RunManifest> {
        let file = File::open(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        serde_json::from_reader(file).map_err(|e| Error::Parse {
            line: e.line() as u64,
            msg: e.to_string(),
        })
    }
}

/// Hex SHA-256 of the normalized corpus: every document text, newline
/// terminated, in stream order.
pub fn corpus_digest<'a, I>(docs: I) -> String
where
    I: IntoIterator<Item = &'a Document>,
{
    let mut hasher = Sha256::new();
    for doc in docs {
        hasher.update(doc.text.as_bytes());
        hasher.update(b"\n");
    }
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for byte in digest {
        hex.push_str(&format!("{byte:02x}"));
    }
    hex
}

pub fn utc_now_rfc3339() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}
