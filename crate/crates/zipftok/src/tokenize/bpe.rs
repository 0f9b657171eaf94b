//! Byte-pair-encoding trainer: repeatedly merge the most frequent
//! adjacent token pair until the vocabulary reaches its target size or no
//! pair occurs at least twice.

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::tokenize::engine::{MergeEngine, TrainCorpus};
use crate::tokenize::{Algorithm, Boundary, MergeTable, Vocabulary};

/// Trains a BPE vocabulary of `target_size` entries.
///
/// The returned [`MergeTable`] lists merges in creation order; replaying
/// it reproduces training-time segmentation exactly. Equal pair counts are
/// broken toward the lexicographically smallest concatenated surface, so
/// training is deterministic for a fixed corpus.
pub fn train_bpe<I>(
    docs: I,
    target_size: usize,
    boundary: Boundary,
) -> Result<(Vocabulary, MergeTable)>
where
    I: IntoIterator<Item = Result<Document>>,
{
    let corpus = TrainCorpus::build(docs, boundary)?;
    if target_size < corpus.alphabet_len() {
        return Err(Error::param(format!(
            "target size {} is below the alphabet size {}",
            target_size,
            corpus.alphabet_len()
        )));
    }

    let mut engine = MergeEngine::new(corpus, true);
    let mut merges: Vec<(String, String)> = Vec::new();
    while engine.corpus.vocab_len() < target_size {
        let Some((pair, _count)) = engine.select_max_count() else {
            log::warn!(
                "bpe training stopped early at {} of {} tokens: no pair occurs twice",
                engine.corpus.vocab_len(),
                target_size
            );
            break;
        };
        let surface = engine.corpus.concat_surface(pair);
        if engine.corpus.has_surface(&surface) {
            // The merged surface would duplicate an existing token; this
            // pair can never become a vocabulary entry.
            engine.ban(pair);
            continue;
        }
        let rule = (
            engine.corpus.surface(pair.0).to_string(),
            engine.corpus.surface(pair.1).to_string(),
        );
        engine.apply_merge(pair);
        merges.push(rule);
    }

    let vocab = Vocabulary::new(Algorithm::Bpe, target_size, engine.corpus.into_entries())?;
    Ok((vocab, MergeTable::new(merges)))
}
