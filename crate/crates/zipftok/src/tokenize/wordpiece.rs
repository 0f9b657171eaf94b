//! WordPiece trainer: the BPE loop with likelihood-ratio pair selection.

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::tokenize::engine::{MergeEngine, TrainCorpus};
use crate::tokenize::{Algorithm, Boundary, Vocabulary};

/// Trains a WordPiece vocabulary of `target_size` entries.
///
/// Identical to [`crate::tokenize::train_bpe`] except that the merged pair
/// maximizes `count(pair) / (count(left) * count(right))` instead of the
/// raw pair count. Encoding uses greedy longest-match, so no merge table
/// is produced.
pub fn train_wordpiece<I>(docs: I, target_size: usize, boundary: Boundary) -> Result<Vocabulary>
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

    let mut engine = MergeEngine::new(corpus, false);
    while engine.corpus.vocab_len() < target_size {
        let Some((pair, _count)) = engine.select_max_score() else {
            log::warn!(
                "wordpiece training stopped early at {} of {} tokens: no pair occurs twice",
                engine.corpus.vocab_len(),
                target_size
            );
            break;
        };
        let surface = engine.corpus.concat_surface(pair);
        if engine.corpus.has_surface(&surface) {
            engine.ban(pair);
            continue;
        }
        engine.apply_merge(pair);
    }

    Vocabulary::new(Algorithm::WordPiece, target_size, engine.corpus.into_entries())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;

    fn docs(texts: &[&str]) -> Vec<Result<Document>> {
        texts
            .iter()
            .enumerate()
            .map(|(i, t)| {
                Ok(Document {
                    doc_id: i as u64,
                    text: (*t).to_string(),
                })
            })
            .collect()
    }

    #[test]
    fn rare_pair_with_rare_parts_beats_frequent_pair() {
        // Construct a corpus where ("a","b") occurs 10 times with
        // count(a) = count(b) = 100, and ("c","d") occurs 5 times with
        // count(c) = count(d) = 5. Scores: 10/10000 = 0.001 versus
        // 5/25 = 0.2, so ("c","d") merges first.
        let mut words: Vec<&str> = Vec::new();
        words.extend(std::iter::repeat_n("ab", 10));
        // 90 more of each of a and b as isolated single-char words.
        words.extend(std::iter::repeat_n("a", 90));
        words.extend(std::iter::repeat_n("b", 90));
        words.extend(std::iter::repeat_n("cd", 5));
        let text = words.join(" ");
        let vocab = train_wordpiece(docs(&[&text]), 6, Boundary::Word).unwrap();
        // Alphabet {a,b,c,d, space} plus exactly one merge.
        assert_eq!(vocab.len(), 6);
        assert!(vocab.id_of("cd").is_some(), "expected cd to merge first");
        assert!(vocab.id_of("ab").is_none());
    }

    #[test]
    fn single_candidate_merges_first() {
        let text = "ab ab ab";
        let vocab = train_wordpiece(docs(&[text]), 4, Boundary::Word).unwrap();
        assert!(vocab.id_of("ab").is_some());
    }

    #[test]
    fn stops_early_when_all_pairs_are_singletons() {
        let vocab = train_wordpiece(docs(&["abcdef"]), 12, Boundary::Word).unwrap();
        assert_eq!(vocab.len(), 6);
    }

    #[test]
    fn training_is_deterministic() {
        let texts = ["east west east", "west east nest"];
        let v1 = train_wordpiece(docs(&texts), 20, Boundary::Word).unwrap();
        let v2 = train_wordpiece(docs(&texts), 20, Boundary::Word).unwrap();
        assert_eq!(v1.entries(), v2.entries());
    }
}
