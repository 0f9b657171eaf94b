/* C interface for the zipftok tokenizer-training and power-law analysis library. */

#ifndef ZIPFTOK_H
#define ZIPFTOK_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes for every fallible call in this interface.
 */
typedef enum ZipftokStatus {
  ZIPFTOK_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  ZIPFTOK_STATUS_NULL_ARGUMENT = 1,
  /**
   * Invalid parameter or malformed input data.
   */
  ZIPFTOK_STATUS_INVALID_ARGUMENT = 2,
  /**
   * File system or decoding failure.
   */
  ZIPFTOK_STATUS_IO = 3,
  /**
   * Training or fitting failed.
   */
  ZIPFTOK_STATUS_COMPUTE = 4,
  /**
   * A string argument was not valid UTF-8.
   */
  ZIPFTOK_STATUS_UTF8 = 5,
  /**
   * An output buffer was too small; the required size was reported.
   */
  ZIPFTOK_STATUS_BUFFER_TOO_SMALL = 6,
} ZipftokStatus;

/**
 * Corpus file layout accepted by [`zipftok_vocab_train_path`].
 */
typedef enum ZipftokFormat {
  ZIPFTOK_FORMAT_PLAIN_LINES = 0,
  ZIPFTOK_FORMAT_WIKITEXT = 1,
} ZipftokFormat;

/**
 * Training algorithm selector.
 */
typedef enum ZipftokAlgorithm {
  ZIPFTOK_ALGORITHM_BPE = 0,
  ZIPFTOK_ALGORITHM_WORD_PIECE = 1,
  ZIPFTOK_ALGORITHM_UNIGRAM = 2,
} ZipftokAlgorithm;

/**
 * Merge boundary selector.
 */
typedef enum ZipftokBoundary {
  ZIPFTOK_BOUNDARY_DOCUMENT = 0,
  ZIPFTOK_BOUNDARY_WORD = 1,
} ZipftokBoundary;

/**
 * Token classes assigned by [`zipftok_token_class`].
 */
typedef enum ZipftokTokenClass {
  ZIPFTOK_TOKEN_CLASS_ATOM = 0,
  ZIPFTOK_TOKEN_CLASS_PRAGMA = 1,
  ZIPFTOK_TOKEN_CLASS_IDEA = 2,
} ZipftokTokenClass;

/**
 * Opaque trained-vocabulary handle.
 */
typedef struct ZipftokVocab ZipftokVocab;

/**
 * Two-regime fit summary returned by [`zipftok_fit_broken`].
 */
typedef struct ZipftokBrokenFit {
  uint64_t breakpoint_rank;
  double head_exponent;
  double tail_exponent;
  double total_rss;
  /**
   * BIC(single) - BIC(broken); positive favors the broken model.
   */
  double delta_bic;
  double single_exponent;
  double single_rss;
  double single_r_squared;
} ZipftokBrokenFit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *zipftok_version(void);

/**
 * Copies the last error message for this thread into `buf` (truncated to
 * `cap - 1` bytes, always NUL-terminated when `cap > 0`) and returns the
 * full message length in bytes.
 */
uintptr_t zipftok_last_error(char *buf, uintptr_t cap);

/**
 * Trains a vocabulary from a corpus file. On success `*out` owns the new
 * handle; release it with [`zipftok_vocab_free`].
 *
 * # Safety
 * `corpus_path` must be a valid NUL-terminated string and `out` a valid
 * pointer.
 */
enum ZipftokStatus zipftok_vocab_train_path(const char *corpus_path,
                                            enum ZipftokFormat format,
                                            enum ZipftokAlgorithm algorithm,
                                            uintptr_t target_size,
                                            enum ZipftokBoundary boundary,
                                            bool lowercase,
                                            struct ZipftokVocab **out);

/**
 * Loads a vocabulary TSV (and, for BPE, its merge table) written by the
 * `zipftok train` command or [`zipftok_vocab_save`].
 *
 * # Safety
 * `vocab_path` must be valid; `merges_path` may be null for WordPiece
 * and Unigram vocabularies; `out` must be a valid pointer.
 */
enum ZipftokStatus zipftok_vocab_load(const char *vocab_path,
                                      enum ZipftokAlgorithm algorithm,
                                      const char *merges_path,
                                      struct ZipftokVocab **out);

/**
 * Writes the vocabulary TSV (and the merge table, when one exists and
 * `merges_path` is non-null).
 *
 * # Safety
 * `handle` must come from this library; paths must be valid strings.
 */
enum ZipftokStatus zipftok_vocab_save(const struct ZipftokVocab *handle,
                                      const char *vocab_path,
                                      const char *merges_path);

/**
 * Number of tokens in the vocabulary; 0 for a null handle.
 *
 * # Safety
 * `handle` must be null or come from this library.
 */
uintptr_t zipftok_vocab_len(const struct ZipftokVocab *handle);

/**
 * Copies the UTF-8 surface of `token_id` into `buf` (truncated, always
 * NUL-terminated when `cap > 0`) and stores the full byte length in
 * `*out_len`. Returns `BufferTooSmall` when truncation happened.
 *
 * # Safety
 * Pointers must be valid for the given capacity.
 */
enum ZipftokStatus zipftok_vocab_token(const struct ZipftokVocab *handle,
                                       uint32_t token_id,
                                       char *buf,
                                       uintptr_t cap,
                                       uintptr_t *out_len);

/**
 * Encodes NUL-terminated UTF-8 text into token ids. `*out_len` receives
 * the required length; ids are written when `cap` suffices.
 *
 * # Safety
 * `out_ids` must point to at least `cap` elements; other pointers must
 * be valid.
 */
enum ZipftokStatus zipftok_encode(const struct ZipftokVocab *handle,
                                  const char *text,
                                  uint32_t *out_ids,
                                  uintptr_t cap,
                                  uintptr_t *out_len);

/**
 * Releases a handle created by the train or load calls. Null is a no-op.
 *
 * # Safety
 * `handle` must not be used afterwards.
 */
void zipftok_vocab_free(struct ZipftokVocab *handle);

/**
 * Character-level edit distance between two NUL-terminated UTF-8
 * strings; -1 on null or non-UTF-8 input.
 *
 * # Safety
 * Both pointers must be valid NUL-terminated strings or null.
 */
int64_t zipftok_levenshtein(const char *a, const char *b);

/**
 * Normalized edit distance in [0, 1]; two empty strings give 0.
 *
 * # Safety
 * String pointers must be valid; `out` must be a valid pointer.
 */
enum ZipftokStatus zipftok_normalized_levenshtein(const char *a, const char *b, double *out);

/**
 * Draws `n_draws` ranks from `P(r) ∝ r^(-exponent)` over `1..=n_ranks`
 * and writes per-rank counts into `out_counts`. Deterministic for a
 * fixed seed, bit-for-bit across platforms.
 *
 * # Safety
 * `out_counts` must point to at least `n_ranks` elements.
 */
enum ZipftokStatus zipftok_sample_zipf(double exponent,
                                       uintptr_t n_ranks,
                                       uint64_t n_draws,
                                       uint64_t seed,
                                       uint64_t *out_counts);

/**
 * Ranks token counts (index = token id) and fits both the single and
 * two-regime power laws, filling `*out`.
 *
 * # Safety
 * `counts` must point to `len` elements; `out` must be valid.
 */
enum ZipftokStatus zipftok_fit_broken(const uint64_t *counts,
                                      uintptr_t len,
                                      struct ZipftokBrokenFit *out);

/**
 * Classification rule: single characters are atoms, tokens ranked at or
 * before the breakpoint are pragmas, the rest are ideas.
 */
enum ZipftokTokenClass zipftok_token_class(uint32_t char_length,
                                           uint64_t rank,
                                           uint64_t breakpoint_rank);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ZIPFTOK_H */
