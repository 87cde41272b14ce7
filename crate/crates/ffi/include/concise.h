#ifndef CONCISE_H
#define CONCISE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum ConciseStatus {
  CONCISE_STATUS_OK = 0,
  CONCISE_STATUS_NULL_POINTER = 1,
  CONCISE_STATUS_INVALID_UTF8 = 2,
  CONCISE_STATUS_INVALID_ARGUMENT = 3,
  CONCISE_STATUS_DATA_ERROR = 4,
  CONCISE_STATUS_IO_ERROR = 5,
  CONCISE_STATUS_PANIC = 6,
} ConciseStatus;

// Document-frequency table.
typedef struct ConciseDfTable ConciseDfTable;

// Synonym lexicon.
typedef struct ConciseLexicon ConciseLexicon;

// Accumulates multi-reference examples and hypotheses for corpus scoring.
typedef struct ConciseScorer ConciseScorer;

// Precision, recall and F-beta.
typedef struct ConcisePrf {
  double precision;
  double recall;
  double f_beta;
} ConcisePrf;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version and supported format versions. Static; do not free.
const char *concise_version(void);

// Message for the last failed call on this thread, or NULL. Valid until the
// next call into the library on the same thread; do not free.
const char *concise_last_error(void);

// Releases a string returned by this library. NULL is ignored.
//
// # Safety
// `s` must come from a `char **` out-pointer of this library and not have
// been freed already.
void concise_string_free(char *s);

// Tokenizes `text` and writes the tokens as a JSON array of strings.
//
// # Safety
// `text` must be a NUL-terminated string; `out_json` must be writable.
enum ConciseStatus concise_tokenize_json(const char *text, bool pretokenized, char **out_json);

// Heuristic syllable count of one token.
//
// # Safety
// `token` must be a NUL-terminated string; `out_count` must be writable.
enum ConciseStatus concise_count_syllables(const char *token, uint32_t *out_count);

// Precision, recall and F-beta from edit counts.
//
// # Safety
// `out_prf` must be writable.
enum ConciseStatus concise_compute_prf(uint64_t true_positives,
                                       uint64_t false_positives,
                                       uint64_t false_negatives,
                                       double beta,
                                       struct ConcisePrf *out_prf);

// Flesch-Kincaid grade of one sentence.
//
// # Safety
// `sentence` must be a NUL-terminated string; `out_grade` must be writable.
enum ConciseStatus concise_fk_grade(const char *sentence, double *out_grade);

// Edit spans turning `source` into `target`, as a JSON array of
// `{"start","end","replacement"}` objects over source token indices.
//
// # Safety
// `source` and `target` must be NUL-terminated strings; `out_json` must be
// writable.
enum ConciseStatus concise_extract_edits_json(const char *source,
                                              const char *target,
                                              bool split,
                                              char **out_json);

// Loads a document-frequency table written by `concise build-df`.
//
// # Safety
// `path` must be a NUL-terminated string; `out_table` must be writable.
enum ConciseStatus concise_df_table_load(const char *path, struct ConciseDfTable **out_table);

// # Safety
// `table` must be NULL or a handle from [`concise_df_table_load`] not yet freed.
void concise_df_table_free(struct ConciseDfTable *table);

// Number of documents the table was built from; 0 for a NULL handle.
//
// # Safety
// `table` must be NULL or a live handle.
uint64_t concise_df_table_doc_count(const struct ConciseDfTable *table);

// IDF of one token in the given logarithm base (e.g. `M_E`, 2, 10).
//
// # Safety
// `table` must be a live handle, `token` a NUL-terminated string and
// `out_idf` writable.
enum ConciseStatus concise_df_table_idf(const struct ConciseDfTable *table,
                                        const char *token,
                                        double base,
                                        double *out_idf);

// Mean token IDF of a sentence.
//
// # Safety
// `table` must be a live handle, `sentence` a NUL-terminated string and
// `out_idf` writable.
enum ConciseStatus concise_df_table_mean_idf(const struct ConciseDfTable *table,
                                             const char *sentence,
                                             double base,
                                             double *out_idf);

// Loads a `word1<TAB>word2` synonym lexicon.
//
// # Safety
// `path` must be a NUL-terminated string; `out_lexicon` must be writable.
enum ConciseStatus concise_lexicon_load(const char *path, struct ConciseLexicon **out_lexicon);

// # Safety
// `lexicon` must be NULL or a handle from [`concise_lexicon_load`] not yet freed.
void concise_lexicon_free(struct ConciseLexicon *lexicon);

// Number of single-token substitutions from `source` to `target` that swap
// in a listed synonym.
//
// # Safety
// `lexicon` must be a live handle, `source` and `target` NUL-terminated
// strings and `out_count` writable.
enum ConciseStatus concise_lexicon_count_synonym_subs(const struct ConciseLexicon *lexicon,
                                                      const char *source,
                                                      const char *target,
                                                      bool split,
                                                      uint64_t *out_count);

// Creates an empty scorer.
//
// # Safety
// `out_scorer` must be writable.
enum ConciseStatus concise_scorer_new(double beta,
                                      bool ignore_case,
                                      bool split,
                                      struct ConciseScorer **out_scorer);

// Adds one sentence: its source, the system hypothesis and `n_refs`
// reference rewrites.
//
// # Safety
// `scorer` must be a live handle; `id`, `source`, `hypothesis` and the
// `n_refs` entries of `refs` must be NUL-terminated strings.
enum ConciseStatus concise_scorer_add(struct ConciseScorer *scorer,
                                      const char *id,
                                      const char *source,
                                      const char *hypothesis,
                                      const char *const *refs,
                                      size_t n_refs);

// Scores everything added so far and writes the corpus report as JSON
// (same shape as `concise score` output).
//
// # Safety
// `scorer` must be a live handle; `out_json` must be writable.
enum ConciseStatus concise_scorer_report_json(const struct ConciseScorer *scorer, char **out_json);

// # Safety
// `scorer` must be NULL or a handle from [`concise_scorer_new`] not yet freed.
void concise_scorer_free(struct ConciseScorer *scorer);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CONCISE_H */
