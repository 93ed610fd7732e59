#ifndef TOPICVAR_H
#define TOPICVAR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TvKernel {
  TV_KERNEL_RBF = 0,
  TV_KERNEL_LINEAR = 1,
} TvKernel;

typedef enum TvStatus {
  TV_STATUS_OK = 0,
  TV_STATUS_NULL_POINTER = 1,
  TV_STATUS_INVALID_UTF8 = 2,
  // An output buffer length does not match the required length.
  TV_STATUS_BUFFER_LENGTH = 3,
  TV_STATUS_IO = 10,
  TV_STATUS_INVALID_CONFIG = 11,
  TV_STATUS_INVALID_INPUT = 12,
  TV_STATUS_EMPTY_CORPUS = 13,
  TV_STATUS_FORMAT = 14,
  TV_STATUS_FEATURE_MISMATCH = 15,
  TV_STATUS_NOT_CONVERGED = 16,
  TV_STATUS_UNDEFINED = 17,
  TV_STATUS_PANIC = 99,
} TvStatus;

typedef struct TvCorpus TvCorpus;

typedef struct TvCounts TvCounts;

typedef struct TvRun TvRun;

typedef struct TvSvrModel TvSvrModel;

typedef struct TvLdaConfig {
  size_t num_topics;
  // When true, alpha is 50 / num_topics and `alpha` is ignored.
  bool alpha_auto;
  double alpha;
  double beta;
  size_t total_iterations;
  size_t burn_in;
  size_t thin;
  uint64_t seed;
  size_t top_n;
} TvLdaConfig;

typedef struct TvSvrParams {
  enum TvKernel kernel;
  double c;
  double epsilon;
  // Values <= 0 select 1 / number of features.
  double gamma;
  double tol;
  size_t max_iterations;
} TvSvrParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *tv_version(void);

// Message of the last failed call on this thread, or NULL after a success.
// The pointer stays valid until the next call into the library on this thread.
const char *tv_last_error_message(void);

// Reads a binary corpus written by `topicvar preprocess`.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum TvStatus tv_corpus_load(const char *path, struct TvCorpus **out);

// Tokenizes and encodes a raw document file (`.jsonl` with `id`/`text`
// fields, otherwise one document per line) using the default filters.
// A `min_term_count` of 0 keeps the default threshold.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum TvStatus tv_corpus_preprocess(const char *path, size_t min_term_count, struct TvCorpus **out);

// Builds a corpus from word ids. `ids` holds the documents back to back;
// `doc_lengths[d]` tokens belong to document `d`.
//
// # Safety
// `doc_lengths` must point to `num_docs` values and `ids` to their sum.
enum TvStatus tv_corpus_from_ids(size_t vocab_size,
                                 const size_t *doc_lengths,
                                 size_t num_docs,
                                 const uint32_t *ids,
                                 struct TvCorpus **out);

// # Safety
// `corpus` must be a live handle; `path` a NUL-terminated string.
enum TvStatus tv_corpus_save(const struct TvCorpus *corpus, const char *path);

// # Safety
// `corpus` must be NULL or a live handle.
size_t tv_corpus_num_docs(const struct TvCorpus *corpus);

// # Safety
// `corpus` must be NULL or a live handle.
size_t tv_corpus_vocab_size(const struct TvCorpus *corpus);

// # Safety
// `corpus` must be NULL or a live handle.
size_t tv_corpus_num_tokens(const struct TvCorpus *corpus);

// Copies the term for `id` into `buf` (NUL-terminated, truncated to fit) and
// returns the full term length in bytes, or -1 if there is no such id.
//
// # Safety
// `corpus` must be a live handle; `buf` must hold `capacity` bytes.
int64_t tv_corpus_term(const struct TvCorpus *corpus, uint32_t id, char *buf, size_t capacity);

// # Safety
// `corpus` must be NULL or a handle not yet freed.
void tv_corpus_free(struct TvCorpus *corpus);

struct TvLdaConfig tv_lda_config_default(void);

// Runs one Gibbs chain. Phi samples are streamed to `phi_path`, which must
// stay in place while stability is computed from the run.
//
// # Safety
// `corpus` and `config` must be valid; `phi_path` a NUL-terminated string.
enum TvStatus tv_run_chain(const struct TvCorpus *corpus,
                           const struct TvLdaConfig *config,
                           const char *phi_path,
                           struct TvRun **out);

// # Safety
// `run` must be NULL or a live handle.
size_t tv_run_num_topics(const struct TvRun *run);

// # Safety
// `run` must be NULL or a live handle.
size_t tv_run_num_docs(const struct TvRun *run);

// # Safety
// `run` must be NULL or a live handle.
size_t tv_run_num_samples(const struct TvRun *run);

// Words per topic in [`tv_run_top_words`].
//
// # Safety
// `run` must be NULL or a live handle.
size_t tv_run_top_n(const struct TvRun *run);

// Top word ids, row-major `num_topics x top_n`.
//
// # Safety
// `run` must be a live handle; `out` must hold `len` values.
enum TvStatus tv_run_top_words(const struct TvRun *run, uint32_t *out, size_t len);

// Posterior mean of theta, row-major `num_docs x num_topics`.
//
// # Safety
// `run` must be a live handle; `out` must hold `len` values.
enum TvStatus tv_run_theta_mean(const struct TvRun *run, double *out, size_t len);

// Per-topic variability; `len` must equal the number of topics.
//
// # Safety
// `run` must be a live handle; `out` must hold `len` values.
enum TvStatus tv_run_variability(const struct TvRun *run, double *out, size_t len);

// # Safety
// `run` must be a live handle; `out` must hold `len` values.
enum TvStatus tv_run_mu_variability(const struct TvRun *run, double *out, size_t len);

// # Safety
// `run` must be a live handle; `out` must hold `len` values.
enum TvStatus tv_run_sigma_variability(const struct TvRun *run, double *out, size_t len);

// Reads the phi sample file written by the chain.
//
// # Safety
// `run` must be a live handle; `out` must hold `len` values.
enum TvStatus tv_run_stability(const struct TvRun *run, double *out, size_t len);

// # Safety
// `run` must be NULL or a handle not yet freed.
void tv_run_free(struct TvRun *run);

// Counts word and pair frequencies over `corpus`. A `window` of 0 uses whole
// documents as units, otherwise sliding windows of that width.
//
// # Safety
// `corpus` must be a live handle; `out` must be writable.
enum TvStatus tv_counts_new(const struct TvCorpus *corpus, size_t window, struct TvCounts **out);

// # Safety
// `counts` must be NULL or a live handle.
uint64_t tv_counts_num_units(const struct TvCounts *counts);

// Sum of PMI over all unordered pairs of `words`.
//
// # Safety
// `counts` must be a live handle, `words` must hold `n` ids, `out` one value.
enum TvStatus tv_pmi(const struct TvCounts *counts, const uint32_t *words, size_t n, double *out);

// Sum of NPMI over all unordered pairs of `words`.
//
// # Safety
// As for [`tv_pmi`].
enum TvStatus tv_npmi(const struct TvCounts *counts, const uint32_t *words, size_t n, double *out);

// Coherence of `words`, ranked by descending probability. Needs counts built
// with `window = 0`.
//
// # Safety
// As for [`tv_pmi`].
enum TvStatus tv_coherence(const struct TvCounts *counts,
                           const uint32_t *words,
                           size_t n,
                           double *out);

// # Safety
// `counts` must be NULL or a handle not yet freed.
void tv_counts_free(struct TvCounts *counts);

struct TvSvrParams tv_svr_params_default(void);

// Fits an epsilon-SVR on a row-major `num_rows x num_features` matrix.
// `feature_names` may be NULL; prediction matches columns by these names.
//
// # Safety
// `rows` must hold `num_rows * num_features` values, `labels` `num_rows`,
// `feature_names` NULL or `num_features` strings.
enum TvStatus tv_svr_train(const double *rows,
                           size_t num_rows,
                           size_t num_features,
                           const char *const *feature_names,
                           const double *labels,
                           const struct TvSvrParams *params,
                           struct TvSvrModel **out);

// Predicts one value per row. Columns are matched to the training columns by
// name, as for [`tv_svr_train`].
//
// # Safety
// `model` must be a live handle; buffers as for [`tv_svr_train`], and `out`
// must hold `len == num_rows` values.
enum TvStatus tv_svr_predict(const struct TvSvrModel *model,
                             const double *rows,
                             size_t num_rows,
                             size_t num_features,
                             const char *const *feature_names,
                             double *out,
                             size_t len);

// Writes the model as JSON, the same format `topicvar train-estimator` writes.
//
// # Safety
// `model` must be a live handle; `path` a NUL-terminated string.
enum TvStatus tv_svr_save(const struct TvSvrModel *model, const char *path);

// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum TvStatus tv_svr_load(const char *path, struct TvSvrModel **out);

// # Safety
// `model` must be NULL or a handle not yet freed.
void tv_svr_free(struct TvSvrModel *model);

// # Safety
// `x` and `y` must each hold `n` values; `out` one value.
enum TvStatus tv_pearson_r(const double *x, const double *y, size_t n, double *out);

// Interval-weighted Krippendorff's alpha over a row-major
// `num_items x num_raters` matrix of ratings in [1, 4]. NaN marks a missing
// rating; items with no rating at all are skipped.
//
// # Safety
// `ratings` must hold `num_items * num_raters` values; `out` one value.
enum TvStatus tv_krippendorff_alpha(const double *ratings,
                                    size_t num_items,
                                    size_t num_raters,
                                    double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TOPICVAR_H */
