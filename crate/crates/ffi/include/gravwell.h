#ifndef GRAVWELL_H
#define GRAVWELL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GwStatus {
  GW_STATUS_OK = 0,
  GW_STATUS_NULL_POINTER = 1,
  GW_STATUS_INVALID_ARGUMENT = 2,
  GW_STATUS_IO = 3,
  GW_STATUS_PARSE = 4,
  GW_STATUS_CONFIG = 5,
  GW_STATUS_SCORING = 6,
  GW_STATUS_ANALYSIS = 7,
  GW_STATUS_UNDEFINED_STATISTIC = 8,
  GW_STATUS_PANIC = 99,
} GwStatus;

// A parsed and indexed comment dump.
typedef struct GwCorpus GwCorpus;

// Configured analysis pipeline.
typedef struct GwPipeline GwPipeline;

typedef struct GwRunSummary {
  size_t subreddits;
  size_t users;
  size_t forces;
  size_t scoring_failures;
  size_t scoring_calls;
  size_t embedding_calls;
} GwRunSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. Valid until
// the next `gw_*` call on the same thread.
const char *gw_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *gw_version(void);

// # Safety
// `out` must be valid for writing one double.
enum GwStatus gw_otimes(double a, double b, double *out);

// Inputs must each be one of -1, -0.5, 0, 0.5, 1.
//
// # Safety
// `out` must be valid for writing one double.
enum GwStatus gw_pair_contribution(double sup_i, double sup_j, double align, double *out);

// # Safety
// `out` must be valid for writing one double.
enum GwStatus gw_normalize_bias(double m_unweighted, size_t n, size_t pair_count, double *out);

// # Safety
// `u` and `g` must each point to `dim` doubles; `out` must be writable.
enum GwStatus gw_ideological_distance(const double *u, const double *g, size_t dim, double *out);

// # Safety
// `out` must be valid for writing one double.
enum GwStatus gw_pull_force(double mass,
                            double m_user,
                            double tm,
                            double tsm,
                            double d,
                            double *out);

// Spearman's rho between two score arrays describing the same `n` items.
//
// # Safety
// `a` and `b` must each point to `n` doubles; `out` must be writable.
enum GwStatus gw_spearman_rho(const double *a, const double *b, size_t n, double *out);

// One-sided p-value for positive association.
//
// # Safety
// `out` must be valid for writing one double.
enum GwStatus gw_spearman_p_value(double rho, size_t n, double *out);

// # Safety
// `human` and `ai` must each point to `n` score levels; `out` must be writable.
enum GwStatus gw_qwk(const double *human, const double *ai, size_t n, double *out);

// # Safety
// `human` and `ai` must each point to `n` score levels; `out` must be writable.
enum GwStatus gw_nmae(const double *human, const double *ai, size_t n, double *out);

// Loads a JSON Lines comment dump.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable. On
// success `*out` owns a handle to release with `gw_corpus_free`.
enum GwStatus gw_corpus_load(const char *path, struct GwCorpus **out);

// # Safety
// `corpus` must be null or a live handle from `gw_corpus_load`.
size_t gw_corpus_comment_count(const struct GwCorpus *corpus);

// # Safety
// `corpus` must be null or a live handle from `gw_corpus_load`.
size_t gw_corpus_thread_count(const struct GwCorpus *corpus);

// Malformed plus dropped lines.
//
// # Safety
// `corpus` must be null or a live handle from `gw_corpus_load`.
size_t gw_corpus_skipped_count(const struct GwCorpus *corpus);

// # Safety
// `corpus` must be null or a handle from `gw_corpus_load` not yet freed.
void gw_corpus_free(struct GwCorpus *corpus);

// Builds a pipeline from a JSON config file.
//
// # Safety
// `config_path` must be a NUL-terminated string; `out` must be writable.
// On success `*out` owns a handle to release with `gw_pipeline_free`.
enum GwStatus gw_pipeline_from_config(const char *config_path, struct GwPipeline **out);

// Runs every stage, writing artifacts into `out_dir` (created if needed).
//
// # Safety
// `pipeline` must be a live handle, `out_dir` a NUL-terminated string and
// `summary` null or writable.
enum GwStatus gw_pipeline_run(const struct GwPipeline *pipeline,
                              const char *out_dir,
                              struct GwRunSummary *summary);

// # Safety
// `pipeline` must be null or a handle not yet freed.
void gw_pipeline_free(struct GwPipeline *pipeline);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GRAVWELL_H */
