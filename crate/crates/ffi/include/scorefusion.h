#ifndef SCOREFUSION_H
#define SCOREFUSION_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Learner selector for [`sf_model_train`].
 */
typedef enum SfModelKind {
  SF_MODEL_KIND_LR = 0,
  SF_MODEL_KIND_SVM = 1,
  SF_MODEL_KIND_DT = 2,
  SF_MODEL_KIND_RF = 3,
  SF_MODEL_KIND_ANN = 4,
  SF_MODEL_KIND_ADA = 5,
} SfModelKind;

/*
 Result of every fallible call.
 */
typedef enum SfStatus {
  SF_STATUS_OK = 0,
  /*
   A required pointer argument was null.
   */
  SF_STATUS_NULL_POINTER = 1,
  /*
   An argument was out of range, mis-sized or not valid UTF-8.
   */
  SF_STATUS_INVALID_ARGUMENT = 2,
  /*
   Invalid configuration or hyperparameters.
   */
  SF_STATUS_CONFIG = 3,
  /*
   Unreadable, malformed or unsuitable data.
   */
  SF_STATUS_DATA = 4,
  /*
   Training, scoring, fusion or evaluation failed.
   */
  SF_STATUS_TRAINING = 5,
  /*
   File system error.
   */
  SF_STATUS_IO = 6,
  /*
   An internal panic was caught.
   */
  SF_STATUS_PANIC = 7,
} SfStatus;

/*
 A trained classifier.
 */
typedef struct SfModel SfModel;

/*
 The result of a full experiment run.
 */
typedef struct SfReport SfReport;

/*
 Row-major matrix of per-class probabilities.
 */
typedef struct SfScores SfScores;

/*
 A loaded data table.
 */
typedef struct SfTable SfTable;

/*
 Percentages in `[0, 100]`.
 */
typedef struct SfMetrics {
  double accuracy;
  double precision;
  double recall;
  double f1;
} SfMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message describing the last failure on this thread, or null if none.
 The pointer stays valid until the next failing call on the thread.
 */
const char *sf_last_error_message(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *sf_version(void);

/*
 Releases a string returned by this library.

 # Safety
 `s` must come from this library and not have been freed.
 */
void sf_string_free(char *s);

/*
 Copies a row-major `rows x cols` matrix into a new score handle. Each
 row must be a probability vector (entries in [0, 1], summing to 1).

 # Safety
 `data` must point to `rows * cols` readable doubles; `out` must be
 writable.
 */
enum SfStatus sf_scores_new(const double *data,
                            size_t rows,
                            size_t cols,
                            struct SfScores **out_scores);

/*
 # Safety
 `scores` must be a live handle or null.
 */
void sf_scores_free(struct SfScores *scores);

/*
 # Safety
 `scores` must be a live handle.
 */
enum SfStatus sf_scores_shape(const struct SfScores *scores, size_t *rows, size_t *cols);

/*
 Copies the scores row-major into `dest`, which holds `len` doubles
 (exactly rows * cols).

 # Safety
 `scores` must be a live handle; `dest` must hold `len` doubles.
 */
enum SfStatus sf_scores_copy(const struct SfScores *scores, double *dest, size_t len);

/*
 `w1 * a + w2 * b` with `w2 = 1 - w1`.

 # Safety
 `a`, `b` must be live handles; `out_scores` must be writable.
 */
enum SfStatus sf_fuse(const struct SfScores *a,
                      const struct SfScores *b,
                      double w1,
                      struct SfScores **out_scores);

/*
 Writes the per-row argmax class (lowest index on ties) into `labels`,
 which holds `len` entries (exactly the row count).

 # Safety
 `scores` must be a live handle; `labels` must hold `len` entries.
 */
enum SfStatus sf_decide(const struct SfScores *scores, size_t *labels, size_t len);

/*
 Searches the 19-point weight grid (w1 = 0.95 ... 0.05) for the most
 accurate fusion of `a` and `b` against `truth`; earlier grid points win
 ties. Accuracy is a fraction in [0, 1].

 # Safety
 `a`, `b` must be live handles; `truth` must hold `n` labels.
 */
enum SfStatus sf_grid_search(const struct SfScores *a,
                             const struct SfScores *b,
                             const size_t *truth,
                             size_t n,
                             double *best_w1,
                             double *best_accuracy);

/*
 Accuracy, precision, recall and F1 from labels. Two classes use macro
 averaging, more use support-weighted averaging.

 # Safety
 `truth` and `pred` must hold `n` labels each; `out_metrics` writable.
 */
enum SfStatus sf_metrics(const size_t *truth,
                         const size_t *pred,
                         size_t n,
                         size_t class_count,
                         struct SfMetrics *out_metrics);

/*
 Macro-averaged binary metrics from confusion cells (class 1 positive).

 # Safety
 `out_metrics` must be writable.
 */
enum SfStatus sf_binary_metrics(uint64_t tp,
                                uint64_t fp,
                                uint64_t fn_,
                                uint64_t tn,
                                struct SfMetrics *out_metrics);

/*
 ROC-AUC in [0, 1]: the class-1 column for two classes, else the
 one-vs-rest mean over classes present in `truth`.

 # Safety
 `scores` must be a live handle; `truth` must hold `n` labels.
 */
enum SfStatus sf_roc_auc(const struct SfScores *scores, const size_t *truth, size_t n, double *auc);

/*
 Loads a comma-separated data file with the built-in Cleveland schema
 (`?` marks missing cells).

 # Safety
 `path` must be a NUL-terminated string; `out_table` writable.
 */
enum SfStatus sf_table_load(const char *path, bool has_header, struct SfTable **out_table);

/*
 Row count and feature-column count (the target is not counted).

 # Safety
 `table` must be a live handle.
 */
enum SfStatus sf_table_shape(const struct SfTable *table, size_t *rows, size_t *cols);

/*
 # Safety
 `table` must be a live handle or null.
 */
void sf_table_free(struct SfTable *table);

/*
 Trains one learner on row-major features `x` (`rows x cols`) and labels
 `y` in `0..class_count`, with the tuned 80:20 settings for the implied
 task (two classes: binary, otherwise multiclass). Features are used as
 given; scale them beforehand if the learner needs it.

 # Safety
 `x` must hold `rows * cols` doubles, `y` `rows` labels; `out_model`
 writable.
 */
enum SfStatus sf_model_train(enum SfModelKind kind,
                             const double *x,
                             size_t rows,
                             size_t cols,
                             const size_t *y,
                             size_t class_count,
                             uint64_t seed,
                             struct SfModel **out_model);

/*
 # Safety
 `model` must be a live handle; `x` must hold `rows * cols` doubles;
 `out_scores` writable.
 */
enum SfStatus sf_model_predict_proba(const struct SfModel *model,
                                     const double *x,
                                     size_t rows,
                                     size_t cols,
                                     struct SfScores **out_scores);

/*
 # Safety
 `model` must be a live handle or null.
 */
void sf_model_free(struct SfModel *model);

/*
 Runs a full experiment described by a JSON run configuration (the same
 document the command-line tool accepts with `--config`). Nothing is
 written unless the report is passed to [`sf_report_write`].

 # Safety
 `config_json` must be a NUL-terminated string; `out_report` writable.
 */
enum SfStatus sf_run_experiment(const char *config_json, struct SfReport **out_report);

/*
 The report as pretty-printed JSON. Free the string with
 [`sf_string_free`].

 # Safety
 `report` must be a live handle; `out_json` writable.
 */
enum SfStatus sf_report_json(const struct SfReport *report, char **out_json);

/*
 Fused test accuracy (percent) of the `index`-th fusion pair.

 # Safety
 `report` must be a live handle; `accuracy` writable.
 */
enum SfStatus sf_report_fusion_accuracy(const struct SfReport *report,
                                        size_t index,
                                        double *accuracy);

/*
 Writes report.json, summary.md, summary.csv and ROC point files under
 `dir`, creating it if needed.

 # Safety
 `report` must be a live handle; `dir` a NUL-terminated string.
 */
enum SfStatus sf_report_write(const struct SfReport *report, const char *dir);

/*
 # Safety
 `report` must be a live handle or null.
 */
void sf_report_free(struct SfReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SCOREFUSION_H */
