#ifndef WORDCLOSURE_H
#define WORDCLOSURE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum WcStatus {
  WC_STATUS_OK = 0,
  WC_STATUS_NULL_POINTER = 1,
  WC_STATUS_INVALID_UTF8 = 2,
  // Malformed pair record or bracket tree.
  WC_STATUS_PARSE = 3,
  // Bad configuration, missing resource or invalid pair.
  WC_STATUS_CONFIG = 4,
  WC_STATUS_IO = 5,
  WC_STATUS_PANIC = 6,
} WcStatus;

typedef enum WcSide {
  WC_SIDE_SOURCE = 0,
  WC_SIDE_FOLLOWUP = 1,
} WcSide;

// Opaque checker handle.
typedef struct WcChecker WcChecker;

// Opaque verdict handle.
typedef struct WcVerdict WcVerdict;

// Precision, recall and F1 in [0, 1]. An undefined ratio (zero
// denominator) reads 0 and sets the matching flag.
typedef struct WcPrf {
  double precision;
  double recall;
  double f1;
  bool precision_undefined;
  bool recall_undefined;
  bool f1_undefined;
} WcPrf;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Builds a checker. `config` is 1 to 5. `lang` is "en-zh" or "zh-en" and
// defaults to en-zh when null. Resource paths may be null. A NaN
// `threshold` keeps the per-transformation defaults for the language.
//
// String arguments must be null or NUL-terminated. `out` must be writable.
enum WcStatus wc_checker_new(uint8_t config,
                             const char *lang,
                             const char *synonyms_path,
                             const char *vectors_path,
                             const char *stopwords_path,
                             double threshold,
                             struct WcChecker **out);

// `checker` must come from [`wc_checker_new`] and not be freed twice.
void wc_checker_free(struct WcChecker *checker);

// Checks one pair record and writes the verdict as JSON.
//
// `checker` must be live, `pair_json` NUL-terminated and `out` writable.
enum WcStatus wc_check_pair_json(const struct WcChecker *checker,
                                 const char *pair_json,
                                 char **out);

// Checks one pair record and returns a verdict handle.
//
// `checker` must be live, `pair_json` NUL-terminated and `out` writable.
enum WcStatus wc_check_pair(const struct WcChecker *checker,
                            const char *pair_json,
                            struct WcVerdict **out);

// `verdict` must be null or live.
bool wc_verdict_is_violation(const struct WcVerdict *verdict);

// `verdict` must be null or live.
size_t wc_verdict_failure_count(const struct WcVerdict *verdict);

// Copies up to `cap` flagged token indices of one translation into `buf`
// in ascending order and returns the total count. Pass a null `buf` to
// query the count.
//
// `verdict` must be null or live. `buf` must be null or hold `cap` slots.
size_t wc_verdict_flagged(const struct WcVerdict *verdict,
                          enum WcSide side,
                          size_t *buf,
                          size_t cap);

// `verdict` must come from [`wc_check_pair`] and not be freed twice.
void wc_verdict_free(struct WcVerdict *verdict);

// Refines one pair record and writes its word closures as a JSON array.
// No similarity resources are needed.
//
// `pair_json` must be NUL-terminated, `lang` null or NUL-terminated and
// `out` writable.
enum WcStatus wc_closures_json(const char *pair_json, const char *lang, char **out);

// Precision, recall and F1 from raw counts.
struct WcPrf wc_prf(uint64_t tp, uint64_t fp, uint64_t fn_);

// Message of the last failed call on this thread, empty after a success.
// Valid until the next call on the same thread.
const char *wc_last_error_message(void);

// `s` must be null or a string returned by this library.
void wc_string_free(char *s);

const char *wc_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WORDCLOSURE_H */
