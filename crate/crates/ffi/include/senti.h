#ifndef SENTI_H
#define SENTI_H

#include <stddef.h>
#include <stdint.h>

typedef enum SentiLabel {
  SENTI_LABEL_POSITIVE = 0,
  SENTI_LABEL_NEUTRAL = 1,
  SENTI_LABEL_NEGATIVE = 2,
} SentiLabel;

/*
 Status codes. `SENTI_STATUS_OK` is zero; everything else is an error.
 */
typedef enum SentiStatus {
  SENTI_STATUS_OK = 0,
  SENTI_STATUS_NULL_ARGUMENT = 1,
  SENTI_STATUS_INVALID_UTF8 = 2,
  SENTI_STATUS_IO = 3,
  SENTI_STATUS_PARSE = 4,
  SENTI_STATUS_SCHEMA_MISMATCH = 5,
  SENTI_STATUS_INVALID_INPUT = 6,
  SENTI_STATUS_LEXICON_MISMATCH = 7,
  SENTI_STATUS_DEGENERATE = 8,
  SENTI_STATUS_PANIC = 99,
} SentiStatus;

typedef enum SentiAgreement {
  SENTI_AGREEMENT_POOR = 0,
  SENTI_AGREEMENT_SLIGHT = 1,
  SENTI_AGREEMENT_FAIR = 2,
  SENTI_AGREEMENT_MODERATE = 3,
  SENTI_AGREEMENT_SUBSTANTIAL = 4,
  SENTI_AGREEMENT_ALMOST_PERFECT = 5,
} SentiAgreement;

/*
 Opaque sentiment lexicon.
 */
typedef struct SentiLexicon SentiLexicon;

/*
 Opaque trained model.
 */
typedef struct SentiModel SentiModel;

/*
 Opaque list of detected speech segments.
 */
typedef struct SentiSegments SentiSegments;

typedef struct SentiKappa {
  double p_bar;
  double p_e;
  double kappa;
  enum SentiAgreement agreement;
} SentiKappa;

/*
 Mirrors the VAD settings; see [`senti_vad_default`].
 */
typedef struct SentiVadConfig {
  uint32_t frame_ms;
  double energy_threshold_db;
  uint32_t min_speech_ms;
  uint32_t min_silence_ms;
  uint32_t hangover_frames;
} SentiVadConfig;

/*
 Message for the last failed call on this thread; empty after a success.
 Valid until the next `senti_*` call on the same thread.
 */
const char *senti_last_error_message(void);

/*
 Static name of a label: "positive", "neutral" or "negative".
 */
const char *senti_label_name(enum SentiLabel label);

/*
 # Safety
 `out` must be NULL or writable.
 */
enum SentiStatus senti_lexicon_builtin(struct SentiLexicon **out);

/*
 Loads a `word<TAB>score` file; `negators_path` may be NULL.

 # Safety
 Path arguments must be NULL or valid C strings.
 */
enum SentiStatus senti_lexicon_load(const char *tsv_path,
                                    const char *negators_path,
                                    struct SentiLexicon **out);

/*
 # Safety
 `lexicon` must be NULL or a handle from this library, freed at most once.
 */
void senti_lexicon_free(struct SentiLexicon *lexicon);

/*
 # Safety
 `path` must be NULL or a valid C string.
 */
enum SentiStatus senti_model_load(const char *path, struct SentiModel **out);

/*
 # Safety
 `model` must be NULL or a handle from this library, freed at most once.
 */
void senti_model_free(struct SentiModel *model);

/*
 Classifies one statement. `out_score` may be NULL.

 Fails with `SENTI_STATUS_LEXICON_MISMATCH` when the lexicon is not the one
 the model was trained with.

 # Safety
 Handles must come from this library; `text` must be a valid C string.
 */
enum SentiStatus senti_classify_text(const struct SentiModel *model,
                                     const struct SentiLexicon *lexicon,
                                     const char *text,
                                     enum SentiLabel *out_label,
                                     double *out_score);

/*
 Fleiss' kappa over an `n_items x 3` row-major count matrix (columns
 positive, neutral, negative). Every row must sum to the same rater count
 (at least 2). Returns `SENTI_STATUS_DEGENERATE` when kappa is undefined.

 # Safety
 `counts` must point to `3 * n_items` readable values.
 */
enum SentiStatus senti_fleiss_kappa(const size_t *counts, size_t n_items, struct SentiKappa *out);

struct SentiVadConfig senti_vad_default(void);

/*
 Runs the energy VAD over 16 kHz mono samples. `config` may be NULL for
 defaults. Release the result with [`senti_segments_free`].

 # Safety
 `samples` must point to `n_samples` readable values (may be NULL if zero).
 */
enum SentiStatus senti_detect_segments(const int16_t *samples,
                                       size_t n_samples,
                                       const struct SentiVadConfig *config,
                                       struct SentiSegments **out);

/*
 Number of segments; 0 for NULL.

 # Safety
 `segments` must be NULL or a live handle.
 */
size_t senti_segments_len(const struct SentiSegments *segments);

/*
 Start and end (seconds) of segment `index`.

 # Safety
 `segments` must be NULL or a live handle.
 */
enum SentiStatus senti_segments_get(const struct SentiSegments *segments,
                                    size_t index,
                                    double *out_start_s,
                                    double *out_end_s);

/*
 # Safety
 `segments` must be NULL or a handle from this library, freed at most once.
 */
void senti_segments_free(struct SentiSegments *segments);

#endif  /* SENTI_H */
