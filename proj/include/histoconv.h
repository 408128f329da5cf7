/* C interface to the histoconv toolkit.
 *
 * Every function returns an hc_status; 0 is success and nonzero codes match
 * the CLI exit codes. On failure hc_last_error() returns a message for the
 * calling thread. Objects come back through opaque handles that must be
 * released with the matching *_free function; strings returned through char**
 * out-parameters must be released with hc_string_free.
 */
#ifndef HISTOCONV_H
#define HISTOCONV_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hc_status {
  HC_OK = 0,
  HC_ERROR_INTERNAL = 1,
  HC_ERROR_CONFIG = 2,
  HC_ERROR_DATA = 3,
  HC_ERROR_NUMERIC = 4
} hc_status;

/* Message for the most recent failure on this thread; empty string if none. */
const char* hc_last_error(void);

const char* hc_version(void);

void hc_string_free(char* s);

/* ---- corpus index ---- */

typedef struct hc_index hc_index;

hc_status hc_index_build(const char* root, hc_index** out);
hc_status hc_index_load(const char* path, hc_index** out);
hc_status hc_index_save(const hc_index* index, const char* path);
size_t hc_index_size(const hc_index* index);
size_t hc_index_patient_count(const hc_index* index);
/* Census-layout count table as text. */
hc_status hc_index_summary(const hc_index* index, char** text);
void hc_index_free(hc_index* index);

/* ---- patient-exclusive split ---- */

typedef struct hc_split hc_split;

hc_status hc_split_create(const hc_index* index, double train_fraction, uint64_t seed,
                          hc_split** out);
hc_status hc_split_load(const char* path, hc_split** out);
hc_status hc_split_save(const hc_split* split, const char* path);
/* Rejects overlaps, unknown patients, and unassigned patients. */
hc_status hc_split_validate(const hc_index* index, const hc_split* split);
size_t hc_split_train_patient_count(const hc_split* split);
size_t hc_split_test_patient_count(const hc_split* split);
void hc_split_free(hc_split* split);

/* ---- trained model ---- */

typedef struct hc_model hc_model;

hc_status hc_model_load(const char* checkpoint_path, hc_model** out);
size_t hc_model_classes(const hc_model* model);
/* Decodes a PNG, resizes it to the model input, and runs one eval-mode
 * forward pass. probs may be NULL; otherwise it receives min(probs_len,
 * class count) probabilities. */
hc_status hc_model_predict_png(hc_model* model, const char* png_path, size_t* class_index,
                               double* probs, size_t probs_len);
void hc_model_free(hc_model* model);

/* ---- CLI-level commands ----
 *
 * File-to-file operations; each writes its outputs plus a manifest and
 * returns a printable report through report_text (may be NULL if the caller
 * does not want it).
 */

typedef void (*hc_progress_fn)(const char* line, void* user);

hc_status hc_cmd_ingest(const char* root, const char* out_index_path, char** report_text);

hc_status hc_cmd_split(const char* index_path, double train_fraction, uint64_t seed,
                       const char* out_split_path, char** report_text);

/* run_config_json is the complete run document: the training configuration
 * plus "index", "split" and "out_dir". */
hc_status hc_cmd_train(const char* run_config_json, hc_progress_fn progress, void* user,
                       char** report_text);

hc_status hc_cmd_eval(const char* checkpoint_path, const char* index_path,
                      const char* split_path, const char* side, const char* out_dir,
                      char** report_text);

/* optimizers_csv like "sgd,adam", lrs_csv like "1e-2,1e-3". */
hc_status hc_cmd_sweep(const char* run_config_json, const char* optimizers_csv,
                       const char* lrs_csv, hc_progress_fn progress, void* user,
                       char** report_text);

/* augment_json holds the augment config object; NULL means defaults. */
hc_status hc_cmd_augment_preview(const char* image_path, uint64_t seed, size_t count,
                                 const char* out_dir, const char* augment_json,
                                 char** report_text);

#ifdef __cplusplus
}
#endif

#endif /* HISTOCONV_H */
