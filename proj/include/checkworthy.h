/*
 * checkworthy — hybrid check-worthiness estimation toolkit.
 *
 * C interface over the pipeline: open a handle from a JSON config file, run
 * stages, read back printable summaries. Handles are opaque; every function
 * returns a cw_status, and the numeric values double as CLI exit codes.
 *
 * cw_pipeline_open follows the sqlite convention: it allocates a handle even
 * when it fails (so the error message is retrievable) and the caller always
 * closes it. Returned strings are owned by the handle and stay valid until
 * the next call on that handle, or until cw_pipeline_close.
 */
#ifndef CHECKWORTHY_H
#define CHECKWORTHY_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cw_status {
  CW_OK = 0,
  CW_ERROR = 1,               /* parse/validation/config/backend failure */
  CW_ERROR_MISSING_INPUT = 2, /* a referenced input file does not exist */
  CW_ERROR_BAD_DATA = 3,      /* dimension mismatch or corrupt container */
  CW_ERROR_MISSING_MODEL = 4, /* a required model file does not exist */
  CW_ERROR_UNKNOWN_ID = 5     /* sentence id not found */
} cw_status;

typedef struct cw_pipeline cw_pipeline;

const char* cw_version(void);
const char* cw_status_name(cw_status status);

/* overrides: n_overrides strings of the form "dotted.key=value" applied to
 * the config document before validation; may be NULL when n_overrides is 0.
 * *out is never NULL on return (out of memory aside). */
cw_status cw_pipeline_open(const char* config_path, const char* const* overrides,
                           size_t n_overrides, cw_pipeline** out);
void cw_pipeline_close(cw_pipeline* pipeline);

/* Message of the last failed call on this handle; empty string if none. */
const char* cw_pipeline_last_error(const cw_pipeline* pipeline);
/* Printable summary of the last successful stage; empty string if none. */
const char* cw_pipeline_last_output(const cw_pipeline* pipeline);

/* Pipeline stages. Each writes its artifacts into the configured output
 * directory and communicates with the other stages only through files. */
cw_status cw_pipeline_extract(cw_pipeline* pipeline);
cw_status cw_pipeline_featurize(cw_pipeline* pipeline);
cw_status cw_pipeline_train(cw_pipeline* pipeline);
cw_status cw_pipeline_eval(cw_pipeline* pipeline);
cw_status cw_pipeline_predict(cw_pipeline* pipeline);
cw_status cw_pipeline_explain(cw_pipeline* pipeline, const char* sentence_id);

#ifdef __cplusplus
}
#endif

#endif /* CHECKWORTHY_H */
