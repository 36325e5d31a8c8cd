/* C interface to the US-JEPA training and evaluation pipeline.
 *
 * Usage: open a run from a JSON config file (or literal), optionally apply
 * key overrides, execute one of the batch modes, then read the JSON summary.
 * All functions returning usj_status report USJ_OK on success; the error
 * message for the last failure on a handle is kept until the next call.
 *
 * Modes: synth-data, preprocess, pretrain, probe, fewshot, corrupt-sweep,
 *        mask-viz, report.
 */
#ifndef USJEPA_H
#define USJEPA_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum usj_status {
  USJ_OK = 0,
  USJ_ERR_CONFIG = 1,  /* invalid config, override, or mode */
  USJ_ERR_RUNTIME = 2, /* execution failure */
  USJ_ERR_IO = 3       /* file system / format failure */
} usj_status;

typedef struct usj_run usj_run; /* opaque run handle */

const char* usj_version(void);

/* Parses and schema-validates a config file. On success *out_run owns the
 * handle; free it with usj_run_close. On failure *out_run is NULL. */
usj_status usj_run_open(const char* config_path, usj_run** out_run);

/* Same, from a JSON string (handy for embedding and tests). */
usj_status usj_run_open_json(const char* config_json, usj_run** out_run);

/* Dotted-key override, e.g. ("run.seed", "9"), ("model.teacher",
 * "snapshot:ckpt.usjc"), ("masking.usrc", "off"), ("loss.kind", "l1"). */
usj_status usj_run_set(usj_run* run, const char* key, const char* value);

/* Executes one mode. Artifacts land under the configured output directory. */
usj_status usj_run_execute(usj_run* run, const char* mode);

/* JSON summary of the last successful execute; "" before the first one.
 * The pointer stays valid until the next call on this handle. */
const char* usj_run_summary(const usj_run* run);

/* Message for the last failed call on this handle; "" if none. */
const char* usj_run_last_error(const usj_run* run);

void usj_run_close(usj_run* run);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* USJEPA_H */
