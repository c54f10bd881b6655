#ifndef TOKENFLOW_H
#define TOKENFLOW_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Which kind of resource a workitem lives on.
 */
typedef enum TfResource {
  TF_RESOURCE_WORKLIST = 0,
  TF_RESOURCE_SERVICE = 1,
} TfResource;

typedef enum TfStatus {
  TF_STATUS_OK = 0,
  TF_STATUS_NULL_ARGUMENT = 1,
  TF_STATUS_INVALID_UTF8 = 2,
  TF_STATUS_INVALID_ARGUMENT = 3,
  TF_STATUS_COMPILATION_FAILED = 4,
  TF_STATUS_UNKNOWN_MODEL = 5,
  TF_STATUS_UNKNOWN_INSTANCE = 6,
  TF_STATUS_UNKNOWN_WORKITEM = 7,
  TF_STATUS_BAD_INPUT = 8,
  TF_STATUS_LEDGER_REJECTION = 9,
  TF_STATUS_IO = 10,
  TF_STATUS_INTERNAL = 11,
  TF_STATUS_PANIC = 12,
} TfStatus;

/**
 * Opaque engine handle: one simulated ledger plus an artifact repository.
 */
typedef struct TfEngine TfEngine;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Opens (creating if needed) the repository at `repo_dir` and starts an
 * engine on a fresh ledger.
 *
 * # Safety
 * `repo_dir` must be a valid C string and `out` a valid pointer.
 */
enum TfStatus tf_engine_new(const char *repo_dir, struct TfEngine **out);

/**
 * # Safety
 * `e` must come from [`tf_engine_new`] and not be used afterwards.
 */
void tf_engine_free(struct TfEngine *e);

/**
 * Compiles and deploys a BPMN document; writes the model hash.
 *
 * # Safety
 * Pointers must be valid; `out_hash` receives a string to free.
 */
enum TfStatus tf_deploy_model(const struct TfEngine *e, const char *bpmn, char **out_hash);

/**
 * Starts an instance of a deployed model; writes its address.
 *
 * # Safety
 * Pointers must be valid; `out_address` receives a string to free.
 */
enum TfStatus tf_instantiate(const struct TfEngine *e, const char *hash, char **out_address);

/**
 * Writes the JSON state view of a process instance.
 *
 * # Safety
 * Pointers must be valid; `out_json` receives a string to free.
 */
enum TfStatus tf_instance_state(const struct TfEngine *e, const char *process, char **out_json);

/**
 * Checks in workitem `id` on a worklist or service bridge. `inputs_json`
 * is an object keyed by import parameter name or a positional array and
 * may be null when the task imports nothing. Writes the receipt as JSON.
 *
 * # Safety
 * Pointers must be valid; `out_json` receives a string to free.
 */
enum TfStatus tf_execute_task(const struct TfEngine *e,
                              enum TfResource kind,
                              const char *resource,
                              uint64_t id,
                              const char *inputs_json,
                              char **out_json);

/**
 * Writes notifications with sequence number at least `since` as a JSON array.
 *
 * # Safety
 * Pointers must be valid; `out_json` receives a string to free.
 */
enum TfStatus tf_notifications(const struct TfEngine *e, uint64_t since, char **out_json);

/**
 * Message of the last failed call on this thread, or null. Valid until
 * the next call on the same thread.
 */
const char *tf_last_error_message(void);

/**
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void tf_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TOKENFLOW_H */
