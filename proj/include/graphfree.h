/* SPDX-License-Identifier: Apache-2.0 */
#ifndef GRAPHFREE_H
#define GRAPHFREE_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

/*
 * C interface to the graph-free distillation pipeline. A session owns one
 * layered run configuration (defaults, then loaded files, then overrides) and
 * the last error message. Commands read the session's configuration and write
 * their artifacts under its output directory. Sessions are not thread-safe;
 * use one per thread.
 */

typedef struct graphfree_session graphfree_session;

typedef enum graphfree_status {
    GRAPHFREE_OK = 0,
    GRAPHFREE_ERR_ARGUMENT = 1,     /* invalid argument or precondition */
    GRAPHFREE_ERR_CONFIG = 2,       /* bad configuration key, type, or value */
    GRAPHFREE_ERR_IO = 3,           /* file could not be opened/read/written */
    GRAPHFREE_ERR_FORMAT = 4,       /* file exists but does not parse */
    GRAPHFREE_ERR_NUMERIC = 5,      /* non-finite values or divergence */
    GRAPHFREE_ERR_CAPACITY = 6,     /* instance exceeds an enumeration cap */
    GRAPHFREE_ERR_CHECK_FAILED = 7, /* a verification check did not pass */
    GRAPHFREE_ERR_INTERNAL = 8      /* invariant violation inside the library */
} graphfree_status;

/* Never returns NULL; free with graphfree_session_free. */
graphfree_session *graphfree_session_new(void);
void graphfree_session_free(graphfree_session *session);

/* Message for the session's most recent failure; empty string when the last
 * call succeeded. Owned by the session, valid until the next call on it. */
const char *graphfree_error_message(const graphfree_session *session);

/* Library version string, e.g. "1.0.0". */
const char *graphfree_version(void);

/* Merges a JSON config file over the session's current configuration. */
graphfree_status graphfree_config_load_file(graphfree_session *session, const char *path);

/* Applies one "section.key=value" override. */
graphfree_status graphfree_config_set(graphfree_session *session, const char *assignment);

/* Copies the effective configuration (pretty-printed JSON) into buffer.
 * *needed receives the full length including the terminating NUL; the copy is
 * truncated if the buffer is smaller. buffer may be NULL when size is 0. */
graphfree_status graphfree_config_dump(const graphfree_session *session, char *buffer, size_t size,
                                       size_t *needed);

/* Pipeline commands. Artifacts land in <output.dir>/<stage>/. */
graphfree_status graphfree_run_train_teacher(graphfree_session *session);
graphfree_status graphfree_run_generate(graphfree_session *session);
graphfree_status graphfree_run_distill(graphfree_session *session);

/* Evaluates the configured checkpoint on the configured split; *accuracy may
 * be NULL when only the artifacts are wanted. */
graphfree_status graphfree_run_eval(graphfree_session *session, double *accuracy);

/* Runs the estimator verification suite. *all_passed (may be NULL) receives
 * 1/0; a completed run with failing checks returns GRAPHFREE_ERR_CHECK_FAILED. */
graphfree_status graphfree_run_verify(graphfree_session *session, int *all_passed);

#ifdef __cplusplus
}
#endif

#endif /* GRAPHFREE_H */
