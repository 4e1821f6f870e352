// SPDX-License-Identifier: Apache-2.0
#include "graphfree.h"

#include "graphfree/pipeline.hpp"

#include <cstring>
#include <new>

struct graphfree_session {
    graphfree::run_config cfg;
    std::string last_error;
};

namespace {

graphfree_status status_of(graphfree::errc code) {
    switch (code) {
    case graphfree::errc::argument: return GRAPHFREE_ERR_ARGUMENT;
    case graphfree::errc::config: return GRAPHFREE_ERR_CONFIG;
    case graphfree::errc::io: return GRAPHFREE_ERR_IO;
    case graphfree::errc::format: return GRAPHFREE_ERR_FORMAT;
    case graphfree::errc::numeric: return GRAPHFREE_ERR_NUMERIC;
    case graphfree::errc::capacity: return GRAPHFREE_ERR_CAPACITY;
    case graphfree::errc::check_failed: return GRAPHFREE_ERR_CHECK_FAILED;
    case graphfree::errc::internal: return GRAPHFREE_ERR_INTERNAL;
    }
    return GRAPHFREE_ERR_INTERNAL;
}

template <typename Fn> graphfree_status guarded(graphfree_session *session, Fn &&fn) {
    if (!session) return GRAPHFREE_ERR_ARGUMENT;
    session->last_error.clear();
    try {
        return fn();
    } catch (const graphfree::error &e) {
        session->last_error = e.what();
        return status_of(e.code());
    } catch (const std::bad_alloc &) {
        session->last_error = "out of memory";
        return GRAPHFREE_ERR_INTERNAL;
    } catch (const std::exception &e) {
        session->last_error = e.what();
        return GRAPHFREE_ERR_INTERNAL;
    }
}

} // namespace

extern "C" {

graphfree_session *graphfree_session_new(void) { return new graphfree_session(); }

void graphfree_session_free(graphfree_session *session) { delete session; }

const char *graphfree_error_message(const graphfree_session *session) {
    return session ? session->last_error.c_str() : "null session";
}

const char *graphfree_version(void) { return GRAPHFREE_VERSION_STRING; }

graphfree_status graphfree_config_load_file(graphfree_session *session, const char *path) {
    return guarded(session, [&]() {
        if (!path) graphfree::fail(graphfree::errc::argument, "path is null");
        session->cfg.load_file(path);
        return GRAPHFREE_OK;
    });
}

graphfree_status graphfree_config_set(graphfree_session *session, const char *assignment) {
    return guarded(session, [&]() {
        if (!assignment) graphfree::fail(graphfree::errc::argument, "assignment is null");
        session->cfg.set(assignment);
        return GRAPHFREE_OK;
    });
}

graphfree_status graphfree_config_dump(const graphfree_session *session, char *buffer, size_t size,
                                       size_t *needed) {
    if (!session) return GRAPHFREE_ERR_ARGUMENT;
    const std::string text = session->cfg.frozen();
    if (needed) *needed = text.size() + 1;
    if (buffer && size > 0) {
        const size_t n = std::min(size - 1, text.size());
        std::memcpy(buffer, text.data(), n);
        buffer[n] = '\0';
    }
    return GRAPHFREE_OK;
}

graphfree_status graphfree_run_train_teacher(graphfree_session *session) {
    return guarded(session, [&]() {
        graphfree::cmd_train_teacher(session->cfg);
        return GRAPHFREE_OK;
    });
}

graphfree_status graphfree_run_generate(graphfree_session *session) {
    return guarded(session, [&]() {
        graphfree::cmd_generate(session->cfg);
        return GRAPHFREE_OK;
    });
}

graphfree_status graphfree_run_distill(graphfree_session *session) {
    return guarded(session, [&]() {
        graphfree::cmd_distill(session->cfg);
        return GRAPHFREE_OK;
    });
}

graphfree_status graphfree_run_eval(graphfree_session *session, double *accuracy) {
    return guarded(session, [&]() {
        const double acc = graphfree::cmd_eval(session->cfg);
        if (accuracy) *accuracy = acc;
        return GRAPHFREE_OK;
    });
}

graphfree_status graphfree_run_verify(graphfree_session *session, int *all_passed) {
    return guarded(session, [&]() {
        const bool ok = graphfree::cmd_verify(session->cfg);
        if (all_passed) *all_passed = ok ? 1 : 0;
        if (!ok)
            graphfree::fail(graphfree::errc::check_failed,
                            "verification suite reported failing checks");
        return GRAPHFREE_OK;
    });
}

} // extern "C"
