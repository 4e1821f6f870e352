// SPDX-License-Identifier: Apache-2.0
// Command-line driver. All work happens inside the shared library; this file
// only parses arguments, forwards configuration, and reports errors.
#include <graphfree.h>

#include <CLI11.hpp>

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

namespace {

struct session_deleter {
    void operator()(graphfree_session *s) const { graphfree_session_free(s); }
};
using session_ptr = std::unique_ptr<graphfree_session, session_deleter>;

// Applies --config and --set in precedence order; returns 0 on success.
int apply_config(graphfree_session *session, const std::string &config_file,
                 const std::vector<std::string> &sets, bool verbose) {
    if (!config_file.empty()) {
        if (graphfree_config_load_file(session, config_file.c_str()) != GRAPHFREE_OK) {
            std::fprintf(stderr, "error: %s\n", graphfree_error_message(session));
            return 1;
        }
    }
    for (const std::string &s : sets) {
        if (graphfree_config_set(session, s.c_str()) != GRAPHFREE_OK) {
            std::fprintf(stderr, "error: %s\n", graphfree_error_message(session));
            return 1;
        }
    }
    if (verbose && graphfree_config_set(session, "output.verbose=true") != GRAPHFREE_OK) {
        std::fprintf(stderr, "error: %s\n", graphfree_error_message(session));
        return 1;
    }
    return 0;
}

int report(graphfree_session *session, graphfree_status status) {
    if (status == GRAPHFREE_OK) return 0;
    std::fprintf(stderr, "error: %s\n", graphfree_error_message(session));
    return static_cast<int>(status);
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Train graph networks, synthesize fake graphs from a frozen teacher, and "
                 "distill students without the training data."};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(graphfree_version()));

    std::string config_file;
    std::vector<std::string> sets;
    bool verbose = false;
    app.add_option("-c,--config", config_file, "JSON configuration file")
        ->check(CLI::ExistingFile);
    app.add_option("-s,--set", sets, "Override one value, e.g. --set teacher.epochs=10")
        ->take_all();
    app.add_flag("-v,--verbose", verbose, "Print progress lines to stderr");

    CLI::App *train = app.add_subcommand("train-teacher", "Train a teacher on a TU-format dataset");
    CLI::App *generate = app.add_subcommand("generate", "Synthesize fake graphs from a teacher");
    CLI::App *distill = app.add_subcommand("distill", "Distill a student from a teacher");
    CLI::App *eval = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset split");
    CLI::App *verify = app.add_subcommand("verify", "Check the gradient estimator against oracles");
    for (CLI::App *sub : {train, generate, distill, eval, verify}) sub->fallthrough();

    CLI11_PARSE(app, argc, argv);

    session_ptr session(graphfree_session_new());
    if (int rc = apply_config(session.get(), config_file, sets, verbose); rc != 0) return rc;

    if (train->parsed()) return report(session.get(), graphfree_run_train_teacher(session.get()));
    if (generate->parsed()) return report(session.get(), graphfree_run_generate(session.get()));
    if (distill->parsed()) return report(session.get(), graphfree_run_distill(session.get()));
    if (eval->parsed()) {
        double acc = 0.0;
        graphfree_status status = graphfree_run_eval(session.get(), &acc);
        if (status == GRAPHFREE_OK) std::printf("accuracy %.6f\n", acc);
        return report(session.get(), status);
    }
    if (verify->parsed()) {
        int ok = 0;
        graphfree_status status = graphfree_run_verify(session.get(), &ok);
        std::printf("verification %s\n", ok ? "passed" : "failed");
        if (status == GRAPHFREE_ERR_CHECK_FAILED) return static_cast<int>(status);
        return report(session.get(), status);
    }
    return 1;
}
