// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "graphfree/config.hpp"
#include "graphfree/distill.hpp"
#include "graphfree/generate.hpp"
#include "graphfree/oracle.hpp"

namespace graphfree {

// Dataset loaded, feature-encoded, and split per the config's dataset section.
struct prepared_dataset {
    dataset_meta meta;
    dataset_split split;
    long clamped = 0;  // nodes whose degree hit the encoding's top bucket
};
prepared_dataset prepare_dataset(const run_config &cfg);

// Sidecar written next to a teacher checkpoint; everything downstream commands
// need that the checkpoint itself does not carry.
struct teacher_meta {
    dataset_meta meta;
    std::string arch;
    std::string readout;
    double split_ratio = 0.7;
    uint64_t split_seed = 1;
    int train_size = 0;
    int test_size = 0;
};
void write_meta_json(const std::string &path, const teacher_meta &tm);
teacher_meta read_meta_json(const std::string &path);

// Commands write into <output.dir>/<stage>/ and drop a config.frozen copy
// alongside their outputs. Errors propagate as graphfree::error.
void cmd_train_teacher(const run_config &cfg, const progress_fn &progress = nullptr);
void cmd_generate(const run_config &cfg, const progress_fn &progress = nullptr);
void cmd_distill(const run_config &cfg, const progress_fn &progress = nullptr);
double cmd_eval(const run_config &cfg, const progress_fn &progress = nullptr);
bool cmd_verify(const run_config &cfg, const progress_fn &progress = nullptr);

// One instance of the verification grid: bias z-test of the structure
// estimator against enumeration, oracle theta-gradient self-consistency, and
// the feature-gradient finite-difference check.
struct verify_instance_result {
    std::string name;
    double max_z = 0.0;
    double theta_fd_rel = 0.0;    // exact vs finite-difference theta gradient
    double feature_fd_rel = 0.0;  // exact vs finite-difference feature gradient
    bool passed = false;
};

// The fixed grid: n in {2,3} x feature mode in {free, one_hot} x two draws,
// plus two diagonal-learning variants at n=2. Thresholds: max_z < 3,
// theta_fd_rel <= 1e-8, feature_fd_rel <= 1e-5.
std::vector<verify_instance_result> run_verification_suite(long n_draws, uint64_t seed,
                                                           const progress_fn &progress = nullptr);

} // namespace graphfree
