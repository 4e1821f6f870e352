// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "graphfree/estimator.hpp"

namespace graphfree {

enum class gen_method { gfkd, deepinvg, randg };
gen_method gen_method_from_string(const std::string &s);
std::string to_string(gen_method m);

struct generation_config {
    gen_method method = gen_method::gfkd;
    double lambda_bn = 1.0;
    double lambda_ent = 1.0;
    double lr_struct = 1.0;
    double lr_feat = 0.01;
    int iterations = 2500;
    int n_samples = 1;               // structure samples per feature-gradient estimate
    int node_min = 0, node_max = 0;  // 0 means derive from the dataset average
    int graphs_per_batch = 32;
    int decay_period = 1000;         // divide both learning rates by 10 this often
    double init_edge_prob = 0.5;
    bool learn_diagonal = true;
    gen_feature_mode feature_mode = gen_feature_mode::free;
    bool feature_mode_auto = true;   // derive feature_mode from the dataset meta
    uint64_t seed = 1;
};

struct fake_graph_set {
    std::vector<graph> graphs;
    std::vector<int> labels;                       // sampled Y; mirrors graphs[i].label
    std::vector<std::vector<double>> theta;        // final theta per graph (upper triangle); empty for randg
    std::string provenance;                        // generation config hash
};

struct generation_log_row {
    int batch = 0;  // internal grouping; not a CSV column
    int iteration = 0;
    double objective = 0.0, ce_term = 0.0, bn_term = 0.0, entropy_term = 0.0;
};

// Node-count range actually used: config values when positive, otherwise
// [round(0.75*avg), round(1.25*avg)] of the dataset's average node count.
std::pair<int, int> resolve_node_range(const dataset_meta &meta, const generation_config &config);

// The inversion loop: per batch, sample balanced labels and node counts,
// initialize structure and feature parameters, run `iterations` steps of
// gradient descent (features first, then structures; both rates divided by 10
// every decay_period), then emit one sampled graph per parameter set.
// method=deepinvg freezes structures at one initial sample and drops the
// entropy term; method=randg delegates to randg_baseline.
fake_graph_set run_generation(const gnn_model &teacher, const dataset_meta &meta,
                              const generation_config &config, int count,
                              std::vector<generation_log_row> *log = nullptr,
                              const progress_fn &progress = nullptr);

// Uniformly random fake graphs: adjacency entries iid Bernoulli(0.5), features
// uniform in (0,1) (or random one-hot / degree-derived / constant per the
// dataset's feature mode), labels balanced round-robin.
fake_graph_set randg_baseline(const dataset_meta &meta, const generation_config &config, int count);

// JSONL persistence: one header line {"provenance", "method", "count"}, then
// one graph object per line with extra keys sampled_label and (when present)
// theta_upper.
void write_fake_set(const std::string &path, const fake_graph_set &set);
fake_graph_set read_fake_set(const std::string &path);

void write_generation_log(const std::string &path, const std::vector<generation_log_row> &rows);

std::string generation_provenance(const generation_config &config);

} // namespace graphfree
