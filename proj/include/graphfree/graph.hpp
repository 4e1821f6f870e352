// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "graphfree/matrix.hpp"

namespace graphfree {

// Node feature encodings. `raw` means features were supplied externally
// (already numeric); the others are derived encodings.
enum class feature_mode { raw, one_hot_label, degree_one_hot, degree_scalar, constant };

feature_mode feature_mode_from_string(const std::string &s);
std::string to_string(feature_mode m);

struct graph {
    int node_count = 0;
    matrix features;   // node_count x feature_dim (0 cols until encoded)
    matrix adjacency;  // node_count x node_count, entries in {0,1}
    int label = -1;    // contiguous class id
    bool directed = false;
    std::vector<int> node_labels;  // raw per-node tags; empty if dataset has none
};

struct dataset_meta {
    std::string name;
    int num_classes = 0;
    feature_mode mode = feature_mode::raw;
    int feature_dim = 0;
    double avg_node_count = 0.0;
    int max_degree = 0;                   // over the dataset, used by degree encodings
    bool directed = false;
    std::vector<int> original_labels;     // original_labels[class_id] = raw label value
    std::vector<int> node_label_vocab;    // sorted distinct node tags (one-hot order)
};

struct dataset_split {
    std::vector<graph> train;
    std::vector<graph> test;
};

struct meta_overrides {
    std::optional<std::string> name;  // dataset file prefix; default: inferred from *_A.txt
    std::optional<bool> directed;     // default: false
};

// Out-degree per node (row sums). For undirected graphs rows and columns agree.
std::vector<int> compute_degrees(const matrix &adjacency);

// Reads the four-file text layout: <name>_A.txt ("i, j" pairs, node ids
// 1-based and global), <name>_graph_indicator.txt, <name>_graph_labels.txt,
// <name>_node_labels.txt (optional). Labels are remapped to contiguous ids in
// ascending raw order; undirected edge lists may carry both directions and
// duplicates, which collapse into the 0/1 adjacency.
std::vector<graph> load_tu_dataset(const std::string &dir, dataset_meta &meta,
                                   const meta_overrides &overrides = {});

// Writes the same layout (both edge directions for undirected graphs).
void write_tu_dataset(const std::string &dir, const std::string &name,
                      const std::vector<graph> &graphs, const dataset_meta &meta);

// Populates graph.features according to `mode`, updating meta.feature_dim and
// filling meta.node_label_vocab / meta.max_degree when not already set.
// Degrees beyond meta.max_degree clamp to the top bucket; the count of clamped
// nodes is added to *clamped when non-null.
void encode_features(std::vector<graph> &graphs, feature_mode mode, dataset_meta &meta,
                     long *clamped = nullptr);

// Stratified split: per class, round(ratio * count) graphs go to train,
// clamped so each side keeps at least one graph of every class with >= 2
// members. Shuffle order depends only on `seed`.
dataset_split split_dataset(const std::vector<graph> &graphs, double ratio, uint64_t seed);

// JSONL serialization: one object per line with keys n, edges (undirected:
// each pair once with i <= j), features (row-major), label, plus any extras
// already present in the object for fake-graph sets.
void write_graphs_jsonl(const std::string &path, const std::vector<graph> &graphs);
std::vector<graph> read_graphs_jsonl(const std::string &path);

} // namespace graphfree
