// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "graphfree/graph.hpp"
#include "graphfree/matrix.hpp"
#include "graphfree/rng.hpp"

namespace graphfree {

using progress_fn = std::function<void(const std::string &)>;

enum class arch_kind { gcn, gin };
enum class readout_kind { sum, mean };

// BatchNorm statistics source for a forward pass. `batch` normalizes with the
// current batch's statistics and leaves the model untouched; callers that are
// training pass the resulting trace to update_running_stats afterwards.
// `running` normalizes with the stored running statistics (inference).
enum class bn_mode { batch, running };

struct arch_spec {
    arch_kind kind = arch_kind::gcn;
    int layers = 0;
    int width = 0;
};

// Parses "GCN-5-64" / "GIN-3-32" style strings.
arch_spec parse_arch(const std::string &s);
std::string to_string(const arch_spec &a);
readout_kind readout_from_string(const std::string &s);

struct conv_layer {
    matrix weight;             // in_dim x out_dim
    std::vector<double> bias;  // out_dim
};

struct bn_layer {
    std::vector<double> gamma, beta;
    std::vector<double> running_mean, running_var;
    double momentum = 0.1;
    double eps = 1e-5;
};

struct gnn_model {
    arch_kind kind = arch_kind::gcn;
    readout_kind pool = readout_kind::sum;
    int input_dim = 0, hidden_dim = 0, num_classes = 0;
    double gin_eps = 0.0;  // the (1+eps) self weight; fixed 0 by construction
    std::vector<conv_layer> conv;  // one BN per conv layer
    std::vector<bn_layer> bn;
    matrix cls_weight;             // hidden_dim x num_classes
    std::vector<double> cls_bias;  // num_classes

    int layer_count() const { return static_cast<int>(conv.size()); }
};

// Glorot-uniform weights, zero biases, identity BN (gamma 1, beta 0, running
// mean 0 / var 1). Draw order is fixed so a seed pins the initialization.
gnn_model make_model(const arch_spec &spec, int input_dim, int num_classes, readout_kind pool, rng &r);

// A forward input: stacked node features plus per-graph adjacencies. Borrowed
// pointers; valid only for the duration of the call.
struct batch_view {
    const matrix *features = nullptr;       // total_nodes x input_dim
    std::vector<const matrix *> adjacency;  // one n_g x n_g matrix per graph
    std::vector<int> offsets;               // size graphs+1; row ranges into features
};

// Owning stack of a graph batch (features copied into one matrix).
struct stacked_batch {
    matrix features;
    std::vector<const matrix *> adjacency;
    std::vector<int> offsets;
    batch_view view() const { return batch_view{&features, adjacency, offsets}; }
};
stacked_batch stack_graphs(const graph *graphs, size_t count);

struct layer_trace {
    matrix agg;               // aggregated input, total_nodes x in_dim
    matrix normed;            // (pre_bn - mean)/sqrt(var + eps)
    matrix post;              // relu(gamma*normed + beta)
    std::vector<double> mean, var;  // statistics used (biased var); batch mode only
};

struct forward_trace {
    bn_mode mode = bn_mode::batch;
    std::vector<int> offsets;
    matrix input;              // copy of the stacked input features
    std::vector<matrix> prop;  // per-graph propagation matrix (GCN: normalized A+I; GIN: A+(1+eps)I)
    std::vector<layer_trace> layers;
    matrix pooled;  // graphs x hidden_dim
    matrix logits;  // graphs x num_classes
};

// GCN layer: A_hat*X*W + b with A_hat = D^{-1/2}(A+I)D^{-1/2}, D the degree
// matrix of A+I. GIN layer: ((1+eps)*x_i + sum_{j in N(i)} x_j)*W + b. Each
// conv is followed by BN then ReLU; readout pools the last layer's node
// embeddings per graph; a single linear classifier maps to logits.
forward_trace model_forward(const gnn_model &model, const batch_view &batch, bn_mode mode);

// Folds a batch-mode trace's statistics into the running stats:
// running = (1-momentum)*running + momentum*batch, with the variance update
// using the unbiased batch variance.
void update_running_stats(gnn_model &model, const forward_trace &trace);

struct model_grads {
    std::vector<matrix> conv_weight;
    std::vector<std::vector<double>> conv_bias;
    std::vector<std::vector<double>> bn_gamma, bn_beta;
    matrix cls_weight;
    std::vector<double> cls_bias;
    matrix input;  // gradient w.r.t. the stacked input features
};
model_grads make_zero_grads(const gnn_model &model, int total_nodes);

// Extra gradient injected directly on the batch statistics of each BN layer
// (d_loss/d_mean, d_loss/d_var per channel). Carries regularizers that are
// functions of the batch statistics themselves; empty vectors mean zero.
struct stat_grads {
    std::vector<std::vector<double>> d_mean, d_var;
};

// Exact reverse accumulation through classifier, readout, ReLU, BN (including
// the batch-statistics path when the trace was batch-mode) and conv layers.
// Increments the process-wide backward counter.
model_grads model_backward(const gnn_model &model, const forward_trace &trace, const matrix &dlogits,
                           const stat_grads *inject = nullptr);

// Process-wide count of model_backward invocations; lets tests assert that
// structure-gradient estimation is forward-only.
long backward_pass_count();
void reset_backward_pass_count();

// Mean over the batch of -log softmax(logits)[label].
double cross_entropy(const matrix &logits, const std::vector<int> &labels);
std::vector<double> per_graph_cross_entropy(const matrix &logits, const std::vector<int> &labels);
// d(mean cross entropy)/d logits = (softmax - onehot)/batch.
matrix cross_entropy_grad(const matrix &logits, const std::vector<int> &labels);
double accuracy(const matrix &logits, const std::vector<int> &labels);

// Fraction of argmax-correct predictions under eval-mode (running-stat) forwards.
double evaluate_accuracy(const gnn_model &model, const std::vector<graph> &graphs);

struct adam_state {
    double lr = 0.01, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    long t = 0;
    model_grads m, v;
    bool initialized = false;
};
// One Adam update; the effective rate is lr * lr_scale (lr_scale carries
// external decay schedules).
void adam_step(gnn_model &model, const model_grads &grads, adam_state &state, double lr_scale = 1.0);

struct teacher_train_config {
    int epochs = 400;
    int batch_size = 32;
    double lr = 0.01;
    double lr_decay = 0.5;     // multiplied into the rate every decay_period epochs
    int decay_period = 50;     // <= 0 disables the schedule
    double weight_decay = 0.0; // L2 on conv and classifier weights; BN and biases exempt
    bool keep_best = false;    // restore the highest-test-accuracy epoch after training
    uint64_t seed = 1;
};
struct epoch_metrics {
    int epoch = 0;
    double train_loss = 0.0;
    double test_acc = 0.0;
};
// Minimizes cross entropy on split.train with Adam, evaluating on split.test
// after each epoch. Aborts with a numeric error if the loss turns non-finite.
std::vector<epoch_metrics> train_teacher(gnn_model &model, const dataset_split &split,
                                         const teacher_train_config &config,
                                         const progress_fn &progress = nullptr);

// Versioned little-endian binary container: magic, format version, arch and
// readout tags, dimensions, then raw float64 blocks for every weight and
// running statistic. load(save(m)) is bit-exact.
std::vector<uint8_t> save_checkpoint(const gnn_model &model);
gnn_model load_checkpoint(const std::vector<uint8_t> &bytes);
void save_checkpoint_file(const gnn_model &model, const std::string &path);
gnn_model load_checkpoint_file(const std::string &path);

} // namespace graphfree
