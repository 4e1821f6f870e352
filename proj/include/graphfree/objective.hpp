// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "graphfree/graph.hpp"
#include "graphfree/matrix.hpp"
#include "graphfree/model.hpp"

namespace graphfree {

// How generated node features are parameterized. `free`: real-valued features
// learned directly. `one_hot`: logits omega learned, teacher sees
// row-softmax(omega). `degree` / `constant`: no feature parameters, features
// derive from each sampled structure (or are fixed).
enum class gen_feature_mode { free, one_hot, degree, constant };

gen_feature_mode gen_feature_mode_from_string(const std::string &s);
std::string to_string(gen_feature_mode m);
// The generation mode matching a dataset's feature encoding.
gen_feature_mode gen_mode_for(feature_mode m);

struct feature_params {
    gen_feature_mode mode = gen_feature_mode::free;
    matrix values;  // total_nodes x feature_dim; empty in degree/constant modes
};

// Sum over BN layers and channels of (batch_mean - running_mean)^2 +
// (batch_var - running_var)^2. Requires a batch-mode trace; the model's
// running statistics are the frozen targets.
double bn_regularizer(const forward_trace &trace, const gnn_model &teacher);

// Mean over rows of the entropy of row-softmax(omega).
double onehot_entropy(const matrix &omega);
// d(onehot_entropy)/d(omega): per row, -p_j*(log p_j + row_entropy)/rows.
matrix onehot_entropy_grad(const matrix &omega);

struct objective_eval {
    double total = 0.0;     // mean CE + lambda_bn*R_bn + lambda_ent*entropy
    double ce_mean = 0.0;
    double bn_term = 0.0;
    double ent_term = 0.0;
    // Per-graph scalar for structure coefficients: that graph's own
    // cross entropy plus lambda_bn * R_bn (adjacency-dependent parts only;
    // the entropy term is structure-independent and cancels antithetically).
    std::vector<double> per_graph;
    matrix feature_grad;  // d(total)/d(values); empty when unrequested or parameter-free
};

// The generation objective around a frozen teacher: evaluates the class loss
// plus priors on a batch of sampled adjacencies, exposing per-graph scalars
// (forward-only path) and feature gradients (one backward pass).
class objective {
  public:
    objective(const gnn_model *teacher, dataset_meta meta, double lambda_bn, double lambda_ent,
              bool use_bn, bool use_ent);

    // Features the teacher actually sees for this parameterization; in degree
    // and constant modes they are recomputed from the adjacencies.
    matrix effective_features(const std::vector<const matrix *> &adjacency,
                              const feature_params &feats) const;

    objective_eval eval(const std::vector<const matrix *> &adjacency, const std::vector<int> &labels,
                        const feature_params &feats, bool want_feature_grad) const;

    const gnn_model &teacher() const { return *teacher_; }
    const dataset_meta &meta() const { return meta_; }
    double lambda_bn() const { return use_bn_ ? lambda_bn_ : 0.0; }
    double lambda_ent() const { return use_ent_ ? lambda_ent_ : 0.0; }

  private:
    const gnn_model *teacher_;
    dataset_meta meta_;
    double lambda_bn_, lambda_ent_;
    bool use_bn_, use_ent_;
};

// Validates mode against the teacher's input width and the dataset meta.
// use_bn_reg false drops the BN prior (and with it the requirement that the
// teacher carries meaningful running statistics); use_ent_reg applies only in
// one-hot mode.
objective build_objective(const gnn_model &teacher, const dataset_meta &meta, gen_feature_mode mode,
                          double lambda_bn, double lambda_ent, bool use_bn_reg = true,
                          bool use_ent_reg = true);

// Fresh feature parameters for a batch totalling total_nodes rows (empty in
// degree/constant modes); entries standard normal.
feature_params init_feature_params(gen_feature_mode mode, int total_nodes, int feature_dim, rng &r);

} // namespace graphfree
