// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "graphfree/objective.hpp"
#include "graphfree/structure.hpp"

namespace graphfree {

// Monte Carlo gradient of the objective w.r.t. feature parameters: the mean
// over n_samples iid structure batches of the exact feature gradient at each
// sample. Returns an empty matrix in parameter-free feature modes. When
// last_eval is non-null it receives the objective evaluation of the final
// sampled batch (diagnostics for loggers; gradients unaffected).
matrix estimate_feature_grad(const objective &obj, const feature_params &feats,
                             const std::vector<structure_params> &params, const std::vector<int> &labels,
                             int n_samples, rng &r, objective_eval *last_eval = nullptr);

// Forward-only antithetic estimate of d(objective)/d(theta) for one graph:
// one antithetic pair, scalar losses c_plus/c_minus from the two branches,
// gradient = (c_plus - c_minus) * (u - 0.5) entrywise over free entries.
// Calls no backward pass.
matrix estimate_structure_grad(const objective &obj, const feature_params &feats,
                               const structure_params &params, int label, rng &r);

// Batched variant: one antithetic pair per graph, both branch batches pushed
// through the teacher together; each graph's coefficient is its own per-graph
// loss from objective_eval::per_graph.
std::vector<matrix> batch_structure_grads(const objective &obj, const feature_params &feats,
                                          const std::vector<structure_params> &params,
                                          const std::vector<int> &labels, rng &r);

// One-sided score-function form, c(a)*(1-2u) with a = 1[u < sigmoid(theta)];
// unbiased but higher-variance, kept as the comparison baseline for the
// antithetic estimator's variance-reduction property.
matrix onesided_structure_grad(const objective &obj, const feature_params &feats,
                               const structure_params &params, int label, rng &r);

// Test hook: negates every structure gradient estimate while enabled. Exists
// so the verification suite can prove it detects a faulty estimator.
void structure_grad_test_negate(bool enable);

} // namespace graphfree
