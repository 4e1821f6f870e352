// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "graphfree/estimator.hpp"

namespace graphfree {

// Exact ground truth on tiny instances by enumerating every binary assignment
// of the free structure entries (capacity-capped), used to validate the
// sampling estimators. All oracles take a single-graph instance.

// Sum over assignments a of P(a) * objective_total(a).
double exact_expected_loss(const objective &obj, const feature_params &feats,
                           const structure_params &params, int label);

// d/dtheta_ij of the enumeration sum via dP/dtheta_ij = P * (a_ij - sigmoid(theta_ij)).
matrix exact_structure_grad(const objective &obj, const feature_params &feats,
                            const structure_params &params, int label);

// Central finite differences of exact_expected_loss in theta; oracle
// self-consistency check for exact_structure_grad.
matrix finite_diff_theta_grad(const objective &obj, const feature_params &feats,
                              const structure_params &params, int label, double step);

// Central finite differences of exact_expected_loss w.r.t. each feature
// parameter entry (empty in parameter-free modes).
matrix finite_diff_feature_grad(const objective &obj, const feature_params &feats,
                                const structure_params &params, int label, double step);

// Exact expectation of the per-sample feature gradient under enumeration
// weighting (the sampling-free value of estimate_feature_grad).
matrix exact_feature_grad(const objective &obj, const feature_params &feats,
                          const structure_params &params, int label);

struct enumeration_report {
    double exact_expected_loss = 0.0;
    matrix exact_theta_grad;
    matrix mc_mean;
    matrix mc_std_err;
    long n_draws = 0;
    double max_z_score = 0.0;
};

// Runs estimate_structure_grad n_draws times and reports per-coordinate
// z-scores of (mc_mean - exact)/std_err over the free entries plus their max.
enumeration_report estimator_bias_test(const objective &obj, const feature_params &feats,
                                       const structure_params &params, int label, long n_draws,
                                       uint64_t seed);

} // namespace graphfree
