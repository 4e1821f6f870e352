// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "graphfree/matrix.hpp"
#include "graphfree/rng.hpp"

namespace graphfree {

// Parameter clamp bound; log edge probabilities stay finite within it.
inline constexpr double k_theta_clamp = 30.0;

// Independent-Bernoulli distribution over adjacencies: P(a_ij = 1) =
// sigmoid(theta_ij). theta is stored as a full n x n matrix; when undirected,
// only the upper triangle (including the diagonal) is authoritative and the
// lower triangle mirrors it. With learn_diagonal false the diagonal is frozen
// at probability 0 (self-loops never sampled, no free diagonal parameters).
struct structure_params {
    matrix theta;
    int n = 0;
    bool directed = false;
    bool learn_diagonal = true;
};

structure_params make_structure(int n, bool directed, double theta_init = 0.0, bool learn_diagonal = true);

// n^2 if directed else n(n+1)/2 (the distribution's parameter count; the
// diagonal freeze flag is an optimization-time restriction, not a change of n).
long param_count(int n, bool directed);

// Number of optimizable entries under the diagonal flag.
long free_entry_count(const structure_params &params);

// Visits each free entry once: row-major, j >= i when undirected.
template <typename Fn> void for_each_free_entry(const structure_params &params, Fn &&fn) {
    for (int i = 0; i < params.n; ++i) {
        for (int j = params.directed ? 0 : i; j < params.n; ++j) {
            if (i == j && !params.learn_diagonal) continue;
            fn(i, j);
        }
    }
}

// a*sigmoid(theta) + (1-a)*sigmoid(-theta).
double edge_prob(double theta_ij, int a_ij);

// Each free entry drawn independently with P(a=1) = sigmoid(theta); undirected
// entries mirrored; frozen diagonals forced to 0.
matrix sample_structure(const structure_params &params, rng &r);

// One uniform draw u per free entry shared by both branches:
// a_plus = 1[u > sigmoid(-theta)], a_minus = 1[u < sigmoid(theta)]. Both are
// marginally distributed as the structure distribution.
struct antithetic_sample {
    matrix u;        // mirrored like theta; 0.5 at frozen diagonals
    matrix a_plus;
    matrix a_minus;
};
antithetic_sample antithetic_pair(const structure_params &params, rng &r);

// Sum over free entries of log edge_prob. Adjacency entries at frozen
// diagonals must be 0.
double structure_log_prob(const structure_params &params, const matrix &adjacency);

// Clamps every entry of theta to [-bound, bound], mirroring when undirected.
void clamp_theta(structure_params &params, double bound = k_theta_clamp);

// Applies one gradient-descent step on the free entries and re-clamps.
void theta_step(structure_params &params, const matrix &grad, double lr);

// Row-major upper triangle including the diagonal (undirected serialization);
// full row-major matrix when directed.
std::vector<double> theta_flat(const structure_params &params);

} // namespace graphfree
