// SPDX-License-Identifier: Apache-2.0
#include "graphfree/structure.hpp"

#include <algorithm>
#include <cmath>

namespace graphfree {

structure_params make_structure(int n, bool directed, double theta_init, bool learn_diagonal) {
    if (n < 1) fail(errc::argument, "make_structure: n must be positive");
    structure_params p;
    p.n = n;
    p.directed = directed;
    p.learn_diagonal = learn_diagonal;
    p.theta = matrix(n, n, theta_init);
    if (!learn_diagonal)
        for (int i = 0; i < n; ++i) p.theta(i, i) = -k_theta_clamp;
    return p;
}

long param_count(int n, bool directed) {
    if (n < 1) fail(errc::argument, "param_count: n must be positive");
    long ln = n;
    return directed ? ln * ln : ln * (ln + 1) / 2;
}

long free_entry_count(const structure_params &params) {
    long c = param_count(params.n, params.directed);
    if (!params.learn_diagonal) c -= params.n;
    return c;
}

double edge_prob(double theta_ij, int a_ij) {
    return a_ij ? sigmoid(theta_ij) : sigmoid(-theta_ij);
}

matrix sample_structure(const structure_params &params, rng &r) {
    matrix a(params.n, params.n);
    for_each_free_entry(params, [&](int i, int j) {
        double v = r.uniform01() < sigmoid(params.theta(i, j)) ? 1.0 : 0.0;
        a(i, j) = v;
        if (!params.directed) a(j, i) = v;
    });
    return a;
}

antithetic_sample antithetic_pair(const structure_params &params, rng &r) {
    antithetic_sample s;
    s.u = matrix(params.n, params.n, 0.5);
    s.a_plus = matrix(params.n, params.n);
    s.a_minus = matrix(params.n, params.n);
    for_each_free_entry(params, [&](int i, int j) {
        const double u = r.uniform01();
        const double th = params.theta(i, j);
        const double plus = u > sigmoid(-th) ? 1.0 : 0.0;
        const double minus = u < sigmoid(th) ? 1.0 : 0.0;
        s.u(i, j) = u;
        s.a_plus(i, j) = plus;
        s.a_minus(i, j) = minus;
        if (!params.directed) {
            s.u(j, i) = u;
            s.a_plus(j, i) = plus;
            s.a_minus(j, i) = minus;
        }
    });
    return s;
}

double structure_log_prob(const structure_params &params, const matrix &adjacency) {
    if (adjacency.rows() != params.n || adjacency.cols() != params.n)
        fail(errc::argument, "structure_log_prob: adjacency shape mismatch");
    if (!params.learn_diagonal) {
        for (int i = 0; i < params.n; ++i)
            if (adjacency(i, i) != 0.0)
                fail(errc::argument, "structure_log_prob: self-loop present with frozen diagonal");
    }
    double lp = 0.0;
    for_each_free_entry(params, [&](int i, int j) {
        const double th = params.theta(i, j);
        lp += adjacency(i, j) != 0.0 ? log_sigmoid(th) : log_sigmoid(-th);
    });
    return lp;
}

void clamp_theta(structure_params &params, double bound) {
    for_each_free_entry(params, [&](int i, int j) {
        double v = std::clamp(params.theta(i, j), -bound, bound);
        params.theta(i, j) = v;
        if (!params.directed) params.theta(j, i) = v;
    });
}

void theta_step(structure_params &params, const matrix &grad, double lr) {
    if (grad.rows() != params.n || grad.cols() != params.n)
        fail(errc::argument, "theta_step: gradient shape mismatch");
    for_each_free_entry(params, [&](int i, int j) {
        double v = params.theta(i, j) - lr * grad(i, j);
        params.theta(i, j) = v;
        if (!params.directed) params.theta(j, i) = v;
    });
    clamp_theta(params);
}

std::vector<double> theta_flat(const structure_params &params) {
    std::vector<double> out;
    if (params.directed) {
        out.assign(params.theta.data(), params.theta.data() + params.theta.size());
    } else {
        out.reserve(param_count(params.n, false));
        for (int i = 0; i < params.n; ++i)
            for (int j = i; j < params.n; ++j) out.push_back(params.theta(i, j));
    }
    return out;
}

} // namespace graphfree
