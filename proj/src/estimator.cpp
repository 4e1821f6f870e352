// SPDX-License-Identifier: Apache-2.0
#include "graphfree/estimator.hpp"

#include <atomic>

namespace graphfree {

namespace {
std::atomic<bool> g_negate{false};

void check_batch(const std::vector<structure_params> &params, const std::vector<int> &labels) {
    if (params.size() != labels.size())
        fail(errc::argument, "structure gradient: params/labels size mismatch");
}
} // namespace

void structure_grad_test_negate(bool enable) { g_negate.store(enable, std::memory_order_relaxed); }

matrix estimate_feature_grad(const objective &obj, const feature_params &feats,
                             const std::vector<structure_params> &params, const std::vector<int> &labels,
                             int n_samples, rng &r, objective_eval *last_eval) {
    if (n_samples < 1) fail(errc::argument, "estimate_feature_grad: n_samples must be >= 1");
    check_batch(params, labels);
    if (params.empty()) fail(errc::argument, "estimate_feature_grad: empty batch");
    if (feats.mode == gen_feature_mode::degree || feats.mode == gen_feature_mode::constant)
        return matrix();

    matrix accum(feats.values.rows(), feats.values.cols());
    for (int s = 0; s < n_samples; ++s) {
        std::vector<matrix> sampled;
        sampled.reserve(params.size());
        for (const auto &p : params) sampled.push_back(sample_structure(p, r));
        std::vector<const matrix *> adjacency;
        adjacency.reserve(sampled.size());
        for (const auto &a : sampled) adjacency.push_back(&a);
        try {
            objective_eval ev = obj.eval(adjacency, labels, feats, true);
            add_inplace(accum, ev.feature_grad);
            if (last_eval && s == n_samples - 1) *last_eval = std::move(ev);
        } catch (const error &e) {
            if (e.code() == errc::numeric)
                fail(errc::numeric, "feature gradient sample " + std::to_string(s) + ": " + e.what());
            throw;
        }
    }
    scale_inplace(accum, 1.0 / n_samples);
    return accum;
}

std::vector<matrix> batch_structure_grads(const objective &obj, const feature_params &feats,
                                          const std::vector<structure_params> &params,
                                          const std::vector<int> &labels, rng &r) {
    check_batch(params, labels);
    if (params.empty()) return {};

    std::vector<antithetic_sample> pairs;
    pairs.reserve(params.size());
    for (const auto &p : params) pairs.push_back(antithetic_pair(p, r));

    std::vector<const matrix *> plus, minus;
    for (const auto &s : pairs) {
        plus.push_back(&s.a_plus);
        minus.push_back(&s.a_minus);
    }
    objective_eval ev_plus = obj.eval(plus, labels, feats, false);
    objective_eval ev_minus = obj.eval(minus, labels, feats, false);

    const double sign = g_negate.load(std::memory_order_relaxed) ? -1.0 : 1.0;
    std::vector<matrix> grads;
    grads.reserve(params.size());
    for (size_t g = 0; g < params.size(); ++g) {
        const double coeff = sign * (ev_plus.per_graph[g] - ev_minus.per_graph[g]);
        if (!std::isfinite(coeff)) fail(errc::numeric, "structure gradient: non-finite loss coefficient");
        matrix grad(params[g].n, params[g].n);
        for_each_free_entry(params[g], [&](int i, int j) {
            double v = coeff * (pairs[g].u(i, j) - 0.5);
            grad(i, j) = v;
            if (!params[g].directed) grad(j, i) = v;
        });
        grads.push_back(std::move(grad));
    }
    return grads;
}

matrix estimate_structure_grad(const objective &obj, const feature_params &feats,
                               const structure_params &params, int label, rng &r) {
    return batch_structure_grads(obj, feats, {params}, {label}, r)[0];
}

matrix onesided_structure_grad(const objective &obj, const feature_params &feats,
                               const structure_params &params, int label, rng &r) {
    matrix u(params.n, params.n, 0.5);
    matrix a(params.n, params.n);
    for_each_free_entry(params, [&](int i, int j) {
        const double draw = r.uniform01();
        const double v = draw < sigmoid(params.theta(i, j)) ? 1.0 : 0.0;
        u(i, j) = draw;
        a(i, j) = v;
        if (!params.directed) {
            u(j, i) = draw;
            a(j, i) = v;
        }
    });
    objective_eval ev = obj.eval({&a}, {label}, feats, false);
    const double coeff = ev.per_graph[0];
    matrix grad(params.n, params.n);
    for_each_free_entry(params, [&](int i, int j) {
        double v = coeff * (1.0 - 2.0 * u(i, j));
        grad(i, j) = v;
        if (!params.directed) grad(j, i) = v;
    });
    return grad;
}

} // namespace graphfree
