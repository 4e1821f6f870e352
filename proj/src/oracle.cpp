// SPDX-License-Identifier: Apache-2.0
#include "graphfree/oracle.hpp"

#include <cmath>

namespace graphfree {

namespace {

struct free_entries {
    std::vector<std::pair<int, int>> idx;
};

free_entries list_free(const structure_params &params, long cap, const char *who) {
    free_entries fe;
    for_each_free_entry(params, [&](int i, int j) { fe.idx.emplace_back(i, j); });
    if (static_cast<long>(fe.idx.size()) > cap)
        fail(errc::capacity, std::string(who) + ": " + std::to_string(fe.idx.size()) +
                                 " free entries exceed the enumeration cap of " + std::to_string(cap));
    return fe;
}

// Walks all 2^k assignments, calling visit(adjacency, probability).
template <typename Fn>
void enumerate_assignments(const structure_params &params, const free_entries &fe, Fn &&visit) {
    const size_t k = fe.idx.size();
    for (uint64_t mask = 0; mask < (uint64_t{1} << k); ++mask) {
        matrix a(params.n, params.n);
        double p = 1.0;
        for (size_t b = 0; b < k; ++b) {
            const auto [i, j] = fe.idx[b];
            const int bit = (mask >> b) & 1u;
            p *= edge_prob(params.theta(i, j), bit);
            if (bit) {
                a(i, j) = 1.0;
                if (!params.directed) a(j, i) = 1.0;
            }
        }
        visit(a, p);
    }
}

} // namespace

double exact_expected_loss(const objective &obj, const feature_params &feats,
                           const structure_params &params, int label) {
    free_entries fe = list_free(params, 20, "exact_expected_loss");
    double total = 0.0;
    enumerate_assignments(params, fe, [&](const matrix &a, double p) {
        total += p * obj.eval({&a}, {label}, feats, false).total;
    });
    return total;
}

matrix exact_structure_grad(const objective &obj, const feature_params &feats,
                            const structure_params &params, int label) {
    free_entries fe = list_free(params, 20, "exact_structure_grad");
    matrix grad(params.n, params.n);
    enumerate_assignments(params, fe, [&](const matrix &a, double p) {
        const double loss = obj.eval({&a}, {label}, feats, false).total;
        for (const auto &[i, j] : fe.idx) {
            const double g = p * (a(i, j) - sigmoid(params.theta(i, j))) * loss;
            grad(i, j) += g;
            if (!params.directed && i != j) grad(j, i) += g;
        }
    });
    return grad;
}

matrix finite_diff_theta_grad(const objective &obj, const feature_params &feats,
                              const structure_params &params, int label, double step) {
    if (step <= 0.0) fail(errc::argument, "finite_diff_theta_grad: step must be positive");
    free_entries fe = list_free(params, 20, "finite_diff_theta_grad");
    matrix grad(params.n, params.n);
    for (const auto &[i, j] : fe.idx) {
        structure_params p = params;
        auto set = [&p, i = i, j = j](double v) {
            p.theta(i, j) = v;
            if (!p.directed) p.theta(j, i) = v;
        };
        const double base = params.theta(i, j);
        set(base + step);
        const double hi = exact_expected_loss(obj, feats, p, label);
        set(base - step);
        const double lo = exact_expected_loss(obj, feats, p, label);
        const double g = (hi - lo) / (2.0 * step);
        grad(i, j) = g;
        if (!params.directed) grad(j, i) = g;
    }
    return grad;
}

matrix finite_diff_feature_grad(const objective &obj, const feature_params &feats,
                                const structure_params &params, int label, double step) {
    if (step <= 0.0) fail(errc::argument, "finite_diff_feature_grad: step must be positive");
    if (feats.mode == gen_feature_mode::degree || feats.mode == gen_feature_mode::constant)
        return matrix();
    list_free(params, 20, "finite_diff_feature_grad");
    matrix grad(feats.values.rows(), feats.values.cols());
    feature_params probe = feats;
    for (int i = 0; i < grad.rows(); ++i) {
        for (int j = 0; j < grad.cols(); ++j) {
            const double base = feats.values(i, j);
            probe.values(i, j) = base + step;
            const double hi = exact_expected_loss(obj, probe, params, label);
            probe.values(i, j) = base - step;
            const double lo = exact_expected_loss(obj, probe, params, label);
            probe.values(i, j) = base;
            grad(i, j) = (hi - lo) / (2.0 * step);
        }
    }
    return grad;
}

matrix exact_feature_grad(const objective &obj, const feature_params &feats,
                          const structure_params &params, int label) {
    if (feats.mode == gen_feature_mode::degree || feats.mode == gen_feature_mode::constant)
        return matrix();
    free_entries fe = list_free(params, 20, "exact_feature_grad");
    matrix grad(feats.values.rows(), feats.values.cols());
    enumerate_assignments(params, fe, [&](const matrix &a, double p) {
        objective_eval ev = obj.eval({&a}, {label}, feats, true);
        add_inplace(grad, ev.feature_grad, p);
    });
    return grad;
}

enumeration_report estimator_bias_test(const objective &obj, const feature_params &feats,
                                       const structure_params &params, int label, long n_draws,
                                       uint64_t seed) {
    if (n_draws < 10000)
        fail(errc::argument, "estimator_bias_test: n_draws must be at least 10^4 for a meaningful report");
    free_entries fe = list_free(params, 10, "estimator_bias_test");

    enumeration_report rep;
    rep.n_draws = n_draws;
    rep.exact_expected_loss = exact_expected_loss(obj, feats, params, label);
    rep.exact_theta_grad = exact_structure_grad(obj, feats, params, label);

    const size_t k = fe.idx.size();
    std::vector<double> mean(k, 0.0), m2(k, 0.0);
    rng r(seed);
    for (long d = 0; d < n_draws; ++d) {
        matrix g = estimate_structure_grad(obj, feats, params, label, r);
        for (size_t b = 0; b < k; ++b) {
            const double x = g(fe.idx[b].first, fe.idx[b].second);
            const double delta = x - mean[b];
            mean[b] += delta / (d + 1);
            m2[b] += delta * (x - mean[b]);
        }
    }

    rep.mc_mean = matrix(params.n, params.n);
    rep.mc_std_err = matrix(params.n, params.n);
    rep.max_z_score = 0.0;
    for (size_t b = 0; b < k; ++b) {
        const auto [i, j] = fe.idx[b];
        const double se = n_draws > 1 ? std::sqrt(m2[b] / (n_draws - 1) / n_draws) : 0.0;
        rep.mc_mean(i, j) = mean[b];
        rep.mc_std_err(i, j) = se;
        if (!params.directed) {
            rep.mc_mean(j, i) = mean[b];
            rep.mc_std_err(j, i) = se;
        }
        const double diff = std::fabs(mean[b] - rep.exact_theta_grad(i, j));
        double z;
        if (se > 0.0) z = diff / se;
        // A spread-free estimator is either exactly right (constant objective,
        // saturated parameters) or definitely broken; 1e-9 separates
        // enumeration roundoff from any real gradient scale.
        else z = diff <= 1e-9 ? 0.0 : 1e300;
        rep.max_z_score = std::max(rep.max_z_score, z);
    }
    return rep;
}

} // namespace graphfree
