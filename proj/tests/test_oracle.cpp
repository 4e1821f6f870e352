// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "graphfree/error.hpp"
#include "graphfree/oracle.hpp"

#include <cmath>
#include <memory>

using namespace graphfree;

namespace {

dataset_meta raw_meta(int dim, int classes, double avg) {
    dataset_meta m;
    m.name = "synthetic";
    m.num_classes = classes;
    m.feature_dim = dim;
    m.mode = feature_mode::raw;
    m.avg_node_count = avg;
    return m;
}

struct oracle_fixture {
    std::unique_ptr<gnn_model> teacher;
    dataset_meta meta;
    std::unique_ptr<objective> obj;
    feature_params feats;

    oracle_fixture(int n, uint64_t seed, double lambda_bn, bool zero_weights = false) {
        rng r(seed);
        meta = raw_meta(3, 2, n);
        teacher = std::make_unique<gnn_model>(
            make_model(parse_arch("GCN-1-4"), 3, 2, readout_kind::sum, r));
        if (zero_weights) {
            for (auto &c : teacher->conv) {
                c.weight = matrix(c.weight.rows(), c.weight.cols());
                std::fill(c.bias.begin(), c.bias.end(), 0.0);
            }
            teacher->cls_weight = matrix(teacher->cls_weight.rows(), teacher->cls_weight.cols());
            std::fill(teacher->cls_bias.begin(), teacher->cls_bias.end(), 0.0);
            for (auto &bn : teacher->bn) std::fill(bn.beta.begin(), bn.beta.end(), 0.0);
        } else {
            for (auto &bn : teacher->bn)
                for (size_t c = 0; c < bn.running_mean.size(); ++c) {
                    bn.running_mean[c] = 0.1 * r.normal();
                    bn.running_var[c] = std::exp(0.1 * r.normal());
                }
        }
        obj = std::make_unique<objective>(build_objective(
            *teacher, meta, gen_feature_mode::free, lambda_bn, 0.0, lambda_bn != 0.0, false));
        feats = init_feature_params(gen_feature_mode::free, n, 3, r);
    }
};

} // namespace

TEST_CASE("constant objective integrates to itself") {
    // Zero weights and biases force logits to zero, so every assignment costs
    // exactly log(2). The enumeration must return log(2): the probabilities
    // sum to one.
    oracle_fixture fx(3, 101, 0.0, true);
    structure_params params = make_structure(3, false, 0.0, true);
    rng shape(103);
    for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) params.theta(i, j) = params.theta(j, i) = shape.normal();

    const double e = exact_expected_loss(*fx.obj, fx.feats, params, 0);
    CHECK(e == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    // A constant integrand has zero gradient in theta.
    matrix g = exact_structure_grad(*fx.obj, fx.feats, params, 0);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(std::abs(g(i, j)) < 1e-12);
}

TEST_CASE("saturated parameters reduce to a point evaluation") {
    oracle_fixture fx(3, 105, 0.5);
    structure_params params = make_structure(3, false, 0.0, true);
    for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j)
            params.theta(i, j) = params.theta(j, i) = ((i + j) % 2 ? 20.0 : -20.0);

    rng r(107);
    matrix a = sample_structure(params, r);  // deterministic at this saturation
    const double point = fx.obj->eval({&a}, {1}, fx.feats, false).total;
    CHECK(exact_expected_loss(*fx.obj, fx.feats, params, 1) ==
          doctest::Approx(point).epsilon(1e-7));
}

TEST_CASE("two-point law for a single free entry") {
    oracle_fixture fx(2, 109, 0.5);
    structure_params params = make_structure(2, false, 0.0, false);  // only (0,1) free
    params.theta(0, 1) = params.theta(1, 0) = 0.6;

    matrix on(2, 2), off(2, 2);
    on(0, 1) = on(1, 0) = 1.0;
    const double c1 = fx.obj->eval({&on}, {1}, fx.feats, false).total;
    const double c0 = fx.obj->eval({&off}, {1}, fx.feats, false).total;
    const double s = sigmoid(0.6);

    CHECK(exact_expected_loss(*fx.obj, fx.feats, params, 1) ==
          doctest::Approx(s * c1 + (1 - s) * c0).epsilon(1e-12));

    matrix g = exact_structure_grad(*fx.obj, fx.feats, params, 1);
    CHECK(g(0, 1) == doctest::Approx(s * (1 - s) * (c1 - c0)).epsilon(1e-10));
    CHECK(g(1, 0) == g(0, 1));
    CHECK(g(0, 0) == 0.0);  // frozen diagonal carries no gradient
}

TEST_CASE("oracle self-consistency: analytic enumeration vs finite differences") {
    oracle_fixture fx(3, 111, 0.5);
    structure_params params = make_structure(3, false, 0.0, true);
    rng shape(113);
    for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j)
            params.theta(i, j) = params.theta(j, i) = 0.7 * shape.normal();

    matrix analytic = exact_structure_grad(*fx.obj, fx.feats, params, 1);
    matrix fd = finite_diff_theta_grad(*fx.obj, fx.feats, params, 1, 1e-6);
    double gap = 0.0, scale = 1e-12;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            gap = std::max(gap, std::abs(analytic(i, j) - fd(i, j)));
            scale = std::max({scale, std::abs(analytic(i, j)), std::abs(fd(i, j))});
        }
    CHECK(gap / scale < 1e-7);

    matrix fa = exact_feature_grad(*fx.obj, fx.feats, params, 1);
    matrix ff = finite_diff_feature_grad(*fx.obj, fx.feats, params, 1, 1e-6);
    gap = 0.0;
    scale = 1e-12;
    for (int i = 0; i < fa.rows(); ++i)
        for (int j = 0; j < fa.cols(); ++j) {
            gap = std::max(gap, std::abs(fa(i, j) - ff(i, j)));
            scale = std::max({scale, std::abs(fa(i, j)), std::abs(ff(i, j))});
        }
    CHECK(gap / scale < 1e-6);
}

TEST_CASE("bias test reports zero spread for a constant objective") {
    // Zero-weight teacher: both antithetic branches cost log(2), so every draw
    // estimates exactly 0, matching the exact gradient of a constant. Both the
    // standard errors and the z-scores must be identically zero.
    oracle_fixture fx(2, 115, 0.0, true);
    structure_params params = make_structure(2, false, 0.7, true);

    enumeration_report rep = estimator_bias_test(*fx.obj, fx.feats, params, 0, 10000, 117);
    CHECK(rep.max_z_score == 0.0);
    CHECK(rep.exact_expected_loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    for (int i = 0; i < 2; ++i)
        for (int j = i; j < 2; ++j) {
            CHECK(rep.mc_std_err(i, j) == 0.0);
            CHECK(rep.mc_mean(i, j) == 0.0);
        }
}

TEST_CASE("enumeration capacity and argument guards") {
    oracle_fixture fx(7, 119, 0.0);
    // n = 7 undirected with diagonal: 28 free entries, beyond the 2^20 cap.
    structure_params big = make_structure(7, false, 0.0, true);
    CHECK_THROWS_AS(exact_expected_loss(*fx.obj, fx.feats, big, 0), error);
    CHECK_THROWS_AS(exact_structure_grad(*fx.obj, fx.feats, big, 0), error);

    // The bias test has a tighter cap (10 entries): n = 5 with diagonal is 15.
    oracle_fixture fx5(5, 121, 0.0);
    structure_params mid = make_structure(5, false, 0.0, true);
    CHECK_THROWS_AS(estimator_bias_test(*fx5.obj, fx5.feats, mid, 0, 10000, 1), error);

    oracle_fixture fx2(2, 123, 0.0);
    structure_params small = make_structure(2, false, 0.0, true);
    CHECK_THROWS_AS(estimator_bias_test(*fx2.obj, fx2.feats, small, 0, 9999, 1), error);
    CHECK_THROWS_AS(finite_diff_theta_grad(*fx2.obj, fx2.feats, small, 0, 0.0), error);
    CHECK_THROWS_AS(finite_diff_feature_grad(*fx2.obj, fx2.feats, small, 0, -1.0), error);
}
