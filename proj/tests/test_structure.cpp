// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "graphfree/structure.hpp"
#include "graphfree/error.hpp"

#include <cmath>

using namespace graphfree;

TEST_CASE("parameter counting") {
    CHECK(param_count(3, false) == 6);
    CHECK(param_count(3, true) == 9);
    CHECK(param_count(1, false) == 1);

    structure_params p = make_structure(3, false);
    CHECK(free_entry_count(p) == 6);
    p.learn_diagonal = false;
    CHECK(free_entry_count(p) == 3);

    structure_params d = make_structure(3, true, 0.0, false);
    CHECK(free_entry_count(d) == 6);

    CHECK_THROWS_AS(make_structure(0, false), error);
}

TEST_CASE("make_structure initializes theta symmetrically") {
    structure_params p = make_structure(4, false, 1.25);
    CHECK(p.n == 4);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) CHECK(p.theta(i, j) == 1.25);

    // Frozen diagonals are pinned at the negative clamp (edge probability ~0).
    structure_params frozen = make_structure(4, false, 1.25, false);
    for (int i = 0; i < 4; ++i) CHECK(frozen.theta(i, i) == -k_theta_clamp);
}

TEST_CASE("sample_structure matches sigmoid(theta) marginals") {
    structure_params p = make_structure(2, false, 0.0, true);
    p.theta(0, 0) = -1.0;
    p.theta(0, 1) = p.theta(1, 0) = 2.0;
    p.theta(1, 1) = 0.5;

    rng r(31);
    const int draws = 40000;
    double on00 = 0, on01 = 0, on11 = 0;
    for (int k = 0; k < draws; ++k) {
        matrix a = sample_structure(p, r);
        CHECK(a(0, 1) == a(1, 0));  // mirrored
        on00 += a(0, 0);
        on01 += a(0, 1);
        on11 += a(1, 1);
    }
    CHECK(on00 / draws == doctest::Approx(sigmoid(-1.0)).epsilon(0.03));
    CHECK(on01 / draws == doctest::Approx(sigmoid(2.0)).epsilon(0.02));
    CHECK(on11 / draws == doctest::Approx(sigmoid(0.5)).epsilon(0.02));

    p.learn_diagonal = false;
    for (int k = 0; k < 50; ++k) {
        matrix a = sample_structure(p, r);
        CHECK(a(0, 0) == 0.0);
        CHECK(a(1, 1) == 0.0);
    }
}

TEST_CASE("antithetic_pair branches reconstruct from the shared uniforms") {
    structure_params p = make_structure(3, false, 0.0, true);
    rng shape(33);
    for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) p.theta(i, j) = p.theta(j, i) = shape.normal();

    rng r(35);
    const int draws = 30000;
    matrix freq_plus(3, 3), freq_minus(3, 3);
    for (int k = 0; k < draws; ++k) {
        antithetic_sample s = antithetic_pair(p, r);
        for (int i = 0; i < 3; ++i)
            for (int j = i; j < 3; ++j) {
                // Definition check entrywise.
                CHECK(s.a_plus(i, j) == (s.u(i, j) > sigmoid(-p.theta(i, j)) ? 1.0 : 0.0));
                CHECK(s.a_minus(i, j) == (s.u(i, j) < sigmoid(p.theta(i, j)) ? 1.0 : 0.0));
                CHECK(s.a_plus(i, j) == s.a_plus(j, i));
                CHECK(s.a_minus(i, j) == s.a_minus(j, i));
                freq_plus(i, j) += s.a_plus(i, j);
                freq_minus(i, j) += s.a_minus(i, j);
            }
    }
    // Both branches are marginally Bernoulli(sigmoid(theta)).
    for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) {
            const double target = sigmoid(p.theta(i, j));
            CHECK(freq_plus(i, j) / draws == doctest::Approx(target).epsilon(0.05));
            CHECK(freq_minus(i, j) / draws == doctest::Approx(target).epsilon(0.05));
        }

    structure_params frozen = make_structure(2, false, 0.7, false);
    antithetic_sample s = antithetic_pair(frozen, r);
    CHECK(s.u(0, 0) == 0.5);
    CHECK(s.a_plus(1, 1) == 0.0);
    CHECK(s.a_minus(0, 0) == 0.0);
}

TEST_CASE("structure_log_prob is the product law over free entries") {
    structure_params p = make_structure(2, false, 0.0, true);
    p.theta(0, 0) = 0.4;
    p.theta(0, 1) = p.theta(1, 0) = -1.1;
    p.theta(1, 1) = 2.0;

    matrix a(2, 2);
    a(0, 0) = 1.0;
    a(0, 1) = a(1, 0) = 0.0;
    a(1, 1) = 1.0;
    const double expect =
        log_sigmoid(0.4) + log_sigmoid(1.1) + log_sigmoid(2.0);
    CHECK(structure_log_prob(p, a) == doctest::Approx(expect).epsilon(1e-12));

    // Frozen diagonal: diagonal entries contribute nothing, self-loops illegal.
    p.learn_diagonal = false;
    matrix b(2, 2);
    b(0, 1) = b(1, 0) = 1.0;
    CHECK(structure_log_prob(p, b) == doctest::Approx(log_sigmoid(-1.1)).epsilon(1e-12));
    b(0, 0) = 1.0;
    CHECK_THROWS_AS(structure_log_prob(p, b), error);

    matrix wrong(3, 3);
    CHECK_THROWS_AS(structure_log_prob(p, wrong), error);
}

TEST_CASE("theta_step descends, mirrors, and clamps") {
    structure_params p = make_structure(2, false, 0.0, true);
    matrix grad(2, 2);
    grad(0, 0) = 1.0;
    grad(0, 1) = -2.0;
    grad(1, 0) = 999.0;  // lower triangle ignored for undirected parameters
    grad(1, 1) = 0.0;

    theta_step(p, grad, 0.5);
    CHECK(p.theta(0, 0) == doctest::Approx(-0.5));
    CHECK(p.theta(0, 1) == doctest::Approx(1.0));
    CHECK(p.theta(1, 0) == doctest::Approx(1.0));  // mirrored from (0,1)
    CHECK(p.theta(1, 1) == doctest::Approx(0.0));

    // Large step hits the clamp.
    grad(0, 0) = -1e9;
    theta_step(p, grad, 1.0);
    CHECK(p.theta(0, 0) == k_theta_clamp);

    structure_params frozen = make_structure(2, false, 0.0, false);
    matrix g2(2, 2);
    g2(0, 0) = 5.0;
    g2(0, 1) = 1.0;
    theta_step(frozen, g2, 1.0);
    CHECK(frozen.theta(0, 0) == -k_theta_clamp);  // frozen diagonal untouched
    CHECK(frozen.theta(0, 1) == doctest::Approx(-1.0));

    matrix wrong(3, 3);
    CHECK_THROWS_AS(theta_step(p, wrong, 1.0), error);
}

TEST_CASE("theta_flat serializes the authoritative entries") {
    structure_params p = make_structure(2, false, 0.0, true);
    p.theta(0, 0) = 1.0;
    p.theta(0, 1) = p.theta(1, 0) = 2.0;
    p.theta(1, 1) = 3.0;
    CHECK(theta_flat(p) == std::vector<double>{1.0, 2.0, 3.0});

    structure_params d = make_structure(2, true, 0.25);
    CHECK(theta_flat(d).size() == 4);

    // Frozen diagonal still serializes n(n+1)/2 values (clamped diagonals).
    structure_params frozen = make_structure(2, false, 0.5, false);
    CHECK(theta_flat(frozen) == std::vector<double>{-k_theta_clamp, 0.5, -k_theta_clamp});
}

TEST_CASE("edge_prob evaluates both branch probabilities") {
    CHECK(edge_prob(1.3, 1) == doctest::Approx(sigmoid(1.3)).epsilon(1e-12));
    CHECK(edge_prob(1.3, 0) == doctest::Approx(sigmoid(-1.3)).epsilon(1e-12));
    CHECK(edge_prob(0.0, 1) == doctest::Approx(0.5));
}
